#include "dualfpc/surface.hpp"

#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>

#include "dualfpc/ops.hpp"

namespace dualfpc {

const Definition* SourceFile::find(const std::string& name) const {
  for (const auto& d : defs)
    if (d.name == name) return &d;
  return nullptr;
}

const Definition* SourceFile::entry() const {
  if (const auto* m = find("main")) return m;
  return defs.empty() ? nullptr : &defs.back();
}

namespace {

enum class Tok {
  Ident, Number, ZeroTan, Basis, Proj,
  LParen, RParen, LBracket, RBracket, Comma, Colon, Semi2, Dot, Eq, Bar,
  Arrow, Plus, Minus, Star, Slash, Less, PlusDot, StarDot,
  KwFun, KwLet, KwIn, KwCase, KwOf, KwInl, KwInr, KwRoll, KwUnroll, KwSign,
  KwIf, KwThen, KwElse, KwFix, KwIterate, KwFrom, KwMu, KwReal, KwTangent,
  KwUnit, KwVoid, KwType, KwDef,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  int index = 0;  // Basis/Proj payload
  int line = 1, col = 1;
};

const std::map<std::string, Tok> kKeywords = {
    {"fun", Tok::KwFun}, {"let", Tok::KwLet}, {"in", Tok::KwIn},
    {"case", Tok::KwCase}, {"of", Tok::KwOf}, {"inl", Tok::KwInl},
    {"inr", Tok::KwInr}, {"roll", Tok::KwRoll}, {"unroll", Tok::KwUnroll},
    {"sign", Tok::KwSign}, {"if", Tok::KwIf}, {"then", Tok::KwThen},
    {"else", Tok::KwElse}, {"fix", Tok::KwFix}, {"iterate", Tok::KwIterate},
    {"from", Tok::KwFrom}, {"mu", Tok::KwMu}, {"real", Tok::KwReal},
    {"tangent", Tok::KwTangent}, {"unit", Tok::KwUnit}, {"void", Tok::KwVoid},
    {"type", Tok::KwType}, {"def", Tok::KwDef},
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : src_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      Token t = next_token();
      out.push_back(t);
      if (t.kind == Tok::End) break;
    }
    return out;
  }

 private:
  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line_, col_); }

  char peek(size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  char advance() {
    char c = src_[pos_++];
    if (c == '\n') { ++line_; col_ = 1; } else { ++col_; }
    return c;
  }

  void skip_trivia() {
    for (;;) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { advance(); continue; }
      if (c == '-' && peek(1) == '-') {
        while (peek() && peek() != '\n') advance();
        continue;
      }
      break;
    }
  }

  Token tok(Tok k, std::string text = "") {
    Token t;
    t.kind = k;
    t.text = std::move(text);
    t.line = line_;
    t.col = col_;
    return t;
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }

  Token next_token() {
    if (pos_ >= src_.size()) return tok(Tok::End);
    Token t = tok(Tok::End);
    char c = peek();

    if (std::isdigit(static_cast<unsigned char>(c))) return lex_number(t);
    if (ident_start(c)) return lex_ident(t);

    advance();
    switch (c) {
      case '(': t.kind = Tok::LParen; return t;
      case ')': t.kind = Tok::RParen; return t;
      case '[': t.kind = Tok::LBracket; return t;
      case ']': t.kind = Tok::RBracket; return t;
      case ',': t.kind = Tok::Comma; return t;
      case ':': t.kind = Tok::Colon; return t;
      case '.': t.kind = Tok::Dot; return t;
      case '=': t.kind = Tok::Eq; return t;
      case '|': t.kind = Tok::Bar; return t;
      case '<': t.kind = Tok::Less; return t;
      case ';':
        if (peek() == ';') { advance(); t.kind = Tok::Semi2; return t; }
        fail("stray ';' (definitions end with ';;')");
      case '/': t.kind = Tok::Slash; return t;
      case '+':
        if (peek() == '.') { advance(); t.kind = Tok::PlusDot; return t; }
        t.kind = Tok::Plus; return t;
      case '*':
        if (peek() == '.') { advance(); t.kind = Tok::StarDot; return t; }
        t.kind = Tok::Star; return t;
      case '-':
        if (peek() == '>') { advance(); t.kind = Tok::Arrow; return t; }
        t.kind = Tok::Minus; return t;
      default:
        fail(std::string("unexpected character '") + c + "'");
    }
  }

  Token lex_number(Token t) {
    size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    // "0t" is the tangent zero literal
    if (pos_ - start == 1 && src_[start] == '0' && peek() == 't' && !ident_char(peek(1))) {
      advance();
      t.kind = Tok::ZeroTan;
      return t;
    }
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    if (peek() == 'e' || peek() == 'E') {
      size_t mark = pos_;
      advance();
      if (peek() == '+' || peek() == '-') advance();
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      } else {
        pos_ = mark;  // not an exponent; restore (column drift is harmless here)
      }
    }
    if (ident_start(peek())) fail("malformed number literal");
    t.kind = Tok::Number;
    t.text = src_.substr(start, pos_ - start);
    t.number = std::strtod(t.text.c_str(), nullptr);
    return t;
  }

  Token lex_ident(Token t) {
    size_t start = pos_;
    while (ident_char(peek())) advance();
    std::string name = src_.substr(start, pos_ - start);
    // basis elements e#i and projection handlers p#i
    if ((name == "e" || name == "p") && peek() == '#') {
      advance();
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected an index after '#'");
      size_t istart = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      t.kind = name == "e" ? Tok::Basis : Tok::Proj;
      t.index = std::atoi(src_.substr(istart, pos_ - istart).c_str());
      if (t.index < 1) fail("index after '#' must be >= 1");
      return t;
    }
    auto kw = kKeywords.find(name);
    if (kw != kKeywords.end()) { t.kind = kw->second; return t; }
    t.kind = Tok::Ident;
    t.text = std::move(name);
    return t;
  }
};

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(Lexer(text).run()) {
    ensure_default_ops();
  }

  SourceFile file() {
    SourceFile out;
    while (!at(Tok::End)) {
      if (accept(Tok::KwType)) {
        auto name = expect_ident("type alias name");
        reserve_check(name);
        if (aliases_.count(name)) fail("duplicate type alias '" + name + "'");
        expect(Tok::Eq, "'='");
        auto t = type();
        expect(Tok::Semi2, "';;'");
        aliases_.emplace(std::move(name), std::move(t));
        continue;
      }
      expect(Tok::KwDef, "'def' or 'type'");
      auto name = expect_ident("definition name");
      reserve_check(name);
      if (out.find(name)) fail("duplicate definition '" + name + "'");
      expect(Tok::Colon, "':'");
      auto t = type();
      expect(Tok::Eq, "'='");
      auto body = term();
      expect(Tok::Semi2, "';;'");
      out.defs.push_back({std::move(name), std::move(t), std::move(body)});
    }
    return out;
  }

  TermRef single_term() {
    auto t = term();
    expect(Tok::End, "end of input");
    return t;
  }

  TypeRef single_type() {
    auto t = type();
    expect(Tok::End, "end of input");
    return t;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::map<std::string, TypeRef> aliases_;
  NameSet bound_tyvars_;

  const Token& cur() const { return toks_[pos_]; }
  bool at(Tok k) const { return cur().kind == k; }
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, cur().line, cur().col); }

  Token take() { return toks_[pos_++]; }
  bool accept(Tok k) {
    if (!at(k)) return false;
    ++pos_;
    return true;
  }
  void expect(Tok k, const std::string& what) {
    if (!accept(k)) fail("expected " + what);
  }
  std::string expect_ident(const std::string& what) {
    if (!at(Tok::Ident)) fail("expected " + what);
    return take().text;
  }

  void reserve_check(const std::string& name) {
    if (OpRegistry::instance().lookup(name))
      fail("'" + name + "' is a primitive op and cannot be bound");
  }

  std::string binder() {
    auto name = expect_ident("a binder name");
    reserve_check(name);
    return name;
  }

  // ---- types ----

  TypeRef type() {
    auto lhs = type_sum();
    if (accept(Tok::Arrow)) return t_arrow(std::move(lhs), type());
    return lhs;
  }

  TypeRef type_sum() {
    auto t = type_prod();
    while (accept(Tok::Plus)) t = t_sum(std::move(t), type_prod());
    return t;
  }

  TypeRef type_prod() {
    auto t = type_atom();
    while (accept(Tok::Star)) t = t_prod(std::move(t), type_atom());
    return t;
  }

  TypeRef type_atom() {
    if (accept(Tok::KwReal)) return t_real();
    if (accept(Tok::KwTangent)) return t_tangent();
    if (accept(Tok::KwUnit)) return t_unit();
    if (accept(Tok::KwVoid)) return t_void();
    if (accept(Tok::LParen)) {
      auto t = type();
      expect(Tok::RParen, "')'");
      return t;
    }
    if (accept(Tok::KwMu)) {
      auto name = expect_ident("a type variable");
      expect(Tok::Dot, "'.'");
      bool already = bound_tyvars_.count(name) > 0;
      bound_tyvars_.insert(name);
      auto body = type();
      if (!already) bound_tyvars_.erase(name);
      return t_mu(std::move(name), std::move(body));
    }
    if (at(Tok::Ident)) {
      auto name = take().text;
      if (bound_tyvars_.count(name)) return t_var(name);
      auto alias = aliases_.find(name);
      if (alias != aliases_.end()) return alias->second;
      fail("unknown type name '" + name + "'");
    }
    fail("expected a type");
  }

  // ---- terms ----

  TermRef term() {
    switch (cur().kind) {
      case Tok::KwFun: return lambda();
      case Tok::KwLet: return let_term();
      case Tok::KwCase: return case_term();
      case Tok::KwIf: return if_term();
      case Tok::KwFix: return fix_term();
      case Tok::KwIterate: return iterate_term();
      default: return comparison();
    }
  }

  TermRef lambda() {
    expect(Tok::KwFun, "'fun'");
    struct Binder { std::string name; std::optional<TypeRef> annot; };
    std::vector<Binder> binders;
    for (;;) {
      if (at(Tok::Ident)) {
        binders.push_back({binder(), std::nullopt});
      } else if (at(Tok::LParen)) {
        expect(Tok::LParen, "'('");
        auto name = binder();
        expect(Tok::Colon, "':'");
        auto annot = type();
        expect(Tok::RParen, "')'");
        binders.push_back({std::move(name), std::move(annot)});
      } else {
        break;
      }
    }
    if (binders.empty()) fail("expected a parameter after 'fun'");
    expect(Tok::Arrow, "'->'");
    auto body = term();
    for (auto it = binders.rbegin(); it != binders.rend(); ++it)
      body = it->annot ? m_lam(it->name, *it->annot, std::move(body))
                       : m_lam(it->name, std::move(body));
    return body;
  }

  TermRef let_term() {
    expect(Tok::KwLet, "'let'");
    auto name = binder();
    std::optional<TypeRef> annot;
    if (accept(Tok::Colon)) annot = type();
    expect(Tok::Eq, "'='");
    auto bound = term();
    expect(Tok::KwIn, "'in'");
    auto body = term();
    // an annotated let checks its binding against the annotation
    if (annot) bound = ascribe(std::move(bound), *annot);
    return m_let(std::move(name), std::move(bound), std::move(body));
  }

  TermRef case_term() {
    expect(Tok::KwCase, "'case'");
    auto scrut = term();
    expect(Tok::KwOf, "'of'");
    if (accept(Tok::KwInl)) {
      auto ln = binder();
      expect(Tok::Arrow, "'->'");
      auto lb = term();
      expect(Tok::Bar, "'|'");
      expect(Tok::KwInr, "'inr'");
      auto rn = binder();
      expect(Tok::Arrow, "'->'");
      auto rb = term();
      return m_case(std::move(scrut), std::move(ln), std::move(lb), std::move(rn), std::move(rb));
    }
    if (accept(Tok::LParen)) {
      auto n1 = binder();
      expect(Tok::Comma, "','");
      auto n2 = binder();
      expect(Tok::RParen, "')'");
      expect(Tok::Arrow, "'->'");
      auto body = term();
      return m_pairmatch(std::move(scrut), std::move(n1), std::move(n2), std::move(body));
    }
    if (accept(Tok::KwRoll)) {
      auto n = binder();
      expect(Tok::Arrow, "'->'");
      auto body = term();
      return m_unroll(std::move(scrut), std::move(n), std::move(body));
    }
    if (accept(Tok::KwVoid)) return m_voidmatch(std::move(scrut));
    fail("expected 'inl', '(', 'roll' or 'void' after 'of'");
  }

  // if c then a else b  is  case sign c of _ -> a | _ -> b
  TermRef if_term() {
    expect(Tok::KwIf, "'if'");
    auto cond = term();
    expect(Tok::KwThen, "'then'");
    auto then_branch = term();
    expect(Tok::KwElse, "'else'");
    auto else_branch = term();
    return m_case(m_sign(std::move(cond)), "_", std::move(then_branch), "_",
                  std::move(else_branch));
  }

  // fix (f : a -> b) x -> body  is the CBV fixpoint through mu w. w -> a -> b:
  // the rolled self-applier is built once and applied to itself.
  TermRef fix_term() {
    expect(Tok::KwFix, "'fix'");
    expect(Tok::LParen, "'('");
    auto fname = binder();
    expect(Tok::Colon, "':'");
    auto fn_type = type();
    expect(Tok::RParen, "')'");
    const auto* arrow = std::get_if<ty::Arrow>(&fn_type->node);
    if (!arrow) fail("fix annotation must be a function type");
    auto param = binder();
    expect(Tok::Arrow, "'->'");
    auto body = term();
    return make_fix(fname, arrow->arg, arrow->res, param, std::move(body));
  }

  // type ascription: (fun (tmp : ty) -> tmp) t, so t sits in a checking position
  static TermRef ascribe(TermRef t, TypeRef ty) {
    return m_app(m_lam("asc", std::move(ty), m_var("asc")), std::move(t));
  }

  TermRef make_fix(const std::string& fname, const TypeRef& dom, const TypeRef& cod,
                   const std::string& param, TermRef body) {
    body = ascribe(std::move(body), cod);
    NameSupply names;
    names.used = all_names(body);
    names.used.insert(fname);
    names.used.insert(param);
    auto self = names.fresh("self");
    auto unrolled = names.fresh("u");
    auto arg = names.fresh("arg");

    auto used_tyvars = all_type_vars(dom);
    for (const auto& v : all_type_vars(cod)) used_tyvars.insert(v);
    auto loop_var = fresh_name(used_tyvars, "w");
    auto loop_ty = t_mu(loop_var, t_arrow(t_var(loop_var), t_arrow(dom, cod)));

    // fun (self : loop) (x : dom) -> let f = fun arg -> (unroll self) self arg in body
    auto recurse = m_lam(arg, dom,
                         m_app(m_app(m_unroll(m_var(self), unrolled, m_var(unrolled)),
                                     m_var(self)),
                               m_var(arg)));
    auto stepper = m_lam(self, loop_ty,
                         m_lam(param, dom, m_let(fname, std::move(recurse), std::move(body))));
    return m_app(stepper, m_roll(stepper, loop_ty));
  }

  // iterate t : a + b from x = v   loops t (binding x) from v while it
  // produces inl, and yields the inr payload
  TermRef iterate_term() {
    expect(Tok::KwIterate, "'iterate'");
    auto step = term();
    expect(Tok::Colon, "':'");
    auto step_type = type();
    expect(Tok::KwFrom, "'from'");
    auto state = binder();
    expect(Tok::Eq, "'='");
    auto init = term();

    const auto* sum = std::get_if<ty::Sum>(&step_type->node);
    if (!sum) fail("iterate annotation must be a sum type (continue + done)");
    step = ascribe(std::move(step), step_type);

    NameSupply names;
    names.used = all_names(step);
    names.used.insert(state);
    auto loop = names.fresh("loop");
    auto next = names.fresh(state);
    auto result = names.fresh("r");

    auto body = m_case(std::move(step), next, m_app(m_var(loop), m_var(next)), result,
                       m_var(result));
    return m_app(make_fix(loop, sum->left, sum->right, state, std::move(body)),
                 std::move(init));
  }

  // a < b  is  sign (b - a); chains test every adjacent pair
  TermRef comparison() {
    auto lhs = additive();
    if (!at(Tok::Less)) return lhs;
    TermRef verdict;
    while (accept(Tok::Less)) {
      auto rhs = additive();
      auto test = m_sign(m_primop("-", {rhs, lhs}));
      auto still_false = ascribe(m_inl(m_unit()), t_sum(t_unit(), t_unit()));
      verdict = verdict ? m_case(std::move(verdict), "_", std::move(still_false), "_",
                                 std::move(test))
                        : std::move(test);
      lhs = std::move(rhs);
    }
    return verdict;
  }

  TermRef additive() {
    auto t = multiplicative();
    for (;;) {
      if (accept(Tok::Plus)) t = m_primop("+", {std::move(t), multiplicative()});
      else if (accept(Tok::Minus)) t = m_primop("-", {std::move(t), multiplicative()});
      else if (accept(Tok::PlusDot)) t = m_addtan(std::move(t), multiplicative());
      else return t;
    }
  }

  TermRef multiplicative() {
    auto t = unary();
    for (;;) {
      if (accept(Tok::Star)) t = m_primop("*", {std::move(t), unary()});
      else if (accept(Tok::Slash)) t = m_primop("/", {std::move(t), unary()});
      else if (accept(Tok::StarDot)) t = m_scaletan(std::move(t), unary());
      else return t;
    }
  }

  TermRef unary() {
    if (accept(Tok::Minus)) {
      if (at(Tok::Number)) return m_const(-take().number);
      return m_primop("neg", {atom()});
    }
    if (accept(Tok::KwSign)) return m_sign(atom());
    if (accept(Tok::KwInl)) return m_inl(atom());
    if (accept(Tok::KwInr)) return m_inr(atom());
    if (accept(Tok::KwRoll)) {
      expect(Tok::LBracket, "'['");
      auto annot = type();
      expect(Tok::RBracket, "']'");
      if (!std::holds_alternative<ty::Mu>(annot->node))
        fail("roll annotation must be a mu type");
      return m_roll(atom(), std::move(annot));
    }
    if (accept(Tok::KwUnroll)) return m_unroll(atom(), "u", m_var("u"));
    if (at(Tok::Proj)) {
      auto t = take();
      return m_projhandler(t.index, atom());
    }
    // named unary primitive ops (exp, log, ...) applied prefix
    if (at(Tok::Ident)) {
      const auto* sig = OpRegistry::instance().lookup(cur().text);
      if (sig) {
        auto op = take().text;
        if (sig->arity == 0) return m_primop(op, {});
        if (sig->arity != 1) fail("op '" + op + "' is used through its infix form");
        return m_primop(op, {atom()});
      }
    }
    return application();
  }

  TermRef application() {
    auto t = atom();
    while (starts_atom()) t = m_app(std::move(t), atom());
    return t;
  }

  bool starts_atom() const {
    switch (cur().kind) {
      case Tok::Number:
      case Tok::Ident:
      case Tok::ZeroTan:
      case Tok::Basis:
      case Tok::LParen:
        return true;
      default:
        return false;
    }
  }

  TermRef atom() {
    if (at(Tok::Number)) return m_const(take().number);
    if (at(Tok::ZeroTan)) { take(); return m_zerotan(); }
    if (at(Tok::Basis)) return m_basis(take().index);
    if (at(Tok::Ident)) {
      if (OpRegistry::instance().lookup(cur().text))
        fail("op '" + cur().text + "' must be applied to an argument");
      return m_var(take().text);
    }
    if (accept(Tok::LParen)) {
      if (accept(Tok::RParen)) return m_unit();
      auto first = term();
      if (accept(Tok::Comma)) {
        auto second = term();
        expect(Tok::RParen, "')'");
        return m_pair(std::move(first), std::move(second));
      }
      expect(Tok::RParen, "')'");
      return first;
    }
    fail("expected a term");
  }
};

} // namespace

SourceFile parse_file(const std::string& text) { return Parser(text).file(); }

TermRef parse_term_text(const std::string& text) { return Parser(text).single_term(); }

TypeRef parse_type_text(const std::string& text) { return Parser(text).single_type(); }

void check_file(const SourceFile& file, Lang lang) {
  Context ctx;
  for (const auto& def : file.defs) {
    if (lang == Lang::source) {
      if (type_mentions_tangent(def.declared_type))
        throw TypeError("tangent type in a source-language definition", {def.name});
      if (!is_source_term(def.term))
        throw TypeError("target-only construct in source mode", {def.name});
    }
    if (!kind_check(ctx.tyvars, def.declared_type))
      throw TypeError("unbound type variable in declared type", {def.name});
    try {
      check(ctx, def.term, def.declared_type, lang);
    } catch (TypeError& e) {
      e.path.insert(e.path.begin(), "definition '" + def.name + "'");
      throw;
    }
    ctx = ctx.extended(def.name, def.declared_type);
  }
}

TermRef linked_term(const SourceFile& file, const std::string& def_name) {
  size_t idx = file.defs.size();
  for (size_t i = 0; i < file.defs.size(); ++i)
    if (file.defs[i].name == def_name) { idx = i; break; }
  if (idx == file.defs.size())
    throw std::invalid_argument("no definition named '" + def_name + "'");
  TermRef body = file.defs[idx].term;
  for (size_t i = idx; i-- > 0;)
    body = m_let(file.defs[i].name, file.defs[i].term, std::move(body));
  return body;
}

} // namespace dualfpc

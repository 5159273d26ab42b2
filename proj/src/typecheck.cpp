#include "dualfpc/typecheck.hpp"

#include "dualfpc/ops.hpp"
#include "dualfpc/pretty.hpp"

namespace dualfpc {

std::string TypeError::render() const {
  std::string out = what();
  if (!path.empty()) {
    out += "\n  at: ";
    for (size_t i = 0; i < path.size(); ++i) {
      if (i) out += " > ";
      out += path[i];
    }
  }
  return out;
}

bool kind_check(const NameSet& delta, const TypeRef& type) {
  for (const auto& v : free_type_vars(type))
    if (!delta.count(v)) return false;
  return true;
}

bool is_positive_type(const TypeRef& type) {
  return std::visit(overloaded{
    [](const ty::Real&) { return true; },
    [](const ty::Unit&) { return true; },
    [](const ty::Void&) { return true; },
    [](const ty::Var&) { return true; },
    [](const ty::Sum& s) { return is_positive_type(s.left) && is_positive_type(s.right); },
    [](const ty::Prod& p) { return is_positive_type(p.left) && is_positive_type(p.right); },
    [](const ty::Mu& m) { return is_positive_type(m.body); },
    [](const ty::Tangent&) { return false; },
    [](const ty::Arrow&) { return false; },
  }, type->node);
}

TypeRef real_power(int i) {
  if (i < 1) throw std::invalid_argument("real_power: index must be >= 1");
  TypeRef t = t_real();
  for (int k = 1; k < i; ++k) t = t_prod(t, t_real());
  return t;
}

namespace {

class Checker {
 public:
  explicit Checker(Lang lang) : lang_(lang) {}

  TypeRef synth(const Context& ctx, const TermRef& t) {
    return std::visit(overloaded{
      [&](const tm::Var& v) -> TypeRef {
        const auto* ty = ctx.lookup(v.name);
        if (!ty) fail("unbound variable '" + v.name + "'");
        return *ty;
      },
      [&](const tm::Let& l) -> TypeRef {
        auto bound = guarded("binding of '" + l.name + "'", [&] { return synth(ctx, l.bound); });
        return guarded("body of let '" + l.name + "'",
                       [&] { return synth(ctx.extended(l.name, bound), l.body); });
      },
      [&](const tm::Const&) -> TypeRef { return t_real(); },
      [&](const tm::PrimOp& p) -> TypeRef {
        check_primop(ctx, p);
        return t_real();
      },
      [&](const tm::Sign& s) -> TypeRef {
        guarded("argument of sign", [&] { check_against(ctx, s.arg, t_real()); return nullptr; });
        return t_sum(t_unit(), t_unit());
      },
      [&](const tm::Inl&) -> TypeRef {
        fail("cannot infer a sum type for bare inl; use a checking position");
        return nullptr;
      },
      [&](const tm::Inr&) -> TypeRef {
        fail("cannot infer a sum type for bare inr; use a checking position");
        return nullptr;
      },
      [&](const tm::Case& c) -> TypeRef {
        auto scrut = scrutinee_sum(ctx, c);
        auto lt = guarded("left branch of case", [&] {
          return synth(ctx.extended(c.left_name, scrut.left), c.left_body);
        });
        auto rt = guarded("right branch of case", [&] {
          return synth(ctx.extended(c.right_name, scrut.right), c.right_body);
        });
        if (!alpha_eq(lt, rt))
          fail("case branches disagree: " + pretty(lt) + " vs " + pretty(rt));
        return lt;
      },
      [&](const tm::Unit&) -> TypeRef { return t_unit(); },
      [&](const tm::Pair& p) -> TypeRef {
        auto a = guarded("first pair component", [&] { return synth(ctx, p.first); });
        auto b = guarded("second pair component", [&] { return synth(ctx, p.second); });
        return t_prod(a, b);
      },
      [&](const tm::PairMatch& p) -> TypeRef {
        auto prod = scrutinee_prod(ctx, p);
        return guarded("body of pair match", [&] {
          return synth(ctx.extended(p.first_name, prod.left).extended(p.second_name, prod.right),
                       p.body);
        });
      },
      [&](const tm::Lam& l) -> TypeRef {
        if (!l.param_type)
          fail("cannot infer the parameter type of 'fun " + l.param +
               " -> ...'; annotate it or use a checking position");
        validate_annotation(ctx, *l.param_type);
        auto res = guarded("body of fun " + l.param, [&] {
          return synth(ctx.extended(l.param, *l.param_type), l.body);
        });
        return t_arrow(*l.param_type, res);
      },
      [&](const tm::App& a) -> TypeRef {
        auto fn = guarded("function position", [&] { return synth(ctx, a.fn); });
        const auto* arrow = std::get_if<ty::Arrow>(&fn->node);
        if (!arrow) fail("applied a non-function of type " + pretty(fn));
        guarded("argument position", [&] { check_against(ctx, a.arg, arrow->arg); return nullptr; });
        return arrow->res;
      },
      [&](const tm::Roll& r) -> TypeRef {
        validate_annotation(ctx, r.mu_type);
        if (!std::holds_alternative<ty::Mu>(r.mu_type->node))
          fail("roll annotation must be a mu type, got " + pretty(r.mu_type));
        guarded("rolled term", [&] { check_against(ctx, r.arg, unfold_mu(r.mu_type)); return nullptr; });
        return r.mu_type;
      },
      [&](const tm::Unroll& u) -> TypeRef {
        auto unfolded = scrutinee_mu(ctx, u.scrutinee);
        return guarded("body of roll match", [&] {
          return synth(ctx.extended(u.name, unfolded), u.body);
        });
      },
      [&](const tm::VoidMatch& v) -> TypeRef {
        scrutinee_void(ctx, v.scrutinee);
        fail("cannot infer a result type for a void match; use a checking position");
        return nullptr;
      },
      [&](const tm::Basis&) -> TypeRef { target_only("basis element"); return t_tangent(); },
      [&](const tm::ZeroTan&) -> TypeRef { target_only("tangent zero"); return t_tangent(); },
      [&](const tm::AddTan& a) -> TypeRef {
        target_only("tangent addition");
        guarded("left tangent summand", [&] { check_against(ctx, a.left, t_tangent()); return nullptr; });
        guarded("right tangent summand", [&] { check_against(ctx, a.right, t_tangent()); return nullptr; });
        return t_tangent();
      },
      [&](const tm::ScaleTan& s) -> TypeRef {
        target_only("tangent scaling");
        guarded("scaled tangent", [&] { check_against(ctx, s.tan, t_tangent()); return nullptr; });
        guarded("scalar factor", [&] { check_against(ctx, s.scale, t_real()); return nullptr; });
        return t_tangent();
      },
      [&](const tm::ProjHandler& p) -> TypeRef {
        target_only("projection handler");
        guarded("handled tangent", [&] { check_against(ctx, p.arg, t_tangent()); return nullptr; });
        return real_power(p.index);
      },
    }, t->node);
  }

  void check_against(const Context& ctx, const TermRef& t, const TypeRef& expected) {
    std::visit(overloaded{
      [&](const tm::Let& l) {
        auto bound = guarded("binding of '" + l.name + "'", [&] { return synth(ctx, l.bound); });
        guarded("body of let '" + l.name + "'", [&] {
          check_against(ctx.extended(l.name, bound), l.body, expected);
          return nullptr;
        });
      },
      [&](const tm::Inl& s) {
        const auto* sum = std::get_if<ty::Sum>(&expected->node);
        if (!sum) fail("inl produces a sum, but " + pretty(expected) + " was expected");
        guarded("injected term", [&] { check_against(ctx, s.arg, sum->left); return nullptr; });
      },
      [&](const tm::Inr& s) {
        const auto* sum = std::get_if<ty::Sum>(&expected->node);
        if (!sum) fail("inr produces a sum, but " + pretty(expected) + " was expected");
        guarded("injected term", [&] { check_against(ctx, s.arg, sum->right); return nullptr; });
      },
      [&](const tm::Case& c) {
        auto scrut = scrutinee_sum(ctx, c);
        guarded("left branch of case", [&] {
          check_against(ctx.extended(c.left_name, scrut.left), c.left_body, expected);
          return nullptr;
        });
        guarded("right branch of case", [&] {
          check_against(ctx.extended(c.right_name, scrut.right), c.right_body, expected);
          return nullptr;
        });
      },
      [&](const tm::Pair& p) {
        const auto* prod = std::get_if<ty::Prod>(&expected->node);
        if (!prod) fail("a pair produces a product, but " + pretty(expected) + " was expected");
        guarded("first pair component", [&] { check_against(ctx, p.first, prod->left); return nullptr; });
        guarded("second pair component", [&] { check_against(ctx, p.second, prod->right); return nullptr; });
      },
      [&](const tm::PairMatch& p) {
        auto prod = scrutinee_prod(ctx, p);
        guarded("body of pair match", [&] {
          check_against(ctx.extended(p.first_name, prod.left).extended(p.second_name, prod.right),
                        p.body, expected);
          return nullptr;
        });
      },
      [&](const tm::Lam& l) {
        const auto* arrow = std::get_if<ty::Arrow>(&expected->node);
        if (!arrow) fail("a function was given where " + pretty(expected) + " was expected");
        if (l.param_type) {
          validate_annotation(ctx, *l.param_type);
          if (!alpha_eq(*l.param_type, arrow->arg))
            fail("parameter annotation " + pretty(*l.param_type) +
                 " does not match expected " + pretty(arrow->arg));
        }
        guarded("body of fun " + l.param, [&] {
          check_against(ctx.extended(l.param, arrow->arg), l.body, arrow->res);
          return nullptr;
        });
      },
      [&](const tm::Unroll& u) {
        auto unfolded = scrutinee_mu(ctx, u.scrutinee);
        guarded("body of roll match", [&] {
          check_against(ctx.extended(u.name, unfolded), u.body, expected);
          return nullptr;
        });
      },
      [&](const tm::VoidMatch& v) { scrutinee_void(ctx, v.scrutinee); },
      [&](const auto&) {
        auto actual = synth(ctx, t);
        if (!alpha_eq(actual, expected))
          fail("expected " + pretty(expected) + ", found " + pretty(actual));
      },
    }, t->node);
  }

 private:
  Lang lang_;
  std::vector<std::string> path_;

  [[noreturn]] void fail(const std::string& msg) { throw TypeError(msg, path_); }

  void target_only(const std::string& what) {
    if (lang_ == Lang::source) fail("target-only construct (" + what + ") in source mode");
  }

  void validate_annotation(const Context& ctx, const TypeRef& type) {
    if (lang_ == Lang::source && type_mentions_tangent(type))
      fail("tangent type in a source-language annotation");
    if (!kind_check(ctx.tyvars, type))
      fail("unbound type variable in " + pretty(type));
  }

  template <class F>
  TypeRef guarded(std::string segment, F body) {
    path_.push_back(std::move(segment));
    TypeRef r = body();
    path_.pop_back();
    return r;
  }

  void check_primop(const Context& ctx, const tm::PrimOp& p) {
    ensure_default_ops();
    const auto* sig = OpRegistry::instance().lookup(p.op);
    if (!sig) fail("unknown op symbol '" + p.op + "'");
    if (static_cast<int>(p.args.size()) != sig->arity)
      fail("op '" + p.op + "' expects " + std::to_string(sig->arity) + " arguments, got " +
           std::to_string(p.args.size()));
    for (size_t i = 0; i < p.args.size(); ++i)
      guarded("argument " + std::to_string(i + 1) + " of op " + p.op,
              [&] { check_against(ctx, p.args[i], t_real()); return nullptr; });
  }

  ty::Sum scrutinee_sum(const Context& ctx, const tm::Case& c) {
    auto s = guarded("case scrutinee", [&] { return synth(ctx, c.scrutinee); });
    const auto* sum = std::get_if<ty::Sum>(&s->node);
    if (!sum) fail("case scrutinee must be a sum, got " + pretty(s));
    return *sum;
  }

  ty::Prod scrutinee_prod(const Context& ctx, const tm::PairMatch& p) {
    auto s = guarded("pair-match scrutinee", [&] { return synth(ctx, p.scrutinee); });
    const auto* prod = std::get_if<ty::Prod>(&s->node);
    if (!prod) fail("pair match scrutinee must be a product, got " + pretty(s));
    return *prod;
  }

  TypeRef scrutinee_mu(const Context& ctx, const TermRef& scrut) {
    auto s = guarded("roll-match scrutinee", [&] { return synth(ctx, scrut); });
    if (!std::holds_alternative<ty::Mu>(s->node))
      fail("roll match scrutinee must have a mu type, got " + pretty(s));
    return unfold_mu(s);
  }

  void scrutinee_void(const Context& ctx, const TermRef& scrut) {
    auto s = guarded("void-match scrutinee", [&] { return synth(ctx, scrut); });
    if (!std::holds_alternative<ty::Void>(s->node))
      fail("void match scrutinee must have type void, got " + pretty(s));
  }
};

} // namespace

TypeRef typecheck(const Context& ctx, const TermRef& t, Lang lang) {
  return Checker(lang).synth(ctx, t);
}

void check(const Context& ctx, const TermRef& t, const TypeRef& expected, Lang lang) {
  Checker(lang).check_against(ctx, t, expected);
}

} // namespace dualfpc

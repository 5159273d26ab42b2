#include "dualfpc/ast.hpp"

#include <stdexcept>

namespace dualfpc {

namespace {
TypeRef mk(Type::Node n) { return std::make_shared<const Type>(Type{std::move(n)}); }
TermRef mk(Term::Node n) { return std::make_shared<const Term>(Term{std::move(n)}); }
} // namespace

TypeRef t_real() { static TypeRef t = mk(ty::Real{}); return t; }
TypeRef t_tangent() { static TypeRef t = mk(ty::Tangent{}); return t; }
TypeRef t_unit() { static TypeRef t = mk(ty::Unit{}); return t; }
TypeRef t_void() { static TypeRef t = mk(ty::Void{}); return t; }
TypeRef t_sum(TypeRef l, TypeRef r) { return mk(ty::Sum{std::move(l), std::move(r)}); }
TypeRef t_prod(TypeRef l, TypeRef r) { return mk(ty::Prod{std::move(l), std::move(r)}); }
TypeRef t_arrow(TypeRef a, TypeRef r) { return mk(ty::Arrow{std::move(a), std::move(r)}); }
TypeRef t_var(std::string n) { return mk(ty::Var{std::move(n)}); }
TypeRef t_mu(std::string b, TypeRef body) { return mk(ty::Mu{std::move(b), std::move(body)}); }

TermRef m_var(std::string n) { return mk(tm::Var{std::move(n)}); }
TermRef m_let(std::string n, TermRef a, TermRef b) { return mk(tm::Let{std::move(n), std::move(a), std::move(b)}); }
TermRef m_const(double v) { return mk(tm::Const{v}); }
TermRef m_primop(std::string op, std::vector<TermRef> args) { return mk(tm::PrimOp{std::move(op), std::move(args)}); }
TermRef m_sign(TermRef a) { return mk(tm::Sign{std::move(a)}); }
TermRef m_inl(TermRef a) { return mk(tm::Inl{std::move(a)}); }
TermRef m_inr(TermRef a) { return mk(tm::Inr{std::move(a)}); }
TermRef m_case(TermRef s, std::string ln, TermRef lb, std::string rn, TermRef rb) {
  return mk(tm::Case{std::move(s), std::move(ln), std::move(lb), std::move(rn), std::move(rb)});
}
TermRef m_unit() { static TermRef t = mk(tm::Unit{}); return t; }
TermRef m_pair(TermRef a, TermRef b) { return mk(tm::Pair{std::move(a), std::move(b)}); }
TermRef m_pairmatch(TermRef s, std::string n1, std::string n2, TermRef b) {
  return mk(tm::PairMatch{std::move(s), std::move(n1), std::move(n2), std::move(b)});
}
TermRef m_lam(std::string p, TermRef b) { return mk(tm::Lam{std::move(p), std::nullopt, std::move(b)}); }
TermRef m_lam(std::string p, TypeRef pt, TermRef b) { return mk(tm::Lam{std::move(p), std::move(pt), std::move(b)}); }
TermRef m_app(TermRef f, TermRef a) { return mk(tm::App{std::move(f), std::move(a)}); }
TermRef m_roll(TermRef a, TypeRef mu) { return mk(tm::Roll{std::move(a), std::move(mu)}); }
TermRef m_unroll(TermRef s, std::string n, TermRef b) { return mk(tm::Unroll{std::move(s), std::move(n), std::move(b)}); }
TermRef m_voidmatch(TermRef s) { return mk(tm::VoidMatch{std::move(s)}); }
TermRef m_basis(int i) {
  if (i < 1) throw std::invalid_argument("basis index must be >= 1");
  return mk(tm::Basis{i});
}
TermRef m_zerotan() { static TermRef t = mk(tm::ZeroTan{}); return t; }
TermRef m_addtan(TermRef l, TermRef r) { return mk(tm::AddTan{std::move(l), std::move(r)}); }
TermRef m_scaletan(TermRef t, TermRef s) { return mk(tm::ScaleTan{std::move(t), std::move(s)}); }
TermRef m_projhandler(int i, TermRef a) {
  if (i < 1) throw std::invalid_argument("projection index must be >= 1");
  return mk(tm::ProjHandler{i, std::move(a)});
}

namespace {

void collect_type_vars(const TypeRef& t, NameSet bound, NameSet& free, NameSet* all) {
  std::visit(overloaded{
    [&](const ty::Var& v) {
      if (all) all->insert(v.name);
      if (!bound.count(v.name)) free.insert(v.name);
    },
    [&](const ty::Mu& m) {
      if (all) all->insert(m.binder);
      auto inner = bound;
      inner.insert(m.binder);
      collect_type_vars(m.body, std::move(inner), free, all);
    },
    [&](const ty::Sum& s) {
      collect_type_vars(s.left, bound, free, all);
      collect_type_vars(s.right, bound, free, all);
    },
    [&](const ty::Prod& p) {
      collect_type_vars(p.left, bound, free, all);
      collect_type_vars(p.right, bound, free, all);
    },
    [&](const ty::Arrow& a) {
      collect_type_vars(a.arg, bound, free, all);
      collect_type_vars(a.res, bound, free, all);
    },
    [&](const auto&) {},
  }, t->node);
}

void collect_vars(const TermRef& t, NameSet bound, NameSet& free, NameSet* all) {
  auto rec = [&](const TermRef& s) { collect_vars(s, bound, free, all); };
  auto rec_bind = [&](const TermRef& s, std::initializer_list<std::string> names) {
    auto inner = bound;
    for (const auto& n : names) {
      if (all) all->insert(n);
      inner.insert(n);
    }
    collect_vars(s, std::move(inner), free, all);
  };
  std::visit(overloaded{
    [&](const tm::Var& v) {
      if (all) all->insert(v.name);
      if (!bound.count(v.name)) free.insert(v.name);
    },
    [&](const tm::Let& l) { rec(l.bound); rec_bind(l.body, {l.name}); },
    [&](const tm::Const&) {},
    [&](const tm::PrimOp& p) { for (const auto& a : p.args) rec(a); },
    [&](const tm::Sign& s) { rec(s.arg); },
    [&](const tm::Inl& s) { rec(s.arg); },
    [&](const tm::Inr& s) { rec(s.arg); },
    [&](const tm::Case& c) {
      rec(c.scrutinee);
      rec_bind(c.left_body, {c.left_name});
      rec_bind(c.right_body, {c.right_name});
    },
    [&](const tm::Unit&) {},
    [&](const tm::Pair& p) { rec(p.first); rec(p.second); },
    [&](const tm::PairMatch& p) { rec(p.scrutinee); rec_bind(p.body, {p.first_name, p.second_name}); },
    [&](const tm::Lam& l) { rec_bind(l.body, {l.param}); },
    [&](const tm::App& a) { rec(a.fn); rec(a.arg); },
    [&](const tm::Roll& r) { rec(r.arg); },
    [&](const tm::Unroll& u) { rec(u.scrutinee); rec_bind(u.body, {u.name}); },
    [&](const tm::VoidMatch& v) { rec(v.scrutinee); },
    [&](const tm::Basis&) {},
    [&](const tm::ZeroTan&) {},
    [&](const tm::AddTan& a) { rec(a.left); rec(a.right); },
    [&](const tm::ScaleTan& s) { rec(s.tan); rec(s.scale); },
    [&](const tm::ProjHandler& p) { rec(p.arg); },
  }, t->node);
}

} // namespace

NameSet free_type_vars(const TypeRef& t) {
  NameSet free;
  collect_type_vars(t, {}, free, nullptr);
  return free;
}

NameSet all_type_vars(const TypeRef& t) {
  NameSet free, all;
  collect_type_vars(t, {}, free, &all);
  return all;
}

NameSet free_vars(const TermRef& t) {
  NameSet free;
  collect_vars(t, {}, free, nullptr);
  return free;
}

NameSet all_names(const TermRef& t) {
  NameSet free, all;
  collect_vars(t, {}, free, &all);
  for (const auto& n : free) all.insert(n);
  return all;
}

std::string fresh_name(const NameSet& avoid, const std::string& hint) {
  if (!avoid.count(hint)) return hint;
  for (long i = 1;; ++i) {
    std::string candidate = hint + std::to_string(i);
    if (!avoid.count(candidate)) return candidate;
  }
}

TypeRef subst_type(const TypeRef& t, const std::string& var, const TypeRef& repl) {
  return std::visit(overloaded{
    [&](const ty::Var& v) -> TypeRef { return v.name == var ? repl : t; },
    [&](const ty::Mu& m) -> TypeRef {
      if (m.binder == var) return t;  // shadowed
      auto repl_free = free_type_vars(repl);
      if (repl_free.count(m.binder)) {
        // rename binder away from the replacement's free variables
        auto avoid = repl_free;
        for (const auto& n : free_type_vars(m.body)) avoid.insert(n);
        avoid.insert(var);
        auto b2 = fresh_name(avoid, m.binder);
        auto body2 = subst_type(m.body, m.binder, t_var(b2));
        return t_mu(b2, subst_type(body2, var, repl));
      }
      return t_mu(m.binder, subst_type(m.body, var, repl));
    },
    [&](const ty::Sum& s) -> TypeRef {
      return t_sum(subst_type(s.left, var, repl), subst_type(s.right, var, repl));
    },
    [&](const ty::Prod& p) -> TypeRef {
      return t_prod(subst_type(p.left, var, repl), subst_type(p.right, var, repl));
    },
    [&](const ty::Arrow& a) -> TypeRef {
      return t_arrow(subst_type(a.arg, var, repl), subst_type(a.res, var, repl));
    },
    [&](const auto&) -> TypeRef { return t; },
  }, t->node);
}

namespace {

// Renames binder `name` (bound in `body`) out of the way of `repl`'s free
// variables and of `var` itself; returns the new name and rewritten body.
std::pair<std::string, TermRef> avoid_capture(const std::string& name, TermRef body,
                                              const std::string& var,
                                              const NameSet& repl_free) {
  if (name != var && repl_free.count(name)) {
    auto avoid = repl_free;
    for (const auto& n : free_vars(body)) avoid.insert(n);
    avoid.insert(var);
    auto fresh = fresh_name(avoid, name);
    return {fresh, subst_term(body, name, m_var(fresh))};
  }
  return {name, std::move(body)};
}

} // namespace

TermRef subst_term(const TermRef& t, const std::string& var, const TermRef& repl) {
  const auto repl_free = free_vars(repl);
  // under a binder that shadows var, the body is untouched
  auto under = [&](const std::string& name, const TermRef& body) -> std::pair<std::string, TermRef> {
    if (name == var) return {name, body};
    auto [n2, b2] = avoid_capture(name, body, var, repl_free);
    return {n2, subst_term(b2, var, repl)};
  };
  auto rec = [&](const TermRef& s) { return subst_term(s, var, repl); };
  return std::visit(overloaded{
    [&](const tm::Var& v) -> TermRef { return v.name == var ? repl : t; },
    [&](const tm::Let& l) -> TermRef {
      auto [n, b] = under(l.name, l.body);
      return m_let(n, rec(l.bound), b);
    },
    [&](const tm::Const&) -> TermRef { return t; },
    [&](const tm::PrimOp& p) -> TermRef {
      std::vector<TermRef> args;
      args.reserve(p.args.size());
      for (const auto& a : p.args) args.push_back(rec(a));
      return m_primop(p.op, std::move(args));
    },
    [&](const tm::Sign& s) -> TermRef { return m_sign(rec(s.arg)); },
    [&](const tm::Inl& s) -> TermRef { return m_inl(rec(s.arg)); },
    [&](const tm::Inr& s) -> TermRef { return m_inr(rec(s.arg)); },
    [&](const tm::Case& c) -> TermRef {
      auto [ln, lb] = under(c.left_name, c.left_body);
      auto [rn, rb] = under(c.right_name, c.right_body);
      return m_case(rec(c.scrutinee), ln, lb, rn, rb);
    },
    [&](const tm::Unit&) -> TermRef { return t; },
    [&](const tm::Pair& p) -> TermRef { return m_pair(rec(p.first), rec(p.second)); },
    [&](const tm::PairMatch& p) -> TermRef {
      // two binders; handle shadowing of either
      if (p.first_name == var || p.second_name == var)
        return m_pairmatch(rec(p.scrutinee), p.first_name, p.second_name, p.body);
      auto body = p.body;
      auto n1 = p.first_name;
      auto n2 = p.second_name;
      // when the binders coincide, the second shadows the first: the first
      // binds nothing in the body, so rename it without rewriting
      if (n1 == n2 && repl_free.count(n1)) {
        auto avoid = repl_free;
        for (const auto& n : free_vars(body)) avoid.insert(n);
        avoid.insert(var);
        avoid.insert(n2);
        n1 = fresh_name(avoid, n1);
      } else if (repl_free.count(n1)) {
        auto avoid = repl_free;
        for (const auto& n : free_vars(body)) avoid.insert(n);
        avoid.insert(var);
        avoid.insert(n2);
        auto f = fresh_name(avoid, n1);
        body = subst_term(body, n1, m_var(f));
        n1 = f;
      }
      if (repl_free.count(n2)) {
        auto avoid = repl_free;
        for (const auto& n : free_vars(body)) avoid.insert(n);
        avoid.insert(var);
        avoid.insert(n1);
        auto f = fresh_name(avoid, n2);
        body = subst_term(body, n2, m_var(f));
        n2 = f;
      }
      return m_pairmatch(rec(p.scrutinee), n1, n2, subst_term(body, var, repl));
    },
    [&](const tm::Lam& l) -> TermRef {
      if (l.param == var) return t;
      auto [n, b] = avoid_capture(l.param, l.body, var, repl_free);
      auto body = subst_term(b, var, repl);
      return l.param_type ? m_lam(n, *l.param_type, body) : m_lam(n, body);
    },
    [&](const tm::App& a) -> TermRef { return m_app(rec(a.fn), rec(a.arg)); },
    [&](const tm::Roll& r) -> TermRef { return m_roll(rec(r.arg), r.mu_type); },
    [&](const tm::Unroll& u) -> TermRef {
      auto [n, b] = under(u.name, u.body);
      return m_unroll(rec(u.scrutinee), n, b);
    },
    [&](const tm::VoidMatch& v) -> TermRef { return m_voidmatch(rec(v.scrutinee)); },
    [&](const tm::Basis&) -> TermRef { return t; },
    [&](const tm::ZeroTan&) -> TermRef { return t; },
    [&](const tm::AddTan& a) -> TermRef { return m_addtan(rec(a.left), rec(a.right)); },
    [&](const tm::ScaleTan& s) -> TermRef { return m_scaletan(rec(s.tan), rec(s.scale)); },
    [&](const tm::ProjHandler& p) -> TermRef { return m_projhandler(p.index, rec(p.arg)); },
  }, t->node);
}

namespace {

// alpha-equivalence via parallel de Bruijn-style environments
using Names = std::vector<std::string>;

long index_of(const Names& env, const std::string& n) {
  for (long i = static_cast<long>(env.size()) - 1; i >= 0; --i)
    if (env[static_cast<size_t>(i)] == n) return i;
  return -1;
}

bool type_eq(const TypeRef& a, const TypeRef& b, Names& ea, Names& eb) {
  if (a->node.index() != b->node.index()) return false;
  return std::visit(overloaded{
    [&](const ty::Var& va) {
      const auto& vb = std::get<ty::Var>(b->node);
      auto ia = index_of(ea, va.name);
      auto ib = index_of(eb, vb.name);
      if (ia != ib) return false;
      return ia >= 0 || va.name == vb.name;
    },
    [&](const ty::Mu& ma) {
      const auto& mb = std::get<ty::Mu>(b->node);
      ea.push_back(ma.binder);
      eb.push_back(mb.binder);
      bool r = type_eq(ma.body, mb.body, ea, eb);
      ea.pop_back();
      eb.pop_back();
      return r;
    },
    [&](const ty::Sum& sa) {
      const auto& sb = std::get<ty::Sum>(b->node);
      return type_eq(sa.left, sb.left, ea, eb) && type_eq(sa.right, sb.right, ea, eb);
    },
    [&](const ty::Prod& pa) {
      const auto& pb = std::get<ty::Prod>(b->node);
      return type_eq(pa.left, pb.left, ea, eb) && type_eq(pa.right, pb.right, ea, eb);
    },
    [&](const ty::Arrow& aa) {
      const auto& ab = std::get<ty::Arrow>(b->node);
      return type_eq(aa.arg, ab.arg, ea, eb) && type_eq(aa.res, ab.res, ea, eb);
    },
    [&](const auto&) { return true; },
  }, a->node);
}

bool term_eq(const TermRef& a, const TermRef& b, Names& ea, Names& eb) {
  if (a->node.index() != b->node.index()) return false;
  auto binders = [&](const std::string& na, const std::string& nb, auto cont) {
    ea.push_back(na);
    eb.push_back(nb);
    bool r = cont();
    ea.pop_back();
    eb.pop_back();
    return r;
  };
  return std::visit(overloaded{
    [&](const tm::Var& va) {
      const auto& vb = std::get<tm::Var>(b->node);
      auto ia = index_of(ea, va.name);
      auto ib = index_of(eb, vb.name);
      if (ia != ib) return false;
      return ia >= 0 || va.name == vb.name;
    },
    [&](const tm::Let& la) {
      const auto& lb = std::get<tm::Let>(b->node);
      if (!term_eq(la.bound, lb.bound, ea, eb)) return false;
      return binders(la.name, lb.name, [&] { return term_eq(la.body, lb.body, ea, eb); });
    },
    [&](const tm::Const& ca) {
      return ca.value == std::get<tm::Const>(b->node).value;
    },
    [&](const tm::PrimOp& pa) {
      const auto& pb = std::get<tm::PrimOp>(b->node);
      if (pa.op != pb.op || pa.args.size() != pb.args.size()) return false;
      for (size_t i = 0; i < pa.args.size(); ++i)
        if (!term_eq(pa.args[i], pb.args[i], ea, eb)) return false;
      return true;
    },
    [&](const tm::Sign& sa) { return term_eq(sa.arg, std::get<tm::Sign>(b->node).arg, ea, eb); },
    [&](const tm::Inl& sa) { return term_eq(sa.arg, std::get<tm::Inl>(b->node).arg, ea, eb); },
    [&](const tm::Inr& sa) { return term_eq(sa.arg, std::get<tm::Inr>(b->node).arg, ea, eb); },
    [&](const tm::Case& ca) {
      const auto& cb = std::get<tm::Case>(b->node);
      if (!term_eq(ca.scrutinee, cb.scrutinee, ea, eb)) return false;
      return binders(ca.left_name, cb.left_name,
                     [&] { return term_eq(ca.left_body, cb.left_body, ea, eb); }) &&
             binders(ca.right_name, cb.right_name,
                     [&] { return term_eq(ca.right_body, cb.right_body, ea, eb); });
    },
    [&](const tm::Unit&) { return true; },
    [&](const tm::Pair& pa) {
      const auto& pb = std::get<tm::Pair>(b->node);
      return term_eq(pa.first, pb.first, ea, eb) && term_eq(pa.second, pb.second, ea, eb);
    },
    [&](const tm::PairMatch& pa) {
      const auto& pb = std::get<tm::PairMatch>(b->node);
      if (!term_eq(pa.scrutinee, pb.scrutinee, ea, eb)) return false;
      return binders(pa.first_name, pb.first_name, [&] {
        return binders(pa.second_name, pb.second_name,
                       [&] { return term_eq(pa.body, pb.body, ea, eb); });
      });
    },
    [&](const tm::Lam& la) {
      const auto& lb = std::get<tm::Lam>(b->node);
      if (la.param_type.has_value() != lb.param_type.has_value()) return false;
      if (la.param_type && !alpha_eq(*la.param_type, *lb.param_type)) return false;
      return binders(la.param, lb.param, [&] { return term_eq(la.body, lb.body, ea, eb); });
    },
    [&](const tm::App& aa) {
      const auto& ab = std::get<tm::App>(b->node);
      return term_eq(aa.fn, ab.fn, ea, eb) && term_eq(aa.arg, ab.arg, ea, eb);
    },
    [&](const tm::Roll& ra) {
      const auto& rb = std::get<tm::Roll>(b->node);
      return alpha_eq(ra.mu_type, rb.mu_type) && term_eq(ra.arg, rb.arg, ea, eb);
    },
    [&](const tm::Unroll& ua) {
      const auto& ub = std::get<tm::Unroll>(b->node);
      if (!term_eq(ua.scrutinee, ub.scrutinee, ea, eb)) return false;
      return binders(ua.name, ub.name, [&] { return term_eq(ua.body, ub.body, ea, eb); });
    },
    [&](const tm::VoidMatch& va) {
      return term_eq(va.scrutinee, std::get<tm::VoidMatch>(b->node).scrutinee, ea, eb);
    },
    [&](const tm::Basis& ba) { return ba.index == std::get<tm::Basis>(b->node).index; },
    [&](const tm::ZeroTan&) { return true; },
    [&](const tm::AddTan& aa) {
      const auto& ab = std::get<tm::AddTan>(b->node);
      return term_eq(aa.left, ab.left, ea, eb) && term_eq(aa.right, ab.right, ea, eb);
    },
    [&](const tm::ScaleTan& sa) {
      const auto& sb = std::get<tm::ScaleTan>(b->node);
      return term_eq(sa.tan, sb.tan, ea, eb) && term_eq(sa.scale, sb.scale, ea, eb);
    },
    [&](const tm::ProjHandler& pa) {
      const auto& pb = std::get<tm::ProjHandler>(b->node);
      return pa.index == pb.index && term_eq(pa.arg, pb.arg, ea, eb);
    },
  }, a->node);
}

} // namespace

bool alpha_eq(const TypeRef& a, const TypeRef& b) {
  Names ea, eb;
  return type_eq(a, b, ea, eb);
}

bool alpha_eq(const TermRef& a, const TermRef& b) {
  Names ea, eb;
  return term_eq(a, b, ea, eb);
}

TypeRef unfold_mu(const TypeRef& mu) {
  const auto* m = std::get_if<ty::Mu>(&mu->node);
  if (!m) throw std::invalid_argument("unfold_mu: not a mu type");
  return subst_type(m->body, m->binder, mu);
}

bool type_mentions_tangent(const TypeRef& t) {
  return std::visit(overloaded{
    [&](const ty::Tangent&) { return true; },
    [&](const ty::Sum& s) { return type_mentions_tangent(s.left) || type_mentions_tangent(s.right); },
    [&](const ty::Prod& p) { return type_mentions_tangent(p.left) || type_mentions_tangent(p.right); },
    [&](const ty::Arrow& a) { return type_mentions_tangent(a.arg) || type_mentions_tangent(a.res); },
    [&](const ty::Mu& m) { return type_mentions_tangent(m.body); },
    [&](const auto&) { return false; },
  }, t->node);
}

bool is_source_term(const TermRef& t) {
  return std::visit(overloaded{
    [&](const tm::Basis&) { return false; },
    [&](const tm::ZeroTan&) { return false; },
    [&](const tm::AddTan&) { return false; },
    [&](const tm::ScaleTan&) { return false; },
    [&](const tm::ProjHandler&) { return false; },
    [&](const tm::Let& l) { return is_source_term(l.bound) && is_source_term(l.body); },
    [&](const tm::PrimOp& p) {
      for (const auto& a : p.args)
        if (!is_source_term(a)) return false;
      return true;
    },
    [&](const tm::Sign& s) { return is_source_term(s.arg); },
    [&](const tm::Inl& s) { return is_source_term(s.arg); },
    [&](const tm::Inr& s) { return is_source_term(s.arg); },
    [&](const tm::Case& c) {
      return is_source_term(c.scrutinee) && is_source_term(c.left_body) && is_source_term(c.right_body);
    },
    [&](const tm::Pair& p) { return is_source_term(p.first) && is_source_term(p.second); },
    [&](const tm::PairMatch& p) { return is_source_term(p.scrutinee) && is_source_term(p.body); },
    [&](const tm::Lam& l) {
      if (l.param_type && type_mentions_tangent(*l.param_type)) return false;
      return is_source_term(l.body);
    },
    [&](const tm::App& a) { return is_source_term(a.fn) && is_source_term(a.arg); },
    [&](const tm::Roll& r) { return !type_mentions_tangent(r.mu_type) && is_source_term(r.arg); },
    [&](const tm::Unroll& u) { return is_source_term(u.scrutinee) && is_source_term(u.body); },
    [&](const tm::VoidMatch& v) { return is_source_term(v.scrutinee); },
    [&](const auto&) { return true; },
  }, t->node);
}

} // namespace dualfpc

#include "dualfpc/ad.hpp"

#include <stdexcept>

#include "dualfpc/ops.hpp"

namespace dualfpc {

TypeRef ad_type(const TypeRef& type) {
  return std::visit(overloaded{
    [&](const ty::Real&) -> TypeRef { return t_prod(t_real(), t_tangent()); },
    [&](const ty::Tangent&) -> TypeRef {
      throw std::invalid_argument("ad_type: input mentions tangent; not a source type");
    },
    [&](const ty::Unit&) -> TypeRef { return t_unit(); },
    [&](const ty::Void&) -> TypeRef { return t_void(); },
    [&](const ty::Sum& s) -> TypeRef { return t_sum(ad_type(s.left), ad_type(s.right)); },
    [&](const ty::Prod& p) -> TypeRef { return t_prod(ad_type(p.left), ad_type(p.right)); },
    [&](const ty::Arrow& a) -> TypeRef { return t_arrow(ad_type(a.arg), ad_type(a.res)); },
    [&](const ty::Var& v) -> TypeRef { return t_var(v.name); },
    [&](const ty::Mu& m) -> TypeRef { return t_mu(m.binder, ad_type(m.body)); },
  }, type->node);
}

namespace {

struct AdRewriter {
  NameSupply names;

  TermRef go(const TermRef& t) {
    return std::visit(overloaded{
      [&](const tm::Var&) -> TermRef { return t; },
      [&](const tm::Let& l) -> TermRef { return m_let(l.name, go(l.bound), go(l.body)); },
      [&](const tm::Const& c) -> TermRef { return m_pair(m_const(c.value), m_zerotan()); },
      [&](const tm::PrimOp& p) -> TermRef { return op_block(p); },
      [&](const tm::Sign& s) -> TermRef {
        auto a = names.fresh("a");
        auto b = names.fresh("b");
        return m_sign(m_pairmatch(go(s.arg), a, b, m_var(a)));
      },
      [&](const tm::Inl& s) -> TermRef { return m_inl(go(s.arg)); },
      [&](const tm::Inr& s) -> TermRef { return m_inr(go(s.arg)); },
      [&](const tm::Case& c) -> TermRef {
        return m_case(go(c.scrutinee), c.left_name, go(c.left_body), c.right_name,
                      go(c.right_body));
      },
      [&](const tm::Unit&) -> TermRef { return t; },
      [&](const tm::Pair& p) -> TermRef { return m_pair(go(p.first), go(p.second)); },
      [&](const tm::PairMatch& p) -> TermRef {
        return m_pairmatch(go(p.scrutinee), p.first_name, p.second_name, go(p.body));
      },
      [&](const tm::Lam& l) -> TermRef {
        auto body = go(l.body);
        return l.param_type ? m_lam(l.param, ad_type(*l.param_type), body)
                            : m_lam(l.param, body);
      },
      [&](const tm::App& a) -> TermRef { return m_app(go(a.fn), go(a.arg)); },
      [&](const tm::Roll& r) -> TermRef { return m_roll(go(r.arg), ad_type(r.mu_type)); },
      [&](const tm::Unroll& u) -> TermRef {
        return m_unroll(go(u.scrutinee), u.name, go(u.body));
      },
      [&](const tm::VoidMatch& v) -> TermRef { return m_voidmatch(go(v.scrutinee)); },
      [&](const auto&) -> TermRef {
        throw std::invalid_argument("ad_term: target-only construct in source term");
      },
    }, t->node);
  }

  // The dual-number block for op(t1..tn):
  //   case D(t1) of (x1, x1') -> ... case D(tn) of (xn, xn') ->
  //   let v = op(x1..xn) in
  //   let z1 = d1_op(x1..xn) in ... let zn = dn_op(x1..xn) in
  //   (v, x1' *. z1 +. ... +. xn' *. zn)
  TermRef op_block(const tm::PrimOp& p) {
    ensure_default_ops();
    const auto& sig = OpRegistry::instance().require(p.op);
    if (static_cast<int>(p.args.size()) != sig.arity)
      throw std::invalid_argument("ad_term: op '" + p.op + "' arity mismatch");

    const int n = sig.arity;
    std::vector<TermRef> dual_args;
    dual_args.reserve(p.args.size());
    for (const auto& a : p.args) dual_args.push_back(go(a));

    std::vector<std::string> xs, dxs, zs;
    std::vector<TermRef> xvars;
    for (int i = 0; i < n; ++i) {
      xs.push_back(names.fresh("x"));
      dxs.push_back(names.fresh("dx"));
      xvars.push_back(m_var(xs.back()));
    }
    auto v = names.fresh("v");
    for (int i = 0; i < n; ++i) zs.push_back(names.fresh("z"));

    TermRef tangent = m_zerotan();
    if (n > 0) {
      tangent = m_scaletan(m_var(dxs[0]), m_var(zs[0]));
      for (int i = 1; i < n; ++i)
        tangent = m_addtan(tangent, m_scaletan(m_var(dxs[i]), m_var(zs[i])));
    }
    TermRef body = m_pair(m_var(v), tangent);

    for (int i = n - 1; i >= 0; --i)
      body = m_let(zs[i], sig.deriv_terms[i](xvars), body);
    body = m_let(v, m_primop(p.op, xvars), body);
    for (int i = n - 1; i >= 0; --i)
      body = m_pairmatch(dual_args[i], xs[i], dxs[i], body);
    return body;
  }
};

} // namespace

TermRef ad_term(const TermRef& term) {
  AdRewriter rw;
  rw.names.used = all_names(term);
  return rw.go(term);
}

Context ad_context(const Context& ctx) {
  Context out;
  out.tyvars = ctx.tyvars;
  out.bindings.reserve(ctx.bindings.size());
  for (const auto& [name, type] : ctx.bindings)
    out.bindings.emplace_back(name, ad_type(type));
  return out;
}

} // namespace dualfpc

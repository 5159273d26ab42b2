#include "doctest.h"

#include <random>

#include "dualfpc/ad.hpp"
#include "dualfpc/ops.hpp"
#include "dualfpc/pretty.hpp"
#include "dualfpc/surface.hpp"
#include "helpers.hpp"

using namespace dualfpc;

TEST_CASE("ad_type on the documented clauses") {
  CHECK(alpha_eq(ad_type(t_real()), t_prod(t_real(), t_tangent())));
  CHECK(alpha_eq(ad_type(t_unit()), t_unit()));
  CHECK(alpha_eq(ad_type(t_void()), t_void()));
  auto list = parse_type_text("mu a. unit + (real * a)");
  auto dual_list = parse_type_text("mu a. unit + ((real * tangent) * a)");
  CHECK(alpha_eq(ad_type(list), dual_list));
  CHECK(alpha_eq(ad_type(t_arrow(t_real(), t_real())),
                 parse_type_text("(real * tangent) -> (real * tangent)")));
  CHECK_THROWS(ad_type(t_tangent()));
}

TEST_CASE("ad_type commutes with type substitution") {
  auto list = parse_type_text("mu a. unit + (real * a)");
  auto body = t_sum(t_unit(), t_prod(t_real(), t_var("a")));
  CHECK(alpha_eq(ad_type(subst_type(body, "a", list)),
                 subst_type(ad_type(body), "a", ad_type(list))));
}

TEST_CASE("ad_type output kind-checks and is target-only on reals") {
  for (const auto& entry : testing::corpus_manifest()) {
    auto file = testing::load_corpus(entry.file);
    for (const auto& def : file.defs) {
      auto d = ad_type(def.declared_type);
      CHECK(kind_check({}, d));
    }
  }
}

TEST_CASE("ad_term constant and sign clauses") {
  CHECK(alpha_eq(ad_term(m_const(3.0)), m_pair(m_const(3.0), m_zerotan())));
  auto d_sign = ad_term(m_sign(m_var("x")));
  CHECK(alpha_eq(d_sign, m_sign(m_pairmatch(m_var("x"), "a", "b", m_var("a")))));
}

TEST_CASE("ad_term multiplication block computes the product rule") {
  auto t = m_primop("*", {m_var("x"), m_var("y")});
  auto d = ad_term(t);
  // evaluate at x = (3, e1), y = (4, e2) over the sparse backend
  EnvRef env;
  env = env_extend(env, "x", v_pair(v_real(3.0), v_tan(Tangent::basis(1, Backend::kinf))));
  env = env_extend(env, "y", v_pair(v_real(4.0), v_tan(Tangent::basis(2, Backend::kinf))));
  auto r = eval(env, d, Backend::kinf);
  REQUIRE(r.outcome.converged());
  const auto& pair = std::get<val::Pair>(r.outcome.value()->node);
  CHECK(std::get<val::Real>(pair.first->node).v == 12.0);
  const auto& grad = std::get<val::Tan>(pair.second->node).t;
  CHECK(grad.coordinate(1) == 4.0);
  CHECK(grad.coordinate(2) == 3.0);
}

TEST_CASE("ad_term is homomorphic on structure") {
  auto t = parse_term_text("fun (x : real) -> (x, ())");
  auto d = ad_term(t);
  const auto& lam = std::get<tm::Lam>(d->node);
  CHECK(alpha_eq(*lam.param_type, t_prod(t_real(), t_tangent())));
  const auto& body = std::get<tm::Pair>(lam.body->node);
  CHECK(alpha_eq(body.first, m_var("x")));
  CHECK(alpha_eq(body.second, m_unit()));
}

TEST_CASE("ad_term rejects unknown ops and target constructs") {
  CHECK_THROWS(ad_term(m_primop("mystery", {m_const(1.0)})));
  CHECK_THROWS(ad_term(m_zerotan()));
}

TEST_CASE("ad_context maps bindings pointwise") {
  Context ctx;
  ctx.bindings.emplace_back("x", t_real());
  ctx.bindings.emplace_back("f", t_arrow(t_real(), t_real()));
  auto d = ad_context(ctx);
  CHECK(d.bindings.size() == 2);
  CHECK(alpha_eq(d.bindings[0].second, t_prod(t_real(), t_tangent())));
  CHECK(alpha_eq(d.bindings[1].second,
                 parse_type_text("(real * tangent) -> (real * tangent)")));
  Context empty;
  CHECK(ad_context(empty).bindings.empty());
}

TEST_CASE("register_op rejects duplicates and arity mismatches") {
  ensure_default_ops();
  auto& reg = OpRegistry::instance();
  OpSignature dup;
  dup.symbol = "exp";
  dup.arity = 1;
  dup.sem = [](std::span<const double> a) { return std::optional<double>(a[0]); };
  dup.deriv_terms = {[](const std::vector<TermRef>&) { return m_const(1.0); }};
  dup.deriv_analytic = {[](std::span<const double>) { return 1.0; }};
  dup.sample_range = {{0.0, 1.0}};
  CHECK_THROWS(reg.register_op(dup));

  OpSignature bad = dup;
  bad.symbol = "fresh_op_name";
  bad.deriv_terms.clear();
  CHECK_THROWS(reg.register_op(bad));
}

TEST_CASE("macro type preservation over the corpus") {
  for (const auto& entry : testing::corpus_manifest()) {
    auto file = testing::load_corpus(entry.file);
    Context ctx;
    for (const auto& def : file.defs) {
      auto dual_ty = ad_type(def.declared_type);
      auto dual_tm = ad_term(def.term);
      CHECK_NOTHROW(check(ad_context(ctx), dual_tm, dual_ty, Lang::target));
      ctx = ctx.extended(def.name, def.declared_type);
    }
  }
}

TEST_CASE("ad_term commutes with substitution of values") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 40; ++i) {
    auto body = testing::gen_real_term(rng, {"x", "y"}, 3);
    auto value = m_const(std::uniform_real_distribution<double>(-2.0, 2.0)(rng));
    auto lhs = ad_term(subst_term(body, "x", value));
    auto rhs = subst_term(ad_term(body), "x", ad_term(value));
    CHECK(alpha_eq(lhs, rhs));
  }
}

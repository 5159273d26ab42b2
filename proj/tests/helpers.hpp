#pragma once

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dualfpc/ast.hpp"
#include "dualfpc/eval.hpp"
#include "dualfpc/surface.hpp"
#include "dualfpc/verify.hpp"

namespace dualfpc::testing {

inline std::string corpus_path(const std::string& name) {
  return std::string(DUALFPC_CORPUS_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SourceFile load_corpus(const std::string& name) {
  return parse_file(read_file(corpus_path(name)));
}

// All corpus files, with the definition to exercise numerically (empty for
// typecheck-only entries) and the sampling interval for its real slots.
struct CorpusEntry {
  const char* file;
  const char* def;  // nullptr: typecheck only
  double lo = -3.0, hi = 3.0;
};

inline const std::vector<CorpusEntry>& corpus_manifest() {
  static const std::vector<CorpusEntry> entries = {
      {"identity.dfpc", "identity"},
      {"const.dfpc", nullptr},
      {"add.dfpc", "add"},
      {"sub.dfpc", "sub"},
      {"mul.dfpc", "mul"},
      {"div.dfpc", "div", 0.5, 3.0},
      {"neg_prog.dfpc", "negate"},
      {"exp_prog.dfpc", "exp_prog"},
      {"log_prog.dfpc", "log_prog", 0.1, 50.0},
      {"sqrt_prog.dfpc", "sqrt_prog", 0.1, 50.0},
      {"sin_prog.dfpc", "sin_prog"},
      {"cos_prog.dfpc", "cos_prog"},
      {"sigmoid_prog.dfpc", "sigmoid_prog"},
      {"relu.dfpc", "relu"},
      {"abs_val.dfpc", "abs_val"},
      {"max2.dfpc", "max2"},
      {"min2.dfpc", "min2"},
      {"poly.dfpc", "poly"},
      {"square_pair.dfpc", "square_pair"},
      {"swap.dfpc", "swap"},
      {"dot2.dfpc", "dot2"},
      {"let_chain.dfpc", "let_chain"},
      {"twice.dfpc", "twice"},
      {"compose_apply.dfpc", "compose_apply"},
      {"discard.dfpc", "discard"},
      {"from_void.dfpc", nullptr},
      {"fix_id.dfpc", "fix_id"},
      {"loop.dfpc", nullptr},
      {"curried_add.dfpc", nullptr},
      {"sgn_gap.dfpc", "sgn_gap"},
      {"geo_mean.dfpc", "geo_mean", 0.1, 3.0},
      {"smooth_mix.dfpc", "smooth_mix"},
      {"step_opt.dfpc", "step_opt"},
      {"option_default.dfpc", "option_default"},
      {"sum_list.dfpc", "sum_list"},
      {"map_square_sum.dfpc", "map_square_sum"},
      {"tree_sum.dfpc", "tree_sum"},
      {"two_list.dfpc", "two_list"},
      {"taylor_exp.dfpc", "taylor_exp"},
      {"newton_sqrt.dfpc", "newton_sqrt", 0.1, 50.0},
  };
  return entries;
}

// Underflow-truncated partial sums of the exp series, written directly
// against doubles as an oracle for the corpus taylor_exp program.
inline double taylor_exp_oracle(double x, double cutoff = 1e-12) {
  double term = 1.0, acc = 0.0;
  for (long i = 1; std::abs(term) >= cutoff; ++i) {
    acc += term;
    term = term * x / static_cast<double>(i);
  }
  return acc;
}

// value embedded back into term syntax (rolls need the type for annotations)
inline TermRef value_to_term(const ValueRef& v, const TypeRef& type) {
  return std::visit(overloaded{
    [&](const ty::Real&) -> TermRef { return m_const(std::get<val::Real>(v->node).v); },
    [&](const ty::Unit&) -> TermRef { return m_unit(); },
    [&](const ty::Sum& s) -> TermRef {
      if (const auto* l = std::get_if<val::Inl>(&v->node))
        return m_inl(value_to_term(l->v, s.left));
      return m_inr(value_to_term(std::get<val::Inr>(v->node).v, s.right));
    },
    [&](const ty::Prod& p) -> TermRef {
      const auto& pv = std::get<val::Pair>(v->node);
      return m_pair(value_to_term(pv.first, p.left), value_to_term(pv.second, p.right));
    },
    [&](const ty::Mu&) -> TermRef {
      return m_roll(value_to_term(std::get<val::Roll>(v->node).v, unfold_mu(type)), type);
    },
    [&](const auto&) -> TermRef {
      throw std::logic_error("value_to_term: unsupported type");
    },
  }, type->node);
}

// structural check of a runtime value against a type; closures are accepted
// against any arrow without re-deriving their bodies
inline bool value_has_type(const ValueRef& v, const TypeRef& type) {
  return std::visit(overloaded{
    [&](const ty::Real&) { return std::holds_alternative<val::Real>(v->node); },
    [&](const ty::Tangent&) { return std::holds_alternative<val::Tan>(v->node); },
    [&](const ty::Unit&) { return std::holds_alternative<val::Unit>(v->node); },
    [&](const ty::Void&) { return false; },
    [&](const ty::Sum& s) {
      if (const auto* l = std::get_if<val::Inl>(&v->node)) return value_has_type(l->v, s.left);
      if (const auto* r = std::get_if<val::Inr>(&v->node)) return value_has_type(r->v, s.right);
      return false;
    },
    [&](const ty::Prod& p) {
      const auto* pv = std::get_if<val::Pair>(&v->node);
      return pv && value_has_type(pv->first, p.left) && value_has_type(pv->second, p.right);
    },
    [&](const ty::Arrow&) { return std::holds_alternative<val::Closure>(v->node); },
    [&](const ty::Var&) { return false; },
    [&](const ty::Mu&) {
      const auto* rv = std::get_if<val::Roll>(&v->node);
      return rv && value_has_type(rv->v, unfold_mu(type));
    },
  }, type->node);
}

// Random well-typed real-valued source terms over real-typed variables.
// Ops with partial domains are included; both sides of an equational test
// fail identically on them.
inline TermRef gen_real_term(std::mt19937_64& rng, std::vector<std::string> vars, int depth) {
  auto coin = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  auto lit = [&] {
    return m_const(std::uniform_real_distribution<double>(-4.0, 4.0)(rng));
  };
  if (depth <= 0 || coin(6) == 0) {
    if (!vars.empty() && coin(2) == 0)
      return m_var(vars[static_cast<size_t>(coin(static_cast<int>(vars.size())))]);
    return lit();
  }
  switch (coin(8)) {
    case 0:
      return m_primop("+", {gen_real_term(rng, vars, depth - 1),
                            gen_real_term(rng, vars, depth - 1)});
    case 1:
      return m_primop("*", {gen_real_term(rng, vars, depth - 1),
                            gen_real_term(rng, vars, depth - 1)});
    case 2:
      return m_primop(coin(2) ? "sin" : "cos", {gen_real_term(rng, vars, depth - 1)});
    case 3: {
      auto name = "g" + std::to_string(coin(1000));
      auto bound = gen_real_term(rng, vars, depth - 1);
      vars.push_back(name);
      return m_let(name, std::move(bound), gen_real_term(rng, vars, depth - 1));
    }
    case 4: {
      // if c then a else b; undefined exactly when c is 0
      auto c = gen_real_term(rng, vars, depth - 1);
      return m_case(m_sign(std::move(c)), "_", gen_real_term(rng, vars, depth - 1), "_",
                    gen_real_term(rng, vars, depth - 1));
    }
    case 5: {
      auto n1 = "p" + std::to_string(coin(1000));
      auto n2 = "q" + std::to_string(coin(1000));
      auto scrut = m_pair(gen_real_term(rng, vars, depth - 1),
                          gen_real_term(rng, vars, depth - 1));
      vars.push_back(n1);
      vars.push_back(n2);
      return m_pairmatch(std::move(scrut), n1, n2, gen_real_term(rng, vars, depth - 1));
    }
    case 6: {
      auto name = "a" + std::to_string(coin(1000));
      auto arg = gen_real_term(rng, vars, depth - 1);
      vars.push_back(name);
      auto body = gen_real_term(rng, vars, depth - 1);
      return m_app(m_lam(name, std::move(body)), std::move(arg));
    }
    default:
      return m_primop("-", {gen_real_term(rng, vars, depth - 1),
                            gen_real_term(rng, vars, depth - 1)});
  }
}

// equality of outcomes with both bottom flavours pooled
inline bool outcome_equiv(const Outcome& a, const Outcome& b) {
  if (a.converged() != b.converged()) return false;
  if (!a.converged()) return true;
  return value_equal(a.value(), b.value());
}

} // namespace dualfpc::testing

// Acceptance suite: every check below pins its tolerance in code and prints
// one line. Exit status is the number of failing criteria.

#include <cmath>
#include <functional>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dualfpc/ad.hpp"
#include "dualfpc/ops.hpp"
#include "dualfpc/pretty.hpp"
#include "dualfpc/surface.hpp"
#include "dualfpc/verify.hpp"
#include "helpers.hpp"

using namespace dualfpc;
using namespace dualfpc::testing;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %d. %s — %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  if (!pass) ++failures;
}

uint64_t seed() {
  if (const char* env = std::getenv("DUALFPC_SEED")) return std::strtoull(env, nullptr, 10);
  return 42;
}

// running tallies shared between the forward/reverse criteria and the
// partiality criterion
struct TrialTally {
  long quantitative = 0;
  long kinks = 0;
  long bottom_consistent = 0;
  long bottom_mismatch = 0;
  long inconclusive = 0;
};

void tally(TrialTally& t, Verdict v) {
  switch (v) {
    case Verdict::pass:
    case Verdict::fail: ++t.quantitative; break;
    case Verdict::kink: ++t.kinks; break;
    case Verdict::bottom_consistent: ++t.bottom_consistent; break;
    case Verdict::bottom_mismatch: ++t.bottom_mismatch; break;
    case Verdict::inconclusive: ++t.inconclusive; break;
  }
}

TrialTally g_tally;

void criterion1_type_preservation() {
  int programs = 0, preserved = 0;
  std::set<size_t> source_ctors, target_ctors;
  std::set<std::string> ops_seen;

  std::function<void(const TermRef&, std::set<size_t>&)> walk =
      [&](const TermRef& t, std::set<size_t>& seen) {
        seen.insert(t->node.index());
        std::visit(overloaded{
          [&](const tm::Let& l) { walk(l.bound, seen); walk(l.body, seen); },
          [&](const tm::PrimOp& p) {
            ops_seen.insert(p.op);
            for (const auto& a : p.args) walk(a, seen);
          },
          [&](const tm::Sign& s) { walk(s.arg, seen); },
          [&](const tm::Inl& s) { walk(s.arg, seen); },
          [&](const tm::Inr& s) { walk(s.arg, seen); },
          [&](const tm::Case& c) {
            walk(c.scrutinee, seen);
            walk(c.left_body, seen);
            walk(c.right_body, seen);
          },
          [&](const tm::Pair& p) { walk(p.first, seen); walk(p.second, seen); },
          [&](const tm::PairMatch& p) { walk(p.scrutinee, seen); walk(p.body, seen); },
          [&](const tm::Lam& l) { walk(l.body, seen); },
          [&](const tm::App& a) { walk(a.fn, seen); walk(a.arg, seen); },
          [&](const tm::Roll& r) { walk(r.arg, seen); },
          [&](const tm::Unroll& u) { walk(u.scrutinee, seen); walk(u.body, seen); },
          [&](const tm::VoidMatch& v) { walk(v.scrutinee, seen); },
          [&](const tm::AddTan& a) { walk(a.left, seen); walk(a.right, seen); },
          [&](const tm::ScaleTan& s) { walk(s.tan, seen); walk(s.scale, seen); },
          [&](const tm::ProjHandler& p) { walk(p.arg, seen); },
          [&](const auto&) {},
        }, t->node);
      };

  bool all_checked = true;
  for (const auto& entry : corpus_manifest()) {
    auto file = load_corpus(entry.file);
    Context ctx;
    for (const auto& def : file.defs) {
      ++programs;
      walk(def.term, source_ctors);
      try {
        auto dual = ad_term(def.term);
        walk(dual, target_ctors);
        check(ad_context(ctx), dual, ad_type(def.declared_type), Lang::target);
        ++preserved;
      } catch (const std::exception&) {
        all_checked = false;
      }
      ctx = ctx.extended(def.name, def.declared_type);
    }
  }

  // every source constructor has to appear somewhere in the corpus
  std::vector<size_t> required;
  for (auto t : std::initializer_list<TermRef>{
           m_var("x"), m_let("x", m_unit(), m_unit()), m_const(0.0),
           m_primop("+", {m_const(0.0), m_const(0.0)}), m_sign(m_const(1.0)),
           m_inl(m_unit()), m_inr(m_unit()),
           m_case(m_unit(), "a", m_unit(), "b", m_unit()), m_unit(),
           m_pair(m_unit(), m_unit()), m_pairmatch(m_unit(), "a", "b", m_unit()),
           m_lam("x", m_unit()), m_app(m_unit(), m_unit()),
           m_roll(m_unit(), t_mu("a", t_unit())), m_unroll(m_unit(), "x", m_unit()),
           m_voidmatch(m_unit())})
    required.push_back(t->node.index());
  bool ctors_covered = true;
  for (auto idx : required)
    if (!source_ctors.count(idx)) ctors_covered = false;
  bool targets_covered = true;
  for (auto t : std::initializer_list<TermRef>{m_zerotan(), m_addtan(m_unit(), m_unit()),
                                               m_scaletan(m_unit(), m_unit())})
    if (!target_ctors.count(t->node.index())) targets_covered = false;

  bool ops_covered = true;
  for (const auto& [sym, sig] : OpRegistry::instance().all())
    if (!ops_seen.count(sym)) ops_covered = false;

  bool pass = programs >= 25 && preserved == programs && ctors_covered && targets_covered &&
              all_checked && ops_covered;
  report(1, "macro type preservation over the corpus", pass,
         std::to_string(preserved) + "/" + std::to_string(programs) +
             " programs (need >= 25); constructors " + (ctors_covered ? "covered" : "MISSING") +
             "; ops " + (ops_covered ? "covered" : "MISSING"));
}

void criterion2_primitive_soundness() {
  ensure_default_ops();
  bool pass = true;
  double worst = 0.0;
  std::string worst_op;
  for (const auto& [sym, sig] : OpRegistry::instance().all()) {
    auto r = chain_rule_check(sym, 1000, seed(), 1e-6, 1e-6);
    if (!r.pass || r.trials < 1000) pass = false;
    if (r.max_rel_err_vs_fd > worst) {
      worst = r.max_rel_err_vs_fd;
      worst_op = sym;
    }
  }
  report(2, "per-primitive chain rule, 1000 samples per op", pass,
         "max rel err " + fmt_double(worst) + " (" + worst_op + "), bound 1e-6");
}

struct ProgramRun {
  Program prog;
  CorpusEntry entry;
};

std::vector<ProgramRun> numeric_programs() {
  std::vector<ProgramRun> out;
  for (const auto& entry : corpus_manifest()) {
    if (!entry.def) continue;
    auto file = load_corpus(entry.file);
    out.push_back({program_from_def(file, *file.find(entry.def)), entry});
  }
  return out;
}

void criterion3_forward(const std::vector<ProgramRun>& progs) {
  std::mt19937_64 rng(seed());
  bool pass = true;
  double worst = 0.0;
  std::string worst_prog;
  long total_points = 0;

  for (const auto& pr : progs) {
    int good = 0, attempts = 0;
    while (good < 100 && attempts < 4000) {
      ++attempts;
      auto v = random_value(pr.prog.input_type, rng, pr.entry.lo, pr.entry.hi, 6);
      if (!v) break;
      auto point = flatten_value(*v, pr.prog.input_type);
      std::vector<double> dir(point.slots.size());
      for (auto& d : dir) d = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      auto r = forward_check(pr.prog, point, dir, 1e-6, 1e-5);
      tally(g_tally, r.verdict);
      if (r.verdict == Verdict::pass) {
        ++good;
        if (r.max_rel_err > worst) {
          worst = r.max_rel_err;
          worst_prog = pr.prog.name;
        }
      } else if (r.verdict == Verdict::fail || r.verdict == Verdict::bottom_mismatch) {
        pass = false;
        std::printf("       forward failure: %s\n", report_json(r).c_str());
        ++good;  // count it; the criterion already failed
      }
    }
    if (good < 100) pass = false;
    total_points += good;
  }
  report(3, "forward mode vs finite differences, 100 points per program", pass,
         std::to_string(total_points) + " points, max rel err " + fmt_double(worst) + " (" +
             worst_prog + "), bound 1e-5, primal bitwise");
}

void criterion4_reverse(const std::vector<ProgramRun>& progs) {
  std::mt19937_64 rng(seed() + 1);
  bool pass = true;
  double worst_fd = 0.0, worst_fwd = 0.0;
  long points = 0;
  bool saw_recursive_input = false;

  for (const auto& pr : progs) {
    if (std::holds_alternative<ty::Mu>(pr.prog.input_type->node)) saw_recursive_input = true;
    int good = 0, attempts = 0;
    while (good < 25 && attempts < 1000) {
      ++attempts;
      auto v = random_value(pr.prog.input_type, rng, pr.entry.lo, pr.entry.hi, 6);
      if (!v) break;
      auto point = flatten_value(*v, pr.prog.input_type);
      auto r = reverse_jacobian(pr.prog, point, 1e-6, 1e-5);
      tally(g_tally, r.verdict);
      if (r.verdict == Verdict::pass) {
        ++good;
        ++points;
        worst_fd = std::max(worst_fd, r.max_rel_err);
        worst_fwd = std::max(worst_fwd, r.fwd_vs_rev_rel);
      } else if (r.verdict == Verdict::fail || r.verdict == Verdict::bottom_mismatch) {
        pass = false;
        std::printf("       reverse failure: %s\n", report_json(r).c_str());
        ++good;
      }
    }
    if (good < 25) pass = false;
  }
  if (!saw_recursive_input) pass = false;
  report(4, "reverse mode vs forward columns and finite differences", pass,
         std::to_string(points) + " points; vs fd " + fmt_double(worst_fd) +
             " (bound 1e-5); vs forward " + fmt_double(worst_fwd) + " (bound 1e-9)");
}

void criterion5_partiality(const std::vector<ProgramRun>& progs) {
  bool pass = true;
  std::string detail;

  // relu at exactly 0: primal and dual both hit the sign kink
  auto relu_file = load_corpus("relu.dfpc");
  auto relu = program_from_def(relu_file, *relu_file.find("relu"));
  auto zero = flatten_value(v_real(0.0), t_real());
  auto fwd = forward_check(relu, zero, {1.0}, 1e-6, 1e-5);
  if (fwd.verdict != Verdict::bottom_consistent) pass = false;

  // division and log error outside their open domains, primal and dual
  auto div_file = load_corpus("div.dfpc");
  auto divp = program_from_def(div_file, *div_file.find("div"));
  FlatValue by_zero;
  by_zero.shape = flatten_value(v_pair(v_real(0.0), v_real(0.0)), divp.input_type).shape;
  by_zero.slots = {1.0, 0.0};
  if (forward_check(divp, by_zero, {1.0, 0.0}, 1e-6, 1e-5).verdict !=
      Verdict::bottom_consistent)
    pass = false;

  auto log_file = load_corpus("log_prog.dfpc");
  auto logp = program_from_def(log_file, *log_file.find("log_prog"));
  if (forward_check(logp, flatten_value(v_real(-1.0), t_real()), {1.0}, 1e-6, 1e-5).verdict !=
      Verdict::bottom_consistent)
    pass = false;

  // sampled bottom points must stay consistent between primal and dual runs
  std::mt19937_64 rng(seed() + 2);
  for (const auto& pr : progs) {
    for (int i = 0; i < 10; ++i) {
      auto v = random_value(pr.prog.input_type, rng, -10.0, 10.0, 6);
      if (!v) continue;
      auto point = flatten_value(*v, pr.prog.input_type);
      std::vector<double> dir(point.slots.size(), 1.0);
      auto r = forward_check(pr.prog, point, dir, 1e-6, 1e-5);
      tally(g_tally, r.verdict);
      if (r.verdict == Verdict::bottom_mismatch) pass = false;
    }
  }

  if (g_tally.bottom_mismatch > 0) pass = false;
  long classified = g_tally.quantitative + g_tally.bottom_consistent + g_tally.inconclusive;
  bool fuel_ok =
      classified == 0 || g_tally.inconclusive * 20 <= classified;  // <= 5%
  if (!fuel_ok) pass = false;
  detail = "bottom-consistent " + std::to_string(g_tally.bottom_consistent) +
           ", mismatches " + std::to_string(g_tally.bottom_mismatch) + ", inconclusive " +
           std::to_string(g_tally.inconclusive) + "/" + std::to_string(classified);
  report(5, "partiality: kinks and open domains bottom out consistently", pass, detail);
}

void criterion6_beta() {
  std::mt19937_64 rng(seed() + 3);
  std::uniform_real_distribution<double> real_dist(-4.0, 4.0);
  auto list_ty = parse_type_text("mu a. unit + (real * a)");
  auto run = [](const TermRef& t) { return eval(nullptr, t, Backend::k1).outcome; };

  int instances = 0, holds = 0;
  for (int i = 0; i < 12; ++i) {
    auto v = m_const(real_dist(rng));
    auto v2 = m_const(real_dist(rng));

    auto t1 = gen_real_term(rng, {"x"}, 3);
    auto t2 = gen_real_term(rng, {"x"}, 3);
    auto tl = gen_real_term(rng, {"x"}, 3);
    auto tr = gen_real_term(rng, {"y"}, 3);
    auto t3 = gen_real_term(rng, {"x", "y"}, 3);

    std::vector<std::pair<TermRef, TermRef>> sides = {
        {m_let("x", v, t1), subst_term(t1, "x", v)},
        {m_app(m_lam("x", t2), v), subst_term(t2, "x", v)},
        {m_case(m_inl(v), "x", tl, "y", tr), subst_term(tl, "x", v)},
        {m_case(m_inr(v), "x", tl, "y", tr), subst_term(tr, "y", v)},
        {m_pairmatch(m_pair(v, v2), "x", "y", t3),
         subst_term(subst_term(t3, "x", v), "y", v2)},
    };
    auto payload = random_value(unfold_mu(list_ty), rng, -4.0, 4.0, 4);
    if (payload) {
      auto w = value_to_term(*payload, unfold_mu(list_ty));
      auto body = m_case(m_var("x"), "n", m_const(real_dist(rng)), "cell",
                         m_pairmatch(m_var("cell"), "h", "tl", m_var("h")));
      sides.emplace_back(m_unroll(m_roll(w, list_ty), "x", body), subst_term(body, "x", w));
    }
    for (const auto& [lhs, rhs] : sides) {
      ++instances;
      if (outcome_equiv(run(lhs), run(rhs))) ++holds;
    }
  }
  report(6, "beta rules evaluate identically on both sides", holds == instances,
         std::to_string(holds) + "/" + std::to_string(instances) + " instances (need >= 50)");
}

void criterion7_flatten() {
  std::vector<TypeRef> types = {
      t_real(),
      t_unit(),
      t_prod(t_real(), t_real()),
      t_sum(t_real(), t_real()),
      t_sum(t_unit(), t_real()),
      t_prod(t_real(), t_sum(t_real(), t_unit())),
      t_sum(t_prod(t_real(), t_real()), t_sum(t_unit(), t_real())),
      parse_type_text("mu a. unit + (real * a)"),
      parse_type_text("mu t. real + (t * t)"),
      parse_type_text("mu a. unit + ((mu b. unit + (real * b)) * a)"),
      parse_type_text("mu a. unit + ((unit + real) * a)"),
      t_prod(parse_type_text("mu t. real + (t * t)"), t_real()),
  };
  std::mt19937_64 rng(seed() + 4);
  int done = 0, ok = 0;
  for (int i = 0; done < 520 && i < 5000; ++i) {
    const auto& ty = types[static_cast<size_t>(i) % types.size()];
    auto v = random_value(ty, rng, -5.0, 5.0, 6);
    if (!v) continue;
    ++done;
    auto flat = flatten_value(*v, ty);
    if (value_equal(unflatten_value(flat), *v)) ++ok;
  }
  report(7, "flatten/unflatten round trip on positive types", done >= 500 && ok == done,
         std::to_string(ok) + "/" + std::to_string(done) + " values over " +
             std::to_string(types.size()) + " types, exact");
}

void criterion8_vector_space() {
  std::mt19937_64 rng(seed() + 5);
  long triples = 0, ok = 0;
  // integer-coefficient sparse vectors: laws hold exactly
  auto rand_sparse_int = [&] {
    Tangent::Sparse m;
    std::uniform_int_distribution<int> idx(1, 8), coeff(-6, 6);
    for (int i = 0; i < 4; ++i) m[idx(rng)] = coeff(rng);
    return Tangent::sparse(std::move(m));
  };
  for (int i = 0; i < 600; ++i) {
    auto a = rand_sparse_int(), b = rand_sparse_int(), c = rand_sparse_int();
    double s = std::uniform_int_distribution<int>(-5, 5)(rng);
    double t = std::uniform_int_distribution<int>(-5, 5)(rng);
    ++triples;
    bool good = tan_add(a, b) == tan_add(b, a) &&
                tan_add(tan_add(a, b), c) == tan_add(a, tan_add(b, c)) &&
                tan_scale(tan_add(a, b), s) == tan_add(tan_scale(a, s), tan_scale(b, s)) &&
                tan_scale(a, s + t) == tan_add(tan_scale(a, s), tan_scale(a, t));
    if (good) ++ok;
  }
  // float coefficients: within 1e-15 per coordinate
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  auto close = [](const Tangent& x, const Tangent& y) {
    for (int i = 1; i <= 10; ++i)
      if (std::abs(x.coordinate(i) - y.coordinate(i)) > 1e-15) return false;
    return true;
  };
  for (int i = 0; i < 600; ++i) {
    Tangent::Sparse ma{{1, coeff(rng)}, {3, coeff(rng)}};
    Tangent::Sparse mb{{1, coeff(rng)}, {2, coeff(rng)}};
    auto a = Tangent::sparse(ma), b = Tangent::sparse(mb);
    double s = coeff(rng);
    ++triples;
    if (close(tan_scale(tan_add(a, b), s), tan_add(tan_scale(a, s), tan_scale(b, s)))) ++ok;
  }
  report(8, "tangent vector-space laws incl. linear factoring", triples >= 1000 && ok == triples,
         std::to_string(ok) + "/" + std::to_string(triples) + " triples");
}

void criterion9_taylor() {
  auto file = load_corpus("taylor_exp.dfpc");
  auto prog = program_from_def(file, *file.find("taylor_exp"));
  bool pass = true;
  double worst_val = 0.0, worst_deriv = 0.0;
  for (int i = 0; i < 20; ++i) {
    double x = -3.0 + 6.0 * i / 19.0;
    auto point = flatten_value(v_real(x), t_real());
    auto out = eval(nullptr, m_app(prog.fn, m_const(x)), Backend::k1);
    if (!out.outcome.converged()) { pass = false; continue; }
    double got = std::get<val::Real>(out.outcome.value()->node).v;
    worst_val = std::max(worst_val, std::abs(got - taylor_exp_oracle(x)));
    if (std::abs(got - taylor_exp_oracle(x)) > 1e-7) pass = false;

    auto r = forward_check(prog, point, {1.0}, 1e-6, 1e-5);
    if (r.verdict != Verdict::pass) { pass = false; continue; }
    worst_deriv = std::max(worst_deriv, std::abs(r.jacobian[0][0] - std::exp(x)));
    if (std::abs(r.jacobian[0][0] - std::exp(x)) > 1e-5) pass = false;
  }
  report(9, "underflow-truncated Taylor exp and its forward derivative", pass,
         "|value - oracle| <= " + fmt_double(worst_val) + " (bound 1e-7); |d/dx - exp| <= " +
             fmt_double(worst_deriv) + " (bound 1e-5)");
}

} // namespace

int main() {
  ensure_default_ops();
  std::printf("acceptance suite (seed %llu)\n", static_cast<unsigned long long>(seed()));

  criterion1_type_preservation();
  criterion2_primitive_soundness();
  auto progs = numeric_programs();
  criterion3_forward(progs);
  criterion4_reverse(progs);
  criterion5_partiality(progs);
  criterion6_beta();
  criterion7_flatten();
  criterion8_vector_space();
  criterion9_taylor();

  std::printf("%s\n", failures == 0 ? "all criteria passed" : "some criteria FAILED");
  return failures;
}

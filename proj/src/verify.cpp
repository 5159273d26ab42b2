#include "dualfpc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dualfpc/ad.hpp"
#include "dualfpc/ops.hpp"
#include "dualfpc/pretty.hpp"

#include "json.hpp"

namespace dualfpc {

namespace {
ShapeRef mks(Shape::Node n) { return std::make_shared<const Shape>(Shape{std::move(n)}); }
ShapeRef s_hole() { static ShapeRef s = mks(sh::Hole{}); return s; }
ShapeRef s_unit() { static ShapeRef s = mks(sh::Unit{}); return s; }
} // namespace

bool shape_equal(const ShapeRef& a, const ShapeRef& b) {
  if (a->node.index() != b->node.index()) return false;
  return std::visit(overloaded{
    [&](const sh::Hole&) { return true; },
    [&](const sh::Unit&) { return true; },
    [&](const sh::Inl& i) { return shape_equal(i.inner, std::get<sh::Inl>(b->node).inner); },
    [&](const sh::Inr& i) { return shape_equal(i.inner, std::get<sh::Inr>(b->node).inner); },
    [&](const sh::Pair& p) {
      const auto& q = std::get<sh::Pair>(b->node);
      return shape_equal(p.first, q.first) && shape_equal(p.second, q.second);
    },
    [&](const sh::Roll& r) { return shape_equal(r.inner, std::get<sh::Roll>(b->node).inner); },
  }, a->node);
}

size_t shape_holes(const ShapeRef& s) {
  return std::visit(overloaded{
    [](const sh::Hole&) -> size_t { return 1; },
    [](const sh::Unit&) -> size_t { return 0; },
    [](const sh::Inl& i) { return shape_holes(i.inner); },
    [](const sh::Inr& i) { return shape_holes(i.inner); },
    [](const sh::Pair& p) { return shape_holes(p.first) + shape_holes(p.second); },
    [](const sh::Roll& r) { return shape_holes(r.inner); },
  }, s->node);
}

std::string shape_str(const ShapeRef& s) {
  return std::visit(overloaded{
    [](const sh::Hole&) -> std::string { return "_"; },
    [](const sh::Unit&) -> std::string { return "()"; },
    [](const sh::Inl& i) { return "inl " + shape_str(i.inner); },
    [](const sh::Inr& i) { return "inr " + shape_str(i.inner); },
    [](const sh::Pair& p) { return "(" + shape_str(p.first) + ", " + shape_str(p.second) + ")"; },
    [](const sh::Roll& r) { return "roll(" + shape_str(r.inner) + ")"; },
  }, s->node);
}

namespace {

ShapeRef flatten_walk(const ValueRef& v, const TypeRef& type, std::vector<double>& slots) {
  auto wrong = [&]() -> ShapeRef {
    throw std::invalid_argument("flatten_value: value does not inhabit " + pretty(type));
  };
  return std::visit(overloaded{
    [&](const ty::Real&) -> ShapeRef {
      const auto* r = std::get_if<val::Real>(&v->node);
      if (!r) return wrong();
      slots.push_back(r->v);
      return s_hole();
    },
    [&](const ty::Unit&) -> ShapeRef {
      if (!std::holds_alternative<val::Unit>(v->node)) return wrong();
      return s_unit();
    },
    [&](const ty::Void&) -> ShapeRef { return wrong(); },
    [&](const ty::Sum& s) -> ShapeRef {
      if (const auto* l = std::get_if<val::Inl>(&v->node))
        return mks(sh::Inl{flatten_walk(l->v, s.left, slots)});
      if (const auto* r = std::get_if<val::Inr>(&v->node))
        return mks(sh::Inr{flatten_walk(r->v, s.right, slots)});
      return wrong();
    },
    [&](const ty::Prod& p) -> ShapeRef {
      const auto* pv = std::get_if<val::Pair>(&v->node);
      if (!pv) return wrong();
      auto first = flatten_walk(pv->first, p.left, slots);
      auto second = flatten_walk(pv->second, p.right, slots);
      return mks(sh::Pair{std::move(first), std::move(second)});
    },
    [&](const ty::Mu&) -> ShapeRef {
      const auto* rv = std::get_if<val::Roll>(&v->node);
      if (!rv) return wrong();
      return mks(sh::Roll{flatten_walk(rv->v, unfold_mu(type), slots)});
    },
    [&](const auto&) -> ShapeRef { return wrong(); },
  }, type->node);
}

} // namespace

FlatValue flatten_value(const ValueRef& v, const TypeRef& type) {
  if (!is_positive_type(type))
    throw std::invalid_argument("flatten_value: " + pretty(type) + " is not a positive type");
  FlatValue out;
  out.shape = flatten_walk(v, type, out.slots);
  return out;
}

namespace {

ValueRef unflatten_walk(const ShapeRef& s, const std::vector<double>& slots, size_t& cursor) {
  return std::visit(overloaded{
    [&](const sh::Hole&) -> ValueRef {
      if (cursor >= slots.size())
        throw std::invalid_argument("unflatten_value: slot vector too short");
      return v_real(slots[cursor++]);
    },
    [&](const sh::Unit&) -> ValueRef { return v_unit(); },
    [&](const sh::Inl& i) -> ValueRef { return v_inl(unflatten_walk(i.inner, slots, cursor)); },
    [&](const sh::Inr& i) -> ValueRef { return v_inr(unflatten_walk(i.inner, slots, cursor)); },
    [&](const sh::Pair& p) -> ValueRef {
      auto first = unflatten_walk(p.first, slots, cursor);
      return v_pair(std::move(first), unflatten_walk(p.second, slots, cursor));
    },
    [&](const sh::Roll& r) -> ValueRef { return v_roll(unflatten_walk(r.inner, slots, cursor)); },
  }, s->node);
}

} // namespace

ValueRef unflatten_value(const FlatValue& f) {
  size_t cursor = 0;
  auto v = unflatten_walk(f.shape, f.slots, cursor);
  if (cursor != f.slots.size())
    throw std::invalid_argument("unflatten_value: slot vector too long");
  return v;
}

std::vector<std::pair<double, Tangent>> interleave(const std::vector<double>& xs,
                                                   const std::vector<Tangent>& ws) {
  if (xs.size() != ws.size())
    throw std::invalid_argument("interleave: length mismatch");
  std::vector<std::pair<double, Tangent>> out;
  out.reserve(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) out.emplace_back(xs[i], ws[i]);
  return out;
}

std::pair<std::vector<double>, std::vector<Tangent>> deinterleave(
    const std::vector<std::pair<double, Tangent>>& zs) {
  std::pair<std::vector<double>, std::vector<Tangent>> out;
  out.first.reserve(zs.size());
  out.second.reserve(zs.size());
  for (const auto& [x, w] : zs) {
    out.first.push_back(x);
    out.second.push_back(w);
  }
  return out;
}

namespace {

ValueRef embed_walk(const ShapeRef& s, const std::vector<std::pair<double, Tangent>>& duals,
                    size_t& cursor) {
  return std::visit(overloaded{
    [&](const sh::Hole&) -> ValueRef {
      const auto& [x, w] = duals[cursor++];
      return v_pair(v_real(x), v_tan(w));
    },
    [&](const sh::Unit&) -> ValueRef { return v_unit(); },
    [&](const sh::Inl& i) -> ValueRef { return v_inl(embed_walk(i.inner, duals, cursor)); },
    [&](const sh::Inr& i) -> ValueRef { return v_inr(embed_walk(i.inner, duals, cursor)); },
    [&](const sh::Pair& p) -> ValueRef {
      auto first = embed_walk(p.first, duals, cursor);
      return v_pair(std::move(first), embed_walk(p.second, duals, cursor));
    },
    [&](const sh::Roll& r) -> ValueRef { return v_roll(embed_walk(r.inner, duals, cursor)); },
  }, s->node);
}

} // namespace

ValueRef dual_embed(const FlatValue& f, const std::vector<Tangent>& seeds, const TypeRef& type) {
  if (!is_positive_type(type))
    throw std::invalid_argument("dual_embed: " + pretty(type) + " is not a positive type");
  auto duals = interleave(f.slots, seeds);  // also checks the seed count
  size_t cursor = 0;
  return embed_walk(f.shape, duals, cursor);
}

namespace {

[[noreturn]] void dual_shape_error(const TypeRef& ty) {
  throw std::invalid_argument("dual value does not match shape of " + pretty(ty));
}

void dual_walk(const ValueRef& dual, const TypeRef& ty,
               const std::function<void(double, const Tangent&)>& on_slot,
               ValueRef* rebuilt) {
  std::visit(overloaded{
    [&](const ty::Real&) {
      const auto* p = std::get_if<val::Pair>(&dual->node);
      if (!p) dual_shape_error(ty);
      const auto* x = std::get_if<val::Real>(&p->first->node);
      const auto* w = std::get_if<val::Tan>(&p->second->node);
      if (!x || !w) dual_shape_error(ty);
      on_slot(x->v, w->t);
      if (rebuilt) *rebuilt = p->first;
    },
    [&](const ty::Unit&) {
      if (!std::holds_alternative<val::Unit>(dual->node)) dual_shape_error(ty);
      if (rebuilt) *rebuilt = v_unit();
    },
    [&](const ty::Sum& s) {
      if (const auto* l = std::get_if<val::Inl>(&dual->node)) {
        ValueRef inner;
        dual_walk(l->v, s.left, on_slot, rebuilt ? &inner : nullptr);
        if (rebuilt) *rebuilt = v_inl(std::move(inner));
        return;
      }
      if (const auto* r = std::get_if<val::Inr>(&dual->node)) {
        ValueRef inner;
        dual_walk(r->v, s.right, on_slot, rebuilt ? &inner : nullptr);
        if (rebuilt) *rebuilt = v_inr(std::move(inner));
        return;
      }
      dual_shape_error(ty);
    },
    [&](const ty::Prod& p) {
      const auto* pv = std::get_if<val::Pair>(&dual->node);
      if (!pv) dual_shape_error(ty);
      ValueRef a, b;
      dual_walk(pv->first, p.left, on_slot, rebuilt ? &a : nullptr);
      dual_walk(pv->second, p.right, on_slot, rebuilt ? &b : nullptr);
      if (rebuilt) *rebuilt = v_pair(std::move(a), std::move(b));
    },
    [&](const ty::Mu&) {
      const auto* rv = std::get_if<val::Roll>(&dual->node);
      if (!rv) dual_shape_error(ty);
      ValueRef inner;
      dual_walk(rv->v, unfold_mu(ty), on_slot, rebuilt ? &inner : nullptr);
      if (rebuilt) *rebuilt = v_roll(std::move(inner));
    },
    [&](const auto&) { dual_shape_error(ty); },
  }, ty->node);
}

} // namespace

ValueRef erase_dual(const ValueRef& dual, const TypeRef& source_type) {
  ValueRef out;
  dual_walk(dual, source_type, [](double, const Tangent&) {}, &out);
  return out;
}

std::vector<Tangent> dual_tangents(const ValueRef& dual, const TypeRef& source_type) {
  std::vector<Tangent> out;
  dual_walk(dual, source_type,
            [&](double, const Tangent& w) { out.push_back(w); }, nullptr);
  return out;
}

bool type_inhabited(const TypeRef& type, int depth) {
  return std::visit(overloaded{
    [](const ty::Real&) { return true; },
    [](const ty::Unit&) { return true; },
    [](const ty::Void&) { return false; },
    [&](const ty::Sum& s) {
      return type_inhabited(s.left, depth) || type_inhabited(s.right, depth);
    },
    [&](const ty::Prod& p) {
      return type_inhabited(p.left, depth) && type_inhabited(p.right, depth);
    },
    [&](const ty::Mu&) { return depth > 0 && type_inhabited(unfold_mu(type), depth - 1); },
    [](const auto&) { return false; },
  }, type->node);
}

std::optional<ValueRef> random_value(const TypeRef& type, std::mt19937_64& rng, double lo,
                                     double hi, int depth) {
  if (!type_inhabited(type, depth)) return std::nullopt;
  return std::visit(overloaded{
    [&](const ty::Real&) -> std::optional<ValueRef> {
      std::uniform_real_distribution<double> dist(lo, hi);
      return v_real(dist(rng));
    },
    [&](const ty::Unit&) -> std::optional<ValueRef> { return v_unit(); },
    [&](const ty::Sum& s) -> std::optional<ValueRef> {
      bool l_ok = type_inhabited(s.left, depth);
      bool r_ok = type_inhabited(s.right, depth);
      bool pick_left = l_ok && (!r_ok || std::uniform_int_distribution<int>(0, 1)(rng) == 0);
      if (pick_left) {
        auto v = random_value(s.left, rng, lo, hi, depth);
        return v ? std::optional<ValueRef>(v_inl(*v)) : std::nullopt;
      }
      auto v = random_value(s.right, rng, lo, hi, depth);
      return v ? std::optional<ValueRef>(v_inr(*v)) : std::nullopt;
    },
    [&](const ty::Prod& p) -> std::optional<ValueRef> {
      auto a = random_value(p.left, rng, lo, hi, depth);
      auto b = random_value(p.right, rng, lo, hi, depth);
      if (!a || !b) return std::nullopt;
      return v_pair(*a, *b);
    },
    [&](const ty::Mu&) -> std::optional<ValueRef> {
      auto v = random_value(unfold_mu(type), rng, lo, hi, depth - 1);
      return v ? std::optional<ValueRef>(v_roll(*v)) : std::nullopt;
    },
    [&](const auto&) -> std::optional<ValueRef> { return std::nullopt; },
  }, type->node);
}

Program program_from_def(const SourceFile& file, const Definition& def) {
  const auto* arrow = std::get_if<ty::Arrow>(&def.declared_type->node);
  if (!arrow)
    throw std::invalid_argument("definition '" + def.name + "' is not a function");
  if (!is_positive_type(arrow->arg) || !is_positive_type(arrow->res))
    throw std::invalid_argument("definition '" + def.name +
                                "' is not between positive types");
  Program p;
  p.name = def.name;
  p.fn = linked_term(file, def.name);
  p.dual_fn = ad_term(p.fn);
  p.input_type = arrow->arg;
  p.output_type = arrow->res;
  return p;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

namespace {

// evaluate a closed function term to its closure once, then apply
Outcome call_program(const TermRef& fn, const ValueRef& arg, Backend backend, long fuel,
                     std::vector<signed char>* sign_trace = nullptr) {
  auto fnr = eval(nullptr, fn, backend, fuel);
  if (!fnr.outcome.converged()) return fnr.outcome;
  return apply_function(fnr.outcome.value(), arg, backend, fuel - fnr.steps,
                        EvalHooks{sign_trace})
      .outcome;
}

double probe_step(double eps, double x) { return eps * std::max(1.0, std::abs(x)); }

} // namespace

std::variant<Matrix, KinkDetected> finite_diff_jacobian(const Program& prog,
                                                        const FlatValue& point,
                                                        double eps, long fuel) {
  std::vector<signed char> base_trace;
  auto base = call_program(prog.fn, unflatten_value(point), Backend::k1, fuel, &base_trace);
  if (base.fuel_exhausted()) return KinkDetected{"base point ran out of fuel"};
  if (base.is_bottom()) return KinkDetected{"base point is undefined: " + describe(base)};
  auto base_flat = flatten_value(base.value(), prog.output_type);

  const size_t n = point.slots.size();
  const size_t m = base_flat.slots.size();
  Matrix jac(m, std::vector<double>(n, 0.0));

  for (size_t j = 0; j < n; ++j) {
    double h = probe_step(eps, point.slots[j]);
    FlatValue probe = point;
    std::vector<std::vector<double>> sides;
    for (double dir : {+1.0, -1.0}) {
      probe.slots[j] = point.slots[j] + dir * h;
      std::vector<signed char> trace;
      auto out = call_program(prog.fn, unflatten_value(probe), Backend::k1, fuel, &trace);
      if (out.is_bottom())
        return KinkDetected{"probe at slot " + std::to_string(j + 1) +
                            " is undefined: " + describe(out)};
      if (trace != base_trace)
        return KinkDetected{"probe at slot " + std::to_string(j + 1) +
                            " crossed a sign boundary"};
      auto flat = flatten_value(out.value(), prog.output_type);
      if (!shape_equal(flat.shape, base_flat.shape))
        return KinkDetected{"probe at slot " + std::to_string(j + 1) +
                            " changed the output component"};
      sides.push_back(std::move(flat.slots));
    }
    for (size_t i = 0; i < m; ++i) jac[i][j] = (sides[0][i] - sides[1][i]) / (2.0 * h);
  }
  return jac;
}

std::string verdict_str(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::kink: return "kink";
    case Verdict::bottom_consistent: return "bottom-consistent";
    case Verdict::bottom_mismatch: return "bottom-mismatch";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

// Shared preamble of both checks: run primal and dual, settle the bottom
// bookkeeping. Returns nullopt when the report is already final.
struct DualRun {
  ValueRef primal;
  ValueRef dual;
};

std::optional<DualRun> run_both(const Program& prog, const FlatValue& point,
                                const std::vector<Tangent>& seeds, Backend backend,
                                long fuel, JacobianReport& report) {
  auto primal = call_program(prog.fn, unflatten_value(point), backend, fuel);
  auto dual = call_program(prog.dual_fn, dual_embed(point, seeds, prog.input_type),
                           backend, fuel);

  if (primal.fuel_exhausted() || dual.fuel_exhausted()) {
    report.verdict = Verdict::inconclusive;
    report.kinks.push_back("fuel exhausted; cannot classify");
    return std::nullopt;
  }
  if (primal.domain_error() != dual.domain_error()) {
    report.verdict = Verdict::bottom_mismatch;
    report.kinks.push_back("primal: " + describe(primal) + "; dual: " + describe(dual));
    return std::nullopt;
  }
  if (primal.domain_error()) {
    report.verdict = Verdict::bottom_consistent;
    report.kinks.push_back("both runs undefined: " + describe(primal));
    return std::nullopt;
  }
  return DualRun{primal.value(), dual.value()};
}

} // namespace

JacobianReport forward_check(const Program& prog, const FlatValue& point,
                             const std::vector<double>& direction, double eps, double tol,
                             long fuel) {
  JacobianReport report;
  report.program = prog.name;
  report.mode = "fwd";
  report.point = point;
  if (direction.size() != point.slots.size())
    throw std::invalid_argument("forward_check: direction length mismatch");

  std::vector<Tangent> seeds;
  seeds.reserve(direction.size());
  for (double d : direction) seeds.push_back(Tangent::scalar(d));

  auto run = run_both(prog, point, seeds, Backend::k1, fuel, report);
  if (!run) return report;

  report.primal_bitwise_equal =
      value_equal(erase_dual(run->dual, prog.output_type), run->primal);

  auto tangents = dual_tangents(run->dual, prog.output_type);
  const size_t m = tangents.size();
  report.jacobian.assign(m, std::vector<double>(1, 0.0));
  for (size_t i = 0; i < m; ++i) report.jacobian[i][0] = tangents[i].scalar_value();

  // directional central difference at the same point
  double x_mag = 0.0, d_mag = 0.0;
  for (double x : point.slots) x_mag = std::max(x_mag, std::abs(x));
  for (double d : direction) d_mag = std::max(d_mag, std::abs(d));
  double h = eps * std::max(1.0, x_mag) / std::max(1.0, d_mag);

  auto base_flat = flatten_value(run->primal, prog.output_type);
  report.output_shape = base_flat.shape;
  std::vector<signed char> base_trace;
  call_program(prog.fn, unflatten_value(point), Backend::k1, fuel, &base_trace);
  std::vector<std::vector<double>> sides;
  for (double dir : {+1.0, -1.0}) {
    FlatValue probe = point;
    for (size_t j = 0; j < probe.slots.size(); ++j) probe.slots[j] += dir * h * direction[j];
    std::vector<signed char> trace;
    auto out = call_program(prog.fn, unflatten_value(probe), Backend::k1, fuel, &trace);
    if (out.is_bottom()) {
      report.verdict = Verdict::kink;
      report.kinks.push_back("directional probe undefined: " + describe(out));
      return report;
    }
    if (trace != base_trace) {
      report.verdict = Verdict::kink;
      report.kinks.push_back("directional probe crossed a sign boundary");
      return report;
    }
    auto flat = flatten_value(out.value(), prog.output_type);
    if (!shape_equal(flat.shape, base_flat.shape)) {
      report.verdict = Verdict::kink;
      report.kinks.push_back("directional probe changed the output component");
      return report;
    }
    sides.push_back(std::move(flat.slots));
  }
  report.oracle.assign(m, std::vector<double>(1, 0.0));
  for (size_t i = 0; i < m; ++i)
    report.oracle[i][0] = (sides[0][i] - sides[1][i]) / (2.0 * h);

  for (size_t i = 0; i < m; ++i) {
    report.max_abs_err =
        std::max(report.max_abs_err, std::abs(report.jacobian[i][0] - report.oracle[i][0]));
    report.max_rel_err =
        std::max(report.max_rel_err, rel_err(report.jacobian[i][0], report.oracle[i][0]));
  }
  report.verdict = (report.primal_bitwise_equal && report.max_rel_err <= tol)
                       ? Verdict::pass
                       : Verdict::fail;
  return report;
}

JacobianReport reverse_jacobian(const Program& prog, const FlatValue& point, double eps,
                                double tol, long fuel) {
  JacobianReport report;
  report.program = prog.name;
  report.mode = "rev";
  report.point = point;

  const size_t n = point.slots.size();
  std::vector<Tangent> seeds;
  seeds.reserve(n);
  for (size_t j = 0; j < n; ++j)
    seeds.push_back(Tangent::basis(static_cast<int>(j) + 1, Backend::kinf));

  auto run = run_both(prog, point, seeds, Backend::kinf, fuel, report);
  if (!run) return report;

  report.primal_bitwise_equal =
      value_equal(erase_dual(run->dual, prog.output_type), run->primal);
  report.output_shape = flatten_value(run->primal, prog.output_type).shape;

  auto tangents = dual_tangents(run->dual, prog.output_type);
  const size_t m = tangents.size();
  report.jacobian.assign(m, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < m; ++i) {
    auto row = tangents[i].project(static_cast<int>(n == 0 ? 1 : n));
    for (size_t j = 0; j < n; ++j) report.jacobian[i][j] = row[j];
  }

  auto fd = finite_diff_jacobian(prog, point, eps, fuel);
  if (const auto* kink = std::get_if<KinkDetected>(&fd)) {
    report.verdict = Verdict::kink;
    report.kinks.push_back(kink->reason);
    return report;
  }
  report.oracle = std::get<Matrix>(fd);

  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) {
      report.max_abs_err =
          std::max(report.max_abs_err, std::abs(report.jacobian[i][j] - report.oracle[i][j]));
      report.max_rel_err =
          std::max(report.max_rel_err, rel_err(report.jacobian[i][j], report.oracle[i][j]));
    }

  // forward runs, one basis direction at a time, must reproduce the columns
  for (size_t j = 0; j < n; ++j) {
    std::vector<double> dir(n, 0.0);
    dir[j] = 1.0;
    std::vector<Tangent> fseeds;
    for (double d : dir) fseeds.push_back(Tangent::scalar(d));
    JacobianReport sub;
    sub.point = point;
    auto frun = run_both(prog, point, fseeds, Backend::k1, fuel, sub);
    if (!frun) {
      report.verdict = sub.verdict;
      report.kinks.push_back("forward column " + std::to_string(j + 1) + ": " +
                             (sub.kinks.empty() ? "unavailable" : sub.kinks.front()));
      return report;
    }
    auto ftans = dual_tangents(frun->dual, prog.output_type);
    for (size_t i = 0; i < m; ++i)
      report.fwd_vs_rev_rel =
          std::max(report.fwd_vs_rev_rel,
                   rel_err(ftans[i].scalar_value(), report.jacobian[i][j]));
  }

  report.verdict = (report.primal_bitwise_equal && report.max_rel_err <= tol &&
                    report.fwd_vs_rev_rel <= 1e-9)
                       ? Verdict::pass
                       : Verdict::fail;
  return report;
}

ChainRuleReport chain_rule_check(const std::string& op, int trials, uint64_t seed, double eps,
                                 double tol) {
  ensure_default_ops();
  const auto& sig = OpRegistry::instance().require(op);
  std::mt19937_64 rng(seed);

  ChainRuleReport report;
  report.op = op;

  // D(op) applied to symbolic dual arguments, evaluated per sample point
  std::vector<TermRef> arg_vars;
  std::vector<std::string> arg_names;
  for (int j = 0; j < sig.arity; ++j) {
    arg_names.push_back("in" + std::to_string(j + 1));
    arg_vars.push_back(m_var(arg_names.back()));
  }
  auto dual_op = ad_term(m_primop(op, arg_vars));

  for (int t = 0; t < trials; ++t) {
    std::vector<double> args(static_cast<size_t>(sig.arity), 0.0);
    bool found = false;
    for (int attempt = 0; attempt < 100 && !found; ++attempt) {
      for (int j = 0; j < sig.arity; ++j) {
        auto [lo, hi] = sig.sample_range[static_cast<size_t>(j)];
        args[static_cast<size_t>(j)] = std::uniform_real_distribution<double>(lo, hi)(rng);
      }
      found = sig.in_domain(args);
    }
    if (!found) continue;
    ++report.trials;

    EnvRef env;
    for (int j = 0; j < sig.arity; ++j)
      env = env_extend(env, arg_names[static_cast<size_t>(j)],
                       v_pair(v_real(args[static_cast<size_t>(j)]),
                              v_tan(Tangent::basis(j + 1, Backend::kinf))));
    auto out = eval(env, dual_op, Backend::kinf);
    if (!out.outcome.converged())
      throw std::logic_error("chain_rule_check: dual op diverged in-domain: " +
                             describe(out.outcome));
    const auto& pair = std::get<val::Pair>(out.outcome.value()->node);
    const auto& grad = std::get<val::Tan>(pair.second->node).t;

    for (int j = 0; j < sig.arity; ++j) {
      double ad = grad.coordinate(j + 1);
      double analytic = sig.deriv_analytic[static_cast<size_t>(j)](args);

      double h = probe_step(eps, args[static_cast<size_t>(j)]);
      auto probe = args;
      probe[static_cast<size_t>(j)] = args[static_cast<size_t>(j)] + h;
      auto plus = sig.sem(probe);
      probe[static_cast<size_t>(j)] = args[static_cast<size_t>(j)] - h;
      auto minus = sig.sem(probe);
      if (!plus || !minus) continue;  // stepped over the domain boundary
      double fd = (*plus - *minus) / (2.0 * h);

      double e_fd = rel_err(ad, fd);
      double e_an = rel_err(ad, analytic);
      if (e_fd > report.max_rel_err_vs_fd) {
        report.max_rel_err_vs_fd = e_fd;
        report.worst_point = args;
      }
      report.max_rel_err_vs_analytic = std::max(report.max_rel_err_vs_analytic, e_an);
    }
  }
  report.pass = report.trials > 0 && report.max_rel_err_vs_fd <= tol;
  return report;
}

std::string report_json(const JacobianReport& r) {
  nlohmann::json j;
  j["program"] = r.program;
  j["mode"] = r.mode;
  j["point"] = {{"shape", shape_str(r.point.shape)}, {"slots", r.point.slots}};
  if (r.output_shape) j["output_shape"] = shape_str(r.output_shape);
  j["jacobian"] = r.jacobian;
  j["oracle"] = r.oracle;
  j["max_abs_err"] = r.max_abs_err;
  j["max_rel_err"] = r.max_rel_err;
  if (r.mode == "rev") j["fwd_vs_rev_rel"] = r.fwd_vs_rev_rel;
  j["primal_bitwise_equal"] = r.primal_bitwise_equal;
  j["kinks"] = r.kinks;
  j["verdict"] = verdict_str(r.verdict);
  return j.dump();
}

} // namespace dualfpc

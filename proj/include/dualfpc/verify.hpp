#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dualfpc/ast.hpp"
#include "dualfpc/eval.hpp"
#include "dualfpc/surface.hpp"
#include "dualfpc/tangent.hpp"

namespace dualfpc {

// ---- value-level flattening of positive types ----
//
// A value of a positive type is a point in one component of a coproduct of
// finite real powers: the shape names the component, the slot vector is the
// point. Real slots are collected left to right, depth first.

struct Shape;
using ShapeRef = std::shared_ptr<const Shape>;

namespace sh {
struct Hole {};
struct Unit {};
struct Inl { ShapeRef inner; };
struct Inr { ShapeRef inner; };
struct Pair { ShapeRef first, second; };
struct Roll { ShapeRef inner; };
} // namespace sh

struct Shape {
  using Node = std::variant<sh::Hole, sh::Unit, sh::Inl, sh::Inr, sh::Pair, sh::Roll>;
  Node node;
};

bool shape_equal(const ShapeRef& a, const ShapeRef& b);
size_t shape_holes(const ShapeRef& s);
std::string shape_str(const ShapeRef& s);

struct FlatValue {
  ShapeRef shape;
  std::vector<double> slots;
};

// requires is_positive_type(type) and v : type
FlatValue flatten_value(const ValueRef& v, const TypeRef& type);
ValueRef unflatten_value(const FlatValue& f);

// ---- interleaving (pairing a point with its tangent seeds) ----

std::vector<std::pair<double, Tangent>> interleave(const std::vector<double>& xs,
                                                   const std::vector<Tangent>& ws);
std::pair<std::vector<double>, std::vector<Tangent>> deinterleave(
    const std::vector<std::pair<double, Tangent>>& zs);

// Rebuilds f's value with each real slot x_j replaced by (x_j, seeds[j]);
// the result inhabits ad_type(type).
ValueRef dual_embed(const FlatValue& f, const std::vector<Tangent>& seeds,
                    const TypeRef& type);

// structural erasure of a dual value back to the source type
ValueRef erase_dual(const ValueRef& dual, const TypeRef& source_type);
// the tangent carried by each real slot, in flattening order
std::vector<Tangent> dual_tangents(const ValueRef& dual, const TypeRef& source_type);

// ---- random values of positive types ----

bool type_inhabited(const TypeRef& type, int depth);
// nullopt when the type has no inhabitants within the unfolding depth
std::optional<ValueRef> random_value(const TypeRef& type, std::mt19937_64& rng,
                                     double lo, double hi, int depth = 6);

// ---- programs under test ----

struct Program {
  std::string name;
  TermRef fn;       // closed, of type input_type -> output_type
  TermRef dual_fn;  // ad_term(fn)
  TypeRef input_type, output_type;  // both positive
};

// throws std::invalid_argument unless the definition is a function between
// positive types
Program program_from_def(const SourceFile& file, const Definition& def);

// ---- finite differences ----

struct KinkDetected { std::string reason; };
using Matrix = std::vector<std::vector<double>>;

// Central differences per input slot, step eps * max(1, |x_j|). Any probe
// that errors, runs out of fuel, or lands in a different output component is
// a kink (the component must be locally constant for the derivative to
// exist).
std::variant<Matrix, KinkDetected> finite_diff_jacobian(const Program& prog,
                                                        const FlatValue& point,
                                                        double eps,
                                                        long fuel = kDefaultFuel);

// ---- correctness checks ----

enum class Verdict { pass, fail, kink, bottom_consistent, bottom_mismatch, inconclusive };
std::string verdict_str(Verdict v);

struct JacobianReport {
  std::string program;
  std::string mode;  // "fwd" or "rev"
  FlatValue point;
  ShapeRef output_shape;    // component of the output coproduct, when converged
  Matrix jacobian;          // fwd: single column (directional); rev: full
  Matrix oracle;            // finite differences, same layout
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;  // |a-b| / max(1, |a|, |b|)
  double fwd_vs_rev_rel = 0.0;  // rev mode only
  bool primal_bitwise_equal = true;
  std::vector<std::string> kinks;
  Verdict verdict = Verdict::pass;
};

std::string report_json(const JacobianReport& r);

// Runs the dual program at `point` seeded with `direction` (k=1 backend),
// demands the primal half be bitwise what direct evaluation produces, and
// compares the tangent half against a finite-difference directional
// derivative.
JacobianReport forward_check(const Program& prog, const FlatValue& point,
                             const std::vector<double>& direction, double eps,
                             double tol, long fuel = kDefaultFuel);

// Runs the dual program once with basis seeds (k=inf backend), reads each
// output slot's tangent through the projection handler semantics, and
// compares against finite differences and per-direction forward runs.
JacobianReport reverse_jacobian(const Program& prog, const FlatValue& point,
                                double eps, double tol, long fuel = kDefaultFuel);

struct ChainRuleReport {
  std::string op;
  int trials = 0;
  double max_rel_err_vs_fd = 0.0;        // dual evaluation vs finite differences
  double max_rel_err_vs_analytic = 0.0;  // dual evaluation vs analytic partials
  bool pass = false;
  std::vector<double> worst_point;
};

// Samples in-domain points and checks that evaluating the dual-number block
// for `op` recovers the op's vectorised derivative.
ChainRuleReport chain_rule_check(const std::string& op, int trials, uint64_t seed,
                                 double eps, double tol);

// guarded relative error, |a-b| / max(1, |a|, |b|)
double rel_err(double a, double b);

} // namespace dualfpc

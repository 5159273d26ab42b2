#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualfpc/ast.hpp"

namespace dualfpc {

// A primitive operation R^n ~> R with an open domain of definition.
// `sem` returns nullopt outside the domain. `deriv_terms[j]` builds the
// source-language term for the j-th partial derivative applied to the given
// argument terms; `deriv_analytic[j]` is the same partial as a direct C++
// function, kept separate so verification has an oracle that does not go
// through the term machinery.
struct OpSignature {
  std::string symbol;
  int arity = 0;
  std::string domain_desc;
  std::function<std::optional<double>(std::span<const double>)> sem;
  std::vector<std::function<TermRef(const std::vector<TermRef>&)>> deriv_terms;
  std::vector<std::function<double(std::span<const double>)>> deriv_analytic;
  // sampling interval per argument for randomized checks
  std::vector<std::pair<double, double>> sample_range;

  bool in_domain(std::span<const double> args) const { return sem(args).has_value(); }
};

class OpRegistry {
 public:
  static OpRegistry& instance();

  // throws std::invalid_argument on duplicate symbol or arity mismatch
  void register_op(OpSignature sig);

  const OpSignature* lookup(const std::string& symbol) const;
  const OpSignature& require(const std::string& symbol) const;  // throws if absent
  const std::map<std::string, OpSignature>& all() const { return ops_; }

 private:
  std::map<std::string, OpSignature> ops_;
};

// Installs +, -, *, /, neg, sin, cos, exp, log, sqrt, sigmoid. Idempotent.
void ensure_default_ops();

// stable numerical sigmoid, shared with the op table
double sigmoid(double x);

} // namespace dualfpc

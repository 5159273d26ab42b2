#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "dualfpc/ast.hpp"
#include "dualfpc/tangent.hpp"

namespace dualfpc {

struct Value;
using ValueRef = std::shared_ptr<const Value>;

struct EnvNode;
using EnvRef = std::shared_ptr<const EnvNode>;

namespace val {
struct Real { double v; };
struct Tan { Tangent t; };
struct Unit {};
struct Inl { ValueRef v; };
struct Inr { ValueRef v; };
struct Pair { ValueRef first, second; };
struct Closure { EnvRef env; std::string param; TermRef body; };
struct Roll { ValueRef v; };
} // namespace val

struct Value {
  using Node = std::variant<val::Real, val::Tan, val::Unit, val::Inl, val::Inr,
                            val::Pair, val::Closure, val::Roll>;
  Node node;
};

ValueRef v_real(double v);  // asserts finiteness
ValueRef v_tan(Tangent t);
ValueRef v_unit();
ValueRef v_inl(ValueRef v);
ValueRef v_inr(ValueRef v);
ValueRef v_pair(ValueRef a, ValueRef b);
ValueRef v_closure(EnvRef env, std::string param, TermRef body);
ValueRef v_roll(ValueRef v);

// persistent environment (name lookups walk the chain)
struct EnvNode {
  std::string name;
  ValueRef value;
  EnvRef next;
};
EnvRef env_extend(EnvRef env, std::string name, ValueRef value);
const ValueRef* env_lookup(const EnvRef& env, const std::string& name);

// Both error outcomes denote the same semantic least element; they are kept
// apart only for diagnostics.
struct DomainError {
  std::string op;
  std::vector<double> args;
};
struct FuelExhausted { long steps; };

struct Outcome {
  std::variant<ValueRef, DomainError, FuelExhausted> v;

  bool converged() const { return std::holds_alternative<ValueRef>(v); }
  bool is_bottom() const { return !converged(); }
  bool domain_error() const { return std::holds_alternative<DomainError>(v); }
  bool fuel_exhausted() const { return std::holds_alternative<FuelExhausted>(v); }
  const ValueRef& value() const { return std::get<ValueRef>(v); }
  const DomainError& error() const { return std::get<DomainError>(v); }
};

struct EvalResult {
  Outcome outcome;
  long steps = 0;
};

constexpr long kDefaultFuel = 1'000'000;

// Optional instrumentation. The sign trace records every branch sign takes
// (+1 right, -1 left); finite-difference probes compare traces to tell when
// a probe stepped over a kink.
struct EvalHooks {
  std::vector<signed char>* sign_trace = nullptr;
};

// CBV evaluation of t under env. Every node visit costs one unit of fuel;
// a fuel of zero or below at a step yields FuelExhausted.
EvalResult eval(EnvRef env, const TermRef& t, Backend backend, long fuel = kDefaultFuel,
                EvalHooks hooks = {});

// applies an already-evaluated closure to an argument value
EvalResult apply_function(const ValueRef& fn, const ValueRef& arg, Backend backend,
                          long fuel = kDefaultFuel, EvalHooks hooks = {});

// primitive semantics on an open domain; finite result or DomainError
std::variant<double, DomainError> apply_prim(const std::string& op,
                                             const std::vector<double>& args);

// inl () for negatives, inr () for positives, domain error at exactly 0
std::variant<ValueRef, DomainError> sign_sem(double x);

// bitwise on reals; closures compare code up to alpha and captured values on
// free variables
bool value_equal(const ValueRef& a, const ValueRef& b);

std::string pretty_value(const ValueRef& v);
std::string describe(const Outcome& o);

} // namespace dualfpc

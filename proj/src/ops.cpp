#include "dualfpc/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace dualfpc {

OpRegistry& OpRegistry::instance() {
  static OpRegistry reg;
  return reg;
}

void OpRegistry::register_op(OpSignature sig) {
  if (sig.arity < 0) throw std::invalid_argument("op arity must be >= 0");
  if (static_cast<int>(sig.deriv_terms.size()) != sig.arity ||
      static_cast<int>(sig.deriv_analytic.size()) != sig.arity)
    throw std::invalid_argument("op '" + sig.symbol + "': derivative count does not match arity");
  if (ops_.count(sig.symbol))
    throw std::invalid_argument("duplicate op symbol '" + sig.symbol + "'");
  ops_.emplace(sig.symbol, std::move(sig));
}

const OpSignature* OpRegistry::lookup(const std::string& symbol) const {
  auto it = ops_.find(symbol);
  return it == ops_.end() ? nullptr : &it->second;
}

const OpSignature& OpRegistry::require(const std::string& symbol) const {
  const auto* sig = lookup(symbol);
  if (!sig) throw std::invalid_argument("unknown op symbol '" + symbol + "'");
  return *sig;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

std::optional<double> finite_or_nothing(double v) {
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

TermRef op1(const std::string& sym, TermRef a) { return m_primop(sym, {std::move(a)}); }
TermRef op2(const std::string& sym, TermRef a, TermRef b) {
  return m_primop(sym, {std::move(a), std::move(b)});
}

void install_defaults(OpRegistry& reg) {
  using Args = std::span<const double>;
  const std::pair<double, double> whole{-3.0, 3.0};
  const std::pair<double, double> positive{0.1, 100.0};

  reg.register_op({
      "+", 2, "total",
      [](Args a) { return finite_or_nothing(a[0] + a[1]); },
      {[](const std::vector<TermRef>&) { return m_const(1.0); },
       [](const std::vector<TermRef>&) { return m_const(1.0); }},
      {[](Args) { return 1.0; }, [](Args) { return 1.0; }},
      {whole, whole}});

  reg.register_op({
      "-", 2, "total",
      [](Args a) { return finite_or_nothing(a[0] - a[1]); },
      {[](const std::vector<TermRef>&) { return m_const(1.0); },
       [](const std::vector<TermRef>&) { return m_const(-1.0); }},
      {[](Args) { return 1.0; }, [](Args) { return -1.0; }},
      {whole, whole}});

  reg.register_op({
      "*", 2, "total",
      [](Args a) { return finite_or_nothing(a[0] * a[1]); },
      {[](const std::vector<TermRef>& a) { return a[1]; },
       [](const std::vector<TermRef>& a) { return a[0]; }},
      {[](Args a) { return a[1]; }, [](Args a) { return a[0]; }},
      {whole, whole}});

  reg.register_op({
      "/", 2, "second argument nonzero",
      [](Args a) -> std::optional<double> {
        if (a[1] == 0.0) return std::nullopt;
        return finite_or_nothing(a[0] / a[1]);
      },
      {[](const std::vector<TermRef>& a) { return op2("/", m_const(1.0), a[1]); },
       [](const std::vector<TermRef>& a) {
         return op2("/", op1("neg", a[0]), op2("*", a[1], a[1]));
       }},
      {[](Args a) { return 1.0 / a[1]; },
       [](Args a) { return -a[0] / (a[1] * a[1]); }},
      {whole, {0.2, 3.0}}});

  reg.register_op({
      "neg", 1, "total",
      [](Args a) { return finite_or_nothing(-a[0]); },
      {[](const std::vector<TermRef>&) { return m_const(-1.0); }},
      {[](Args) { return -1.0; }},
      {whole}});

  reg.register_op({
      "sin", 1, "total",
      [](Args a) { return finite_or_nothing(std::sin(a[0])); },
      {[](const std::vector<TermRef>& a) { return op1("cos", a[0]); }},
      {[](Args a) { return std::cos(a[0]); }},
      {{-6.0, 6.0}}});

  reg.register_op({
      "cos", 1, "total",
      [](Args a) { return finite_or_nothing(std::cos(a[0])); },
      {[](const std::vector<TermRef>& a) { return op1("neg", op1("sin", a[0])); }},
      {[](Args a) { return -std::sin(a[0]); }},
      {{-6.0, 6.0}}});

  reg.register_op({
      "exp", 1, "total",
      [](Args a) { return finite_or_nothing(std::exp(a[0])); },
      {[](const std::vector<TermRef>& a) { return op1("exp", a[0]); }},
      {[](Args a) { return std::exp(a[0]); }},
      {whole}});

  reg.register_op({
      "log", 1, "argument > 0",
      [](Args a) -> std::optional<double> {
        if (a[0] <= 0.0) return std::nullopt;
        return finite_or_nothing(std::log(a[0]));
      },
      {[](const std::vector<TermRef>& a) { return op2("/", m_const(1.0), a[0]); }},
      {[](Args a) { return 1.0 / a[0]; }},
      {positive}});

  reg.register_op({
      "sqrt", 1, "argument > 0",
      [](Args a) -> std::optional<double> {
        if (a[0] <= 0.0) return std::nullopt;
        return finite_or_nothing(std::sqrt(a[0]));
      },
      {[](const std::vector<TermRef>& a) {
        return op2("/", m_const(1.0), op2("*", m_const(2.0), op1("sqrt", a[0])));
      }},
      {[](Args a) { return 0.5 / std::sqrt(a[0]); }},
      {positive}});

  reg.register_op({
      "sigmoid", 1, "total",
      [](Args a) { return finite_or_nothing(sigmoid(a[0])); },
      {[](const std::vector<TermRef>& a) {
        return op2("*", op1("sigmoid", a[0]),
                   op2("-", m_const(1.0), op1("sigmoid", a[0])));
      }},
      {[](Args a) {
        double s = sigmoid(a[0]);
        return s * (1.0 - s);
      }},
      {{-5.0, 5.0}}});
}

} // namespace

void ensure_default_ops() {
  static bool done = [] {
    install_defaults(OpRegistry::instance());
    return true;
  }();
  (void)done;
}

} // namespace dualfpc

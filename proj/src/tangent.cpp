#include "dualfpc/tangent.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace dualfpc {

Tangent Tangent::zero(Backend b) {
  Tangent t;
  if (b == Backend::k1)
    t.rep_ = 0.0;
  else
    t.rep_ = Sparse{};
  return t;
}

Tangent Tangent::basis(int i, Backend b) {
  if (i < 1) throw std::invalid_argument("basis index must be >= 1");
  if (b == Backend::k1) return scalar(i == 1 ? 1.0 : 0.0);
  return sparse({{i, 1.0}});
}

Tangent Tangent::scalar(double v) {
  Tangent t;
  t.rep_ = v;
  return t;
}

Tangent Tangent::sparse(Sparse entries) {
  for (auto it = entries.begin(); it != entries.end();)
    it = it->second == 0.0 ? entries.erase(it) : std::next(it);
  Tangent t;
  t.rep_ = std::move(entries);
  return t;
}

std::vector<double> Tangent::project(int i) const {
  if (i < 1) throw std::invalid_argument("projection index must be >= 1");
  std::vector<double> out(static_cast<size_t>(i), 0.0);
  if (backend() == Backend::k1)
    out[0] = scalar_value();
  else
    for (const auto& [idx, v] : entries()) {
      if (idx > i) break;
      out[static_cast<size_t>(idx - 1)] = v;
    }
  return out;
}

double Tangent::coordinate(int i) const {
  if (i < 1) throw std::invalid_argument("coordinate index must be >= 1");
  if (backend() == Backend::k1) return i == 1 ? scalar_value() : 0.0;
  auto it = entries().find(i);
  return it == entries().end() ? 0.0 : it->second;
}

bool Tangent::is_zero() const {
  if (backend() == Backend::k1) return scalar_value() == 0.0;
  return entries().empty();
}

bool Tangent::is_finite() const {
  if (backend() == Backend::k1) return std::isfinite(scalar_value());
  for (const auto& [idx, v] : entries())
    if (!std::isfinite(v)) return false;
  return true;
}

Tangent tan_add(const Tangent& a, const Tangent& b) {
  assert(a.backend() == b.backend() && "tangent backends must not be mixed");
  if (a.backend() == Backend::k1) return Tangent::scalar(a.scalar_value() + b.scalar_value());
  Tangent::Sparse out = a.entries();
  for (const auto& [idx, v] : b.entries()) {
    auto [it, inserted] = out.emplace(idx, v);
    if (!inserted) it->second += v;
  }
  return Tangent::sparse(std::move(out));
}

Tangent tan_scale(const Tangent& a, double s) {
  if (a.backend() == Backend::k1) return Tangent::scalar(a.scalar_value() * s);
  Tangent::Sparse out;
  for (const auto& [idx, v] : a.entries()) out.emplace(idx, v * s);
  return Tangent::sparse(std::move(out));
}

} // namespace dualfpc

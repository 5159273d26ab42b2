#pragma once

#include <map>
#include <variant>
#include <vector>

namespace dualfpc {

enum class Backend { k1, kinf };

// An element of R^k: a plain scalar when k = 1, a sparse dynamically sized
// vector (1-based indices, no explicit zeros) when k = infinity. A single
// evaluation never mixes the two representations.
class Tangent {
 public:
  using Sparse = std::map<int, double>;

  static Tangent zero(Backend b);
  // i-th canonical basis element when it exists at this k, zero otherwise
  static Tangent basis(int i, Backend b);
  static Tangent scalar(double v);
  static Tangent sparse(Sparse entries);  // zeros are dropped

  Backend backend() const {
    return std::holds_alternative<double>(rep_) ? Backend::k1 : Backend::kinf;
  }
  double scalar_value() const { return std::get<double>(rep_); }
  const Sparse& entries() const { return std::get<Sparse>(rep_); }

  // first i coordinates (projection), zero-padded when k < i (coprojection)
  std::vector<double> project(int i) const;

  double coordinate(int i) const;  // i >= 1
  bool is_zero() const;
  bool is_finite() const;

  bool operator==(const Tangent& other) const { return rep_ == other.rep_; }

 private:
  std::variant<double, Sparse> rep_;
};

// vector-space structure; both arguments must use the same backend
Tangent tan_add(const Tangent& a, const Tangent& b);
Tangent tan_scale(const Tangent& a, double s);

inline Tangent tan_zero(Backend b) { return Tangent::zero(b); }
inline Tangent tan_basis(int i, Backend b) { return Tangent::basis(i, b); }
inline std::vector<double> tan_proj(int i, const Tangent& a) { return a.project(i); }

} // namespace dualfpc

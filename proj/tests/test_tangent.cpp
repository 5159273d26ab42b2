#include "doctest.h"

#include <random>

#include "dualfpc/tangent.hpp"

using namespace dualfpc;

TEST_CASE("basis elements per backend") {
  CHECK(Tangent::basis(1, Backend::k1).scalar_value() == 1.0);
  CHECK(Tangent::basis(3, Backend::k1).scalar_value() == 0.0);  // beyond k, zero
  auto e2 = Tangent::basis(2, Backend::kinf);
  CHECK(e2.coordinate(2) == 1.0);
  CHECK(e2.coordinate(1) == 0.0);
  CHECK_THROWS(Tangent::basis(0, Backend::k1));
}

TEST_CASE("addition and scaling on the sparse backend") {
  auto e1 = Tangent::basis(1, Backend::kinf);
  auto two_e1 = tan_add(e1, e1);
  CHECK(two_e1.coordinate(1) == 2.0);
  CHECK(two_e1.entries().size() == 1);

  auto z = tan_scale(Tangent::sparse({{2, 1.0}}), 0.0);
  CHECK(z.is_zero());
  CHECK(z.entries().empty());  // no explicit zeros

  auto cancel = tan_add(Tangent::sparse({{5, 2.0}}), Tangent::sparse({{5, -2.0}}));
  CHECK(cancel.is_zero());
}

TEST_CASE("projection and coprojection") {
  auto v = Tangent::sparse({{1, 3.0}, {5, 7.0}});
  CHECK(v.project(2) == std::vector<double>{3.0, 0.0});
  CHECK(Tangent::scalar(4.0).project(3) == std::vector<double>{4.0, 0.0, 0.0});
  CHECK(Tangent::zero(Backend::kinf).project(1) == std::vector<double>{0.0});
}

TEST_CASE("vector space laws, exact on integer coefficients") {
  std::mt19937_64 rng(3);
  auto rand_sparse_int = [&] {
    Tangent::Sparse m;
    std::uniform_int_distribution<int> idx(1, 6), coeff(-4, 4);
    for (int i = 0; i < 3; ++i) m[idx(rng)] = coeff(rng);
    return Tangent::sparse(std::move(m));
  };
  for (int i = 0; i < 200; ++i) {
    auto a = rand_sparse_int(), b = rand_sparse_int(), c = rand_sparse_int();
    double s = std::uniform_int_distribution<int>(-3, 3)(rng);
    double t = std::uniform_int_distribution<int>(-3, 3)(rng);
    CHECK(tan_add(a, b) == tan_add(b, a));
    CHECK(tan_add(tan_add(a, b), c) == tan_add(a, tan_add(b, c)));
    // linear factoring, exact here
    CHECK(tan_scale(tan_add(a, b), s) == tan_add(tan_scale(a, s), tan_scale(b, s)));
    CHECK(tan_scale(a, s + t) == tan_add(tan_scale(a, s), tan_scale(a, t)));
    CHECK(tan_add(a, Tangent::zero(Backend::kinf)) == a);
    CHECK(tan_scale(a, 1.0) == a);
  }
}

TEST_CASE("vector space laws within 1e-15 on float coefficients") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  auto rand_scalar = [&] { return Tangent::scalar(coeff(rng)); };
  for (int i = 0; i < 200; ++i) {
    auto a = rand_scalar(), b = rand_scalar();
    double s = coeff(rng);
    auto lhs = tan_scale(tan_add(a, b), s);
    auto rhs = tan_add(tan_scale(a, s), tan_scale(b, s));
    CHECK(std::abs(lhs.scalar_value() - rhs.scalar_value()) <= 1e-15);
  }
}

TEST_CASE("finiteness detection") {
  CHECK(Tangent::scalar(1.0).is_finite());
  CHECK_FALSE(tan_scale(Tangent::scalar(1e308), 1e308).is_finite());
  CHECK(Tangent::sparse({{1, 1e308}}).is_finite());
  CHECK_FALSE(tan_scale(Tangent::sparse({{1, 1e308}}), 10.0).is_finite());
}

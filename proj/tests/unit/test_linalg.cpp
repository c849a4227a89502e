#include <cmath>
#include <random>

#include "doctest.h"
#include "modgrad/errors.hpp"
#include "modgrad/linalg.hpp"
#include "oracles.hpp"

using namespace modgrad;

namespace {

SymMatrix random_symmetric(std::mt19937_64& rng, std::size_t n, double scale = 5.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m.set(i, j, u(rng));
  return m;
}

double determinant(const SymMatrix& m) {
  // Gaussian elimination with partial pivoting, independent of solve_dense.
  const std::size_t n = m.size();
  std::vector<double> a(m.data().begin(), m.data().end());
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a[r * n + k]) > std::abs(a[p * n + k])) p = r;
    if (a[p * n + k] == 0.0) return 0.0;
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[k * n + c], a[p * n + c]);
      det = -det;
    }
    det *= a[k * n + k];
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a[r * n + k] / a[k * n + k];
      for (std::size_t c = k; c < n; ++c) a[r * n + c] -= f * a[k * n + c];
    }
  }
  return det;
}

}  // namespace

TEST_CASE("eigen_smallest examples") {
  CHECK(eigen_smallest(SymMatrix::from_rows({{0.25, 0}, {0, 0.5}})) == 0.25);
  CHECK(eigen_smallest(SymMatrix::identity(3)) == 1.0);
  CHECK(eigen_smallest(SymMatrix::from_rows({{2, 1}, {1, 2}})) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("eigen_all examples") {
  const auto a = eigen_all(SymMatrix::from_rows({{-20, 0}, {0, -36}}));
  CHECK(a == Vec{-36, -20});
  const auto b = eigen_all(SymMatrix::from_rows({{-20, 0}, {0, 24}}));
  CHECK(b == Vec{-20, 24});
  CHECK(eigen_all(SymMatrix(4)) == Vec(4, 0.0));
  CHECK(eigen_all(SymMatrix::from_rows({{7}})) == Vec{7});
}

TEST_CASE("symmetric storage is mirrored") {
  SymMatrix m(3);
  m.set(0, 2, 4.5);
  CHECK(m(2, 0) == 4.5);
  const auto r = SymMatrix::from_rows({{1, 2}, {99, 3}});
  CHECK(r(1, 0) == 2.0);
  CHECK(r.quadratic_form(Vec{1, 1}) == 8.0);
  CHECK(r.trace() == 4.0);
  CHECK(r.multiply(Vec{1, 0}) == Vec{1, 2});
}

TEST_CASE("property: Jacobi spectrum matches analytic roots for 2x2 and 3x3") {
  std::mt19937_64 rng(1234);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 2;
    const auto m = random_symmetric(rng, n);
    const auto got = eigen_all(m);
    const Vec want = n == 2 ? oracle::eig2(m(0, 0), m(0, 1), m(1, 1))
                            : oracle::eig3(std::vector<double>(m.data().begin(), m.data().end()));
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("property: Jacobi spectrum matches characteristic polynomial roots for n = 4") {
  std::mt19937_64 rng(4321);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_symmetric(rng, 4, 2.0);
    const auto c = oracle::char_poly(std::vector<double>(m.data().begin(), m.data().end()), 4);
    const auto got = eigen_all(m);
    // Skip clustered spectra, where polishing a simple root is ill-posed.
    bool separated = true;
    for (std::size_t i = 0; i + 1 < got.size(); ++i) separated &= got[i + 1] - got[i] > 1e-3;
    if (!separated) continue;
    for (double ev : got) worst = std::max(worst, std::abs(ev - oracle::polish_root(c, ev)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("property: trace and determinant") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const auto m = random_symmetric(rng, n);
    const auto ev = eigen_all(m);
    double sum = 0.0, prod = 1.0;
    for (double e : ev) {
      sum += e;
      prod *= e;
    }
    CHECK(std::abs(sum - m.trace()) <= 1e-10);
    const double det = determinant(m);
    CHECK(std::abs(prod - det) <= 1e-8 * std::max(1.0, std::abs(det)));
    CHECK(std::is_sorted(ev.begin(), ev.end()));
  }
}

TEST_CASE("eigen_smallest accuracy bound on larger matrices") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_symmetric(rng, 8);
    const auto all = eigen_all(m);
    CHECK(std::abs(eigen_smallest(m) - all.front()) <= 1e-12 * (1.0 + m.frobenius_norm()));
  }
}

TEST_CASE("solve_dense") {
  const Vec x = solve_dense({0, 2, 1, 1}, Vec{4, 3});
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(solve_dense({1, 2, 2, 4}, Vec{1, 1}), NumericFailure);
}

TEST_CASE("integrate_adaptive examples") {
  CHECK(integrate_adaptive([](double) { return 1.0; }, 0, 1, 1e-12) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(integrate_adaptive([](double t) { return 1.0 / ((t + 1) * (t + 1)); }, 0, 9, 1e-10) - 0.9) <= 1e-10);
  CHECK(std::abs(integrate_adaptive([](double t) { return 1.0 / (t + 1); }, 0, 9, 1e-10) - std::log(10.0)) <= 1e-10);
  CHECK(integrate_adaptive([](double t) { return t; }, 2, 2, 1e-10) == 0.0);
}

TEST_CASE("property: adaptive Simpson is exact on cubics") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double c0 = u(rng), c1 = u(rng), c2 = u(rng), c3 = u(rng);
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    auto anti = [&](double x) { return c0 * x + c1 * x * x / 2 + c2 * x * x * x / 3 + c3 * x * x * x * x / 4; };
    const double got = integrate_adaptive([&](double x) { return c0 + x * (c1 + x * (c2 + x * c3)); }, a, b, 1e-12);
    worst = std::max(worst, std::abs(got - (anti(b) - anti(a))));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("integrate_adaptive errors") {
  CHECK_THROWS_AS(integrate_adaptive([](double) { return 1.0; }, 1, 0, 1e-8), DomainError);
  CHECK_THROWS_AS(integrate_adaptive([](double) { return 1.0; }, 0, INFINITY, 1e-8), DomainError);
  try {
    (void)integrate_adaptive([](double t) { return t < 0.3 ? 0.0 : 1.0; }, 0.0, 1.0, 1e-300);
    FAIL("expected QuadratureFailure");
  } catch (const QuadratureFailure& e) {
    CHECK(std::isfinite(e.partial_estimate()));
  }
}

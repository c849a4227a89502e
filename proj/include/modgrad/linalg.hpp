#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace modgrad {

using Vec = std::vector<double>;

/// Dense symmetric n x n matrix. Writes go through set(), which mirrors the
/// entry, so entries[i][j] == entries[j][i] holds bitwise at all times.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(std::span<const double> d);
  /// Builds from row-major rows; only the upper triangle is read.
  static SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) noexcept {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }
  std::span<const double> data() const noexcept { return data_; }

  Vec multiply(std::span<const double> v) const;
  double quadratic_form(std::span<const double> v) const;
  double frobenius_norm() const;
  double trace() const;

  bool operator==(const SymMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  Vec data_;
};

/// Smallest eigenvalue by cyclic Jacobi rotations.
double eigen_smallest(const SymMatrix& m);

/// Full spectrum in ascending order by cyclic Jacobi rotations.
/// Throws NumericFailure if the sweep cap is exceeded.
Vec eigen_all(const SymMatrix& m);

/// Solves the general dense system a x = b (a is row-major n x n) with
/// partial pivoting. Throws NumericFailure on an exactly singular pivot.
Vec solve_dense(std::vector<double> a, Vec b);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
double distance(std::span<const double> a, std::span<const double> b);

/// Adaptive Simpson quadrature of g on [a, b] with absolute tolerance `tol`.
/// Recursion depth is capped at 50; exceeding it throws QuadratureFailure
/// carrying the partial estimate.
double integrate_adaptive(const std::function<double(double)>& g, double a, double b, double tol);

}  // namespace modgrad

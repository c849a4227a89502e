#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "modgrad/expr.hpp"
#include "modgrad/linalg.hpp"

namespace modgrad {

/// Axis-aligned box [lo_1, hi_1] x ... x [lo_n, hi_n] with lo < hi per axis.
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<std::pair<double, double>> bounds);

  std::size_t dimension() const noexcept { return bounds_.size(); }
  double lo(std::size_t axis) const { return bounds_[axis].first; }
  double hi(std::size_t axis) const { return bounds_[axis].second; }
  double width(std::size_t axis) const { return hi(axis) - lo(axis); }
  const std::vector<std::pair<double, double>>& bounds() const noexcept { return bounds_; }
  bool contains(std::span<const double> x) const;
  /// Distance from x to the nearest wall (negative if outside).
  double wall_distance(std::span<const double> x) const;

 private:
  std::vector<std::pair<double, double>> bounds_;
};

/// Evaluation routines behind a ScalarField. Implementations may reject
/// points inside the box (throwing DomainError) when their natural domain is
/// smaller, e.g. a disk embedded in a box.
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual std::size_t dimension() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual Vec gradient(std::span<const double> x) const = 0;
  virtual SymMatrix hessian(std::span<const double> x) const = 0;
  virtual std::string describe() const = 0;
};

/// f on D: answers value/gradient/Hessian only for points inside the box.
class ScalarField {
 public:
  ScalarField(Expression expr, Box domain);
  ScalarField(std::shared_ptr<const FieldSource> source, Box domain);

  std::size_t dimension() const noexcept { return domain_.dimension(); }
  const Box& domain() const noexcept { return domain_; }
  std::string describe() const { return source_->describe(); }

  double value(std::span<const double> x) const;
  Vec gradient(std::span<const double> x) const;
  SymMatrix hessian(std::span<const double> x) const;

 private:
  void require_inside(std::span<const double> x) const;

  std::shared_ptr<const FieldSource> source_;
  Box domain_;
};

/// Symmetric matrix-valued function of t >= 0. Symmetry is structural: only
/// the upper triangle is ever evaluated.
class MatrixPath {
 public:
  /// `upper[i][j]` for j >= i are expressions in t (dimension 0). Entries with
  /// j < i are ignored.
  static MatrixPath from_expressions(std::vector<std::vector<Expression>> upper);
  static MatrixPath identity(std::size_t n);
  static MatrixPath constant(SymMatrix m);
  static MatrixPath from_function(std::size_t n, std::function<SymMatrix(double)> fn, std::string description);

  std::size_t dimension() const noexcept { return n_; }
  SymMatrix at(double t) const;
  double lambda_min(double t) const { return eigen_smallest(at(t)); }
  const std::string& describe() const noexcept { return description_; }
  bool is_constant() const noexcept { return constant_; }

 private:
  std::size_t n_ = 0;
  std::function<SymMatrix(double)> fn_;
  std::string description_;
  bool constant_ = false;
};

/// The modified-gradient system x' = P(t) grad f(x).
class System {
 public:
  System(ScalarField field, MatrixPath matrix);

  const ScalarField& field() const noexcept { return field_; }
  const MatrixPath& matrix() const noexcept { return matrix_; }
  std::size_t dimension() const noexcept { return field_.dimension(); }

  /// P(t) grad f(x): the vector field used everywhere else.
  Vec rhs(double t, std::span<const double> x) const;

 private:
  ScalarField field_;
  MatrixPath matrix_;
};

struct PsdSample {
  double t;
  double lambda_min;
};

struct H0Report {
  std::vector<PsdSample> samples;
  double min_lambda = 0.0;
  double psd_tol = 0.0;
  bool symmetric_structural = true;
  bool pass = false;
};

/// 0 followed by 63 log-spaced times in [1e-2, 1e4].
std::vector<double> default_h0_sample_times();

inline constexpr double kDefaultPsdTol = 1e-10;

/// Sampled H0 check: lambda_min(P(t)) >= -psd_tol at every sample time.
H0Report validate_h0(const System& system, std::span<const double> sample_times, double psd_tol = kDefaultPsdTol);

}  // namespace modgrad

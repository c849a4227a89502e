#include "modgrad/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modgrad/errors.hpp"

namespace modgrad {

Box::Box(std::vector<std::pair<double, double>> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw DimensionError("Box: needs at least one axis");
  for (const auto& [lo, hi] : bounds_) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      throw DomainError("Box: each axis needs finite lo < hi");
  }
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != bounds_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= bounds_[i].first && x[i] <= bounds_[i].second)) return false;
  return true;
}

double Box::wall_distance(std::span<const double> x) const {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) d = std::min({d, x[i] - bounds_[i].first, bounds_[i].second - x[i]});
  return d;
}

namespace {

class ExpressionSource final : public FieldSource {
 public:
  explicit ExpressionSource(Expression e) : expr_(std::move(e)) {
    if (expr_.uses_time()) throw DomainError("scalar field f must not depend on t");
  }
  std::size_t dimension() const override { return expr_.dimension(); }
  double value(std::span<const double> x) const override { return expr_.eval(x); }
  Vec gradient(std::span<const double> x) const override { return expr_.grad(x); }
  SymMatrix hessian(std::span<const double> x) const override { return expr_.hessian(x); }
  std::string describe() const override { return expr_.source(); }

 private:
  Expression expr_;
};

}  // namespace

ScalarField::ScalarField(Expression expr, Box domain)
    : ScalarField(std::make_shared<const ExpressionSource>(std::move(expr)), std::move(domain)) {}

ScalarField::ScalarField(std::shared_ptr<const FieldSource> source, Box domain)
    : source_(std::move(source)), domain_(std::move(domain)) {
  if (!source_) throw DomainError("ScalarField: null source");
  if (source_->dimension() != domain_.dimension())
    throw DimensionError("ScalarField: expression dimension " + std::to_string(source_->dimension()) +
                         " differs from box dimension " + std::to_string(domain_.dimension()));
}

void ScalarField::require_inside(std::span<const double> x) const {
  if (x.size() != dimension()) throw DimensionError("ScalarField: point has wrong length");
  if (!domain_.contains(x)) throw OutsideDomain("point lies outside the domain box");
}

double ScalarField::value(std::span<const double> x) const {
  require_inside(x);
  return source_->value(x);
}

Vec ScalarField::gradient(std::span<const double> x) const {
  require_inside(x);
  return source_->gradient(x);
}

SymMatrix ScalarField::hessian(std::span<const double> x) const {
  require_inside(x);
  return source_->hessian(x);
}

MatrixPath MatrixPath::from_expressions(std::vector<std::vector<Expression>> upper) {
  const std::size_t n = upper.size();
  if (n == 0) throw DimensionError("MatrixPath: empty matrix");
  std::string desc = "[";
  for (std::size_t i = 0; i < n; ++i) {
    if (upper[i].size() != n) throw DimensionError("MatrixPath: matrix is not square");
    for (std::size_t j = i; j < n; ++j) {
      if (upper[i][j].dimension() != 0) throw DimensionError("MatrixPath: entries must be expressions in t only");
      desc += (j > i ? ", " : (i > 0 ? "; " : "")) + upper[i][j].source();
    }
  }
  desc += "] (upper triangle)";
  bool constant = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) constant = constant && !upper[i][j].uses_time();

  MatrixPath p;
  p.n_ = n;
  p.description_ = std::move(desc);
  p.constant_ = constant;
  p.fn_ = [upper = std::move(upper), n](double t) {
    SymMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) m.set(i, j, upper[i][j].eval({}, t));
    return m;
  };
  return p;
}

MatrixPath MatrixPath::identity(std::size_t n) {
  MatrixPath p = constant(SymMatrix::identity(n));
  p.description_ = "identity";
  return p;
}

MatrixPath MatrixPath::constant(SymMatrix m) {
  MatrixPath p;
  p.n_ = m.size();
  p.constant_ = true;
  p.description_ = "constant";
  p.fn_ = [m = std::move(m)](double) { return m; };
  return p;
}

MatrixPath MatrixPath::from_function(std::size_t n, std::function<SymMatrix(double)> fn, std::string description) {
  MatrixPath p;
  p.n_ = n;
  p.fn_ = std::move(fn);
  p.description_ = std::move(description);
  return p;
}

SymMatrix MatrixPath::at(double t) const {
  SymMatrix m = fn_(t);
  if (m.size() != n_) throw DimensionError("MatrixPath: function returned a matrix of the wrong size");
  return m;
}

System::System(ScalarField field, MatrixPath matrix) : field_(std::move(field)), matrix_(std::move(matrix)) {
  if (field_.dimension() != matrix_.dimension())
    throw DimensionError("System: field dimension " + std::to_string(field_.dimension()) +
                         " differs from matrix dimension " + std::to_string(matrix_.dimension()));
}

Vec System::rhs(double t, std::span<const double> x) const { return matrix_.at(t).multiply(field_.gradient(x)); }

std::vector<double> default_h0_sample_times() {
  std::vector<double> ts{0.0};
  constexpr int kLogSamples = 63;
  for (int i = 0; i < kLogSamples; ++i) ts.push_back(std::pow(10.0, -2.0 + 6.0 * i / (kLogSamples - 1)));
  return ts;
}

H0Report validate_h0(const System& system, std::span<const double> sample_times, double psd_tol) {
  if (sample_times.empty()) throw DomainError("validate_h0: no sample times");
  H0Report report;
  report.psd_tol = psd_tol;
  report.min_lambda = std::numeric_limits<double>::infinity();
  for (double t : sample_times) {
    if (!(t >= 0.0)) throw DomainError("validate_h0: sample times must be >= 0");
    const double l = system.matrix().lambda_min(t);
    report.samples.push_back({t, l});
    report.min_lambda = std::min(report.min_lambda, l);
  }
  report.pass = report.min_lambda >= -psd_tol;
  return report;
}

}  // namespace modgrad

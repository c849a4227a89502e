#include "modgrad/gallery.hpp"

#include <cmath>
#include <memory>

#include "modgrad/errors.hpp"

namespace modgrad {

double PiecewiseCubic::knot(int n) { return -std::ldexp(1.0, -n); }
double PiecewiseCubic::knot_value(int n) { return (1.0 - std::ldexp(1.0, -2 * n)) / 3.0; }

PiecewiseCubic::PiecewiseCubic(int depth) : depth_(depth) {
  if (depth < 2 || depth > kMaxSplineDepth)
    throw DomainError("PiecewiseCubic: depth must lie in [2, " + std::to_string(kMaxSplineDepth) + "]");
  for (int n = 0; n < depth; ++n) {
    pieces_.push_back({knot(n), knot(n + 1), -std::ldexp(1.0, n + 2), 3.0, 0.0, knot_value(n)});
  }
  // Blend on [x_N, 0]: Hermite cubic from z_N to 1/3 with zero end slopes.
  const double h = -knot(depth);
  const double rise = 1.0 / 3.0 - knot_value(depth);
  pieces_.push_back({knot(depth), 0.0, -2.0 * rise / (h * h * h), 3.0 * rise / (h * h), 0.0, knot_value(depth)});
}

const PiecewiseCubic::Piece& PiecewiseCubic::piece_for(double neg_x) const {
  if (neg_x < -1.0 || neg_x > 0.0) throw DomainError("PiecewiseCubic: argument outside [-1, 1]");
  // Pieces partition [-1, 0]; piece n covers [-2^-n, -2^-(n+1)].
  for (const auto& p : pieces_)
    if (neg_x <= p.right) return p;
  return pieces_.back();
}

double PiecewiseCubic::value(double x) const {
  const double u = -std::abs(x);
  const Piece& p = piece_for(u);
  const double s = u - p.left;
  return ((p.alpha * s + p.beta) * s + p.gamma) * s + p.delta;
}

double PiecewiseCubic::derivative(double x) const {
  const double u = -std::abs(x);
  const Piece& p = piece_for(u);
  const double s = u - p.left;
  const double d = (3.0 * p.alpha * s + 2.0 * p.beta) * s + p.gamma;
  return x > 0.0 ? -d : d;
}

double PiecewiseCubic::second_derivative(double x) const {
  const double u = -std::abs(x);
  const Piece& p = piece_for(u);
  const double s = u - p.left;
  return 6.0 * p.alpha * s + 2.0 * p.beta;
}

double PiecewiseCubic::max_slope(std::size_t n) const {
  const Piece& p = pieces_.at(n);
  const double s = 0.5 * (p.right - p.left);
  return (3.0 * p.alpha * s + 2.0 * p.beta) * s + p.gamma;
}

const char* to_string(GalleryId id) {
  switch (id) {
    case GalleryId::Ex21: return "ex21";
    case GalleryId::Ex22: return "ex22";
    case GalleryId::Ex31: return "ex31";
  }
  return "?";
}

std::optional<GalleryId> gallery_id_from_string(const std::string& s) {
  if (s == "ex21") return GalleryId::Ex21;
  if (s == "ex22") return GalleryId::Ex22;
  if (s == "ex31") return GalleryId::Ex31;
  return std::nullopt;
}

namespace {

void self_test(bool ok, const char* what) {
  if (!ok) throw NumericFailure(std::string("gallery oracle self-test failed: ") + what);
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

/// f(x) = p(|x|) on the unit disk. The gradient at the origin is zero and
/// the Hessian there is p''(0) I.
class RadialSplineField final : public FieldSource {
 public:
  explicit RadialSplineField(int depth) : p_(depth) {}

  std::size_t dimension() const override { return 2; }

  double value(std::span<const double> x) const override { return p_.value(radius(x)); }

  Vec gradient(std::span<const double> x) const override {
    const double r = radius(x);
    if (r == 0.0) return {0.0, 0.0};
    const double d = p_.derivative(r) / r;
    return {d * x[0], d * x[1]};
  }

  SymMatrix hessian(std::span<const double> x) const override {
    const double r = radius(x);
    SymMatrix h(2);
    if (r == 0.0) {
      const double curv = p_.second_derivative(0.0);
      h.set(0, 0, curv);
      h.set(1, 1, curv);
      return h;
    }
    const double radial = p_.second_derivative(r);
    const double tangential = p_.derivative(r) / r;
    const double u0 = x[0] / r, u1 = x[1] / r;
    h.set(0, 0, radial * u0 * u0 + tangential * (1.0 - u0 * u0));
    h.set(0, 1, (radial - tangential) * u0 * u1);
    h.set(1, 1, radial * u1 * u1 + tangential * (1.0 - u1 * u1));
    return h;
  }

  std::string describe() const override {
    return "radial piecewise-cubic spline, depth " + std::to_string(p_.depth());
  }

 private:
  static double radius(std::span<const double> x) {
    const double r = std::hypot(x[0], x[1]);
    if (r > 1.0) throw DomainError("radial spline field is defined on the unit disk only");
    return r;
  }

  PiecewiseCubic p_;
};

}  // namespace

Vec example_2_1_solution(std::span<const double> x0, double t0, double t) {
  const double c1 = (x0[0] - 1.0) * std::exp(-2.0 / (t0 + 1.0));
  const double c2 = (x0[1] - 1.0) * (t0 + 1.0) * (t0 + 1.0);
  return {1.0 + c1 * std::exp(2.0 / (t + 1.0)), 1.0 + c2 / ((t + 1.0) * (t + 1.0))};
}

GalleryEntry example_2_1() {
  ScalarField f(Expression::parse("4 - (x1-1)^2 - (x2-1)^2", 2, false), Box({{-3.0, 5.0}, {-3.0, 5.0}}));
  std::vector<std::vector<Expression>> p(2);
  p[0] = {Expression::parse("(t+1)^-2", 0, true), Expression::parse("0", 0, true)};
  p[1] = {Expression::parse("0", 0, true), Expression::parse("(t+1)^-1", 0, true)};
  GalleryEntry e{GalleryId::Ex21, System(std::move(f), MatrixPath::from_expressions(std::move(p))),
                 {{{1.0, 1.0}, 4.0, "max"}},
                 "lambda_min(P(t)) = (t+1)^-2 is integrable, so only uniform stability is certified; "
                 "solutions tend to (1 + c1, 1) with c1 != 0 in general."};

  const Vec x = {2.0, 2.0};
  self_test(e.system.field().value(x) == 2.0, "ex21 f(2,2) = 2");
  self_test(near(e.system.matrix().lambda_min(1.0), 0.25, 1e-15), "ex21 lambda_min(P(1)) = 1/4");
  self_test(near(example_2_1_solution(x, 0.0, 0.0)[0], 2.0, 1e-15), "ex21 closed form at t0");
  return e;
}

GalleryEntry example_2_2(int depth) {
  auto source = std::make_shared<const RadialSplineField>(depth);
  ScalarField f(source, Box({{-1.0, 1.0}, {-1.0, 1.0}}));
  GalleryEntry e{GalleryId::Ex22, System(std::move(f), MatrixPath::identity(2)), {}, {}};
  e.critical_set.push_back({{0.0, 0.0}, 1.0 / 3.0, "max"});
  e.notes =
      "Critical circles at r = 2^-n, n = 1.." + std::to_string(depth) +
      " (plus the rim r = 1). The infinite construction is truncated at this depth and closed by one blend cubic "
      "on [0, 2^-depth] reaching 1/3 with zero slope, so the origin keeps a negative definite Hessian. The "
      "origin is stable but trajectories between two circles stay there.";

  const PiecewiseCubic p(depth);
  self_test(p.value(0.0) == 1.0 / 3.0, "ex22 p(0) = 1/3");
  self_test(near(p.max_slope(0), 0.75, 1e-12), "ex22 max p' on I_0 = 3/4");
  self_test(near(p.value(-0.5), 0.25, 1e-15), "ex22 z_1 = 1/4");
  return e;
}

Vec example_3_1_factored_gradient(std::span<const double> x) {
  return {-20.0 * (x[0] - 2.0), -12.0 * (x[1] - 1.0) * (x[1] - 2.0) * (x[1] - 4.0)};
}

GalleryEntry example_3_1(std::optional<MatrixPath> matrix) {
  ScalarField f(Expression::parse(kExample31Source, 2, false), Box({{-1.0, 5.0}, {-1.0, 6.0}}));
  MatrixPath p = matrix ? std::move(*matrix) : MatrixPath::identity(2);
  if (p.dimension() != 2) throw DimensionError("example_3_1: matrix path must be 2x2");
  GalleryEntry e{GalleryId::Ex31, System(std::move(f), std::move(p)),
                 {{{2.0, 1.0}, 37.0, "max"}, {{2.0, 2.0}, 32.0, "saddle"}, {{2.0, 4.0}, 64.0, "max"}},
                 "Local maxima p1=(2,1), p2=(2,4) and saddle p3=(2,2). L33 splits into two closed curves; "
                 "E_{20,p2} contains p1 and p3 (H6 fails); E_{20,p1} touches L37 (H5 fails)."};

  const ScalarField& fld = e.system.field();
  for (const auto& k : e.critical_set) {
    self_test(fld.value(k.location) == k.value, "ex31 critical values 37, 32, 64");
    self_test(norm(fld.gradient(k.location)) == 0.0, "ex31 gradient vanishes at p1, p2, p3");
  }
  return e;
}

GalleryEntry gallery_entry(GalleryId id) {
  switch (id) {
    case GalleryId::Ex21: return example_2_1();
    case GalleryId::Ex22: return example_2_2();
    case GalleryId::Ex31: return example_3_1();
  }
  throw DomainError("unknown gallery id");
}

}  // namespace modgrad

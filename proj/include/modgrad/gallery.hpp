#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modgrad/field.hpp"

namespace modgrad {

/// C^1 piecewise-cubic profile on [-1, 1], even in x. On [x_n, x_{n+1}] with
/// x_n = -2^-n it is p_n(x) = a (x-x_n)^3 + b (x-x_n)^2 + g (x-x_n) + d with
/// a = -2^(n+2), b = 3, g = 0, d = (1 - 4^-n)/3, so p rises from z_n to
/// z_{n+1} with zero slope at both knots. The construction is truncated at
/// `depth` and closed by one blend cubic on [-2^-depth, 0] that rises from
/// z_depth to 1/3 with zero end slopes.
class PiecewiseCubic {
 public:
  struct Piece {
    double left, right;  // interval [left, right] on the negative axis
    double alpha, beta, gamma, delta;
  };

  explicit PiecewiseCubic(int depth);

  int depth() const noexcept { return depth_; }
  static double knot(int n);        // x_n = -2^-n
  static double knot_value(int n);  // z_n = (1 - 4^-n)/3

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  /// Pieces 0..depth-1 follow the closed-form coefficients; the last one is the blend.
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  /// Maximum of p' on piece n (attained at the interval midpoint).
  double max_slope(std::size_t n) const;

 private:
  const Piece& piece_for(double neg_x) const;

  int depth_;
  std::vector<Piece> pieces_;
};

enum class GalleryId { Ex21, Ex22, Ex31 };
const char* to_string(GalleryId id);
std::optional<GalleryId> gallery_id_from_string(const std::string& s);

struct KnownCriticalPoint {
  Vec location;
  double value;
  std::string kind;  // "max", "saddle"
};

struct GalleryEntry {
  GalleryId id;
  System system;
  std::vector<KnownCriticalPoint> critical_set;
  std::string notes;
};

/// x1(t) = 1 + c1 exp(2/(t+1)), x2(t) = 1 + c2 (t+1)^-2 with c1, c2 fixed by x(t0) = x0.
Vec example_2_1_solution(std::span<const double> x0, double t0, double t);

/// f = 4 - (x1-1)^2 - (x2-1)^2, P(t) = diag((t+1)^-2, (t+1)^-1) on [-3,5]^2.
GalleryEntry example_2_1();

inline constexpr int kDefaultSplineDepth = 20;
inline constexpr int kMaxSplineDepth = 40;

/// Radial field f(x) = p(|x|) on the unit disk inside [-1,1]^2, P = I.
GalleryEntry example_2_2(int depth = kDefaultSplineDepth);

/// f = 96 x2 - 84 x2^2 + 28 x2^3 - 3 x2^4 - 10 (x1-2)^2 on [-1,5]x[-1,6];
/// P defaults to the identity.
GalleryEntry example_3_1(std::optional<MatrixPath> matrix = std::nullopt);

inline constexpr const char* kExample31Source = "96*x2 - 84*x2^2 + 28*x2^3 - 3*x2^4 - 10*(x1-2)^2";

/// The factored gradient (-20 (x1-2), -12 (x2-1)(x2-2)(x2-4)).
Vec example_3_1_factored_gradient(std::span<const double> x);

GalleryEntry gallery_entry(GalleryId id);

}  // namespace modgrad

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modgrad/field.hpp"

namespace modgrad {

enum class Classification { IsolatedLocalMax, LocalMin, Saddle, Degenerate };
const char* to_string(Classification c);

/// Sampled evidence about whether a critical point is isolated. This is
/// evidence only: isolation cannot be decided by sampling.
struct IsolationVerdict {
  enum class Kind { IsolatedEvidence, NotIsolated, Inconclusive };
  Kind kind = Kind::Inconclusive;
  std::optional<Vec> witness;     // NotIsolated: a sample with |grad f| <= grad_floor
  double min_grad_norm = 0.0;     // smallest |grad f| seen over all samples
  std::size_t samples = 0;
  std::string note;
};
const char* to_string(IsolationVerdict::Kind k);

struct CriticalPoint {
  Vec location;
  Classification classification = Classification::Degenerate;
  Vec hessian_spectrum;  // ascending
  double grad_norm = 0.0;
  IsolationVerdict isolation;
};

struct FinderOptions {
  std::size_t grid_per_axis = 20;
  double newton_tol = 1e-10;
  std::size_t max_newton_iters = 100;
  double degeneracy_tol = 1e-7;  // relative to the Frobenius norm of the Hessian
};

struct FinderResult {
  std::vector<CriticalPoint> points;
  std::size_t seeds = 0;
  std::size_t converged = 0;
  std::size_t not_converged = 0;  // dropped: iteration cap, singular Hessian, domain error
  std::size_t left_box = 0;       // dropped: a Newton iterate left D
};

/// Classifies a critical point from its ascending Hessian spectrum.
Classification classify_spectrum(std::span<const double> spectrum, double frobenius_norm, double degeneracy_tol);

/// Newton's method on grad f = 0 from every node of a uniform grid over D,
/// with Levenberg damping when the Hessian is near-singular. Roots within
/// 10 newton_tol of an earlier root are merged into it (first found kept).
FinderResult find_critical_points(const ScalarField& field, const FinderOptions& opts = {});

/// Builds a CriticalPoint (spectrum, classification) at a given location.
CriticalPoint describe_critical_point(const ScalarField& field, std::span<const double> location,
                                      double degeneracy_tol = FinderOptions{}.degeneracy_tol);

inline constexpr double kDefaultGradFloor = 1e-8;

/// Samples |grad f| at `samples_per_shell` quasi-uniform points on each sphere
/// |x - point| = r. With ray_samples > 0 the segment between the largest and
/// smallest radius along every sample direction is also scanned and local
/// minima of |grad f| are refined by golden-section search, which finds
/// critical sets lying between the shells.
/// Throws DomainError if a shell leaves the box.
IsolationVerdict isolation_probe(const ScalarField& field, std::span<const double> point,
                                 std::span<const double> shell_radii, std::size_t samples_per_shell,
                                 double grad_floor = kDefaultGradFloor, std::size_t ray_samples = 0);

/// Unit directions used for shell sampling (equally spaced angles for n = 2).
std::vector<Vec> sphere_directions(std::size_t dimension, std::size_t count);

}  // namespace modgrad

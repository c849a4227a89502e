#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modgrad/field.hpp"

namespace modgrad {

struct OdeOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double h_init = 0.0;  // 0: automatic initial step
  double h_min = 1e-12;
  double h_max = 0.0;   // 0: (t_end - t0) / 10
  /// Early stop when |x - target| < convergence_radius for one of the
  /// targets AND |rhs(t, x)| < convergence_rhs_tol.
  std::vector<Vec> convergence_targets;
  double convergence_radius = 0.0;
  double convergence_rhs_tol = 1e-10;
  /// Times at which the dense output is recorded (e.g. 10, 1e2, 1e3, 1e4).
  std::vector<double> checkpoints;
  std::size_t max_steps = 2'000'000;
};

/// Exponential checkpoints used to witness long-horizon behaviour.
std::vector<double> long_horizon_checkpoints();

enum class TrajectoryStatus { ReachedEnd, Converged, LeftDomain, StepFailure };
const char* to_string(TrajectoryStatus s);

struct TrajectorySample {
  double t;
  Vec x;
};

/// Accepted steps of x' = P(t) grad f(x) with a dense interpolant per step.
class Trajectory {
 public:
  double t0 = 0.0;
  std::vector<TrajectorySample> samples;
  TrajectoryStatus status = TrajectoryStatus::ReachedEnd;
  std::optional<std::size_t> converged_target;  // index into OdeOptions::convergence_targets
  double hit_time = 0.0;
  Vec exit_point;  // LeftDomain: the first point at which the vector field was unavailable
  std::string message;
  std::vector<TrajectorySample> checkpoints;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  const Vec& final_state() const { return samples.back().x; }
  double final_time() const { return samples.back().t; }
  /// Dense output at t in [t0, final_time()].
  Vec at(double t) const;

  struct Segment {
    double t, h;
    std::array<Vec, 5> coeff;
  };
  std::vector<Segment> segments;  // segments[k] spans samples[k] .. samples[k+1]
};

/// Dormand-Prince 5(4) with PI step-size control.
/// Throws OutsideDomain if x0 is outside D and DomainError on bad times.
Trajectory simulate(const System& system, std::span<const double> x0, double t0, double t_end,
                    const OdeOptions& opts = {});

struct LyapunovRow {
  double t;
  double v;          // M - f(x)
  double vdot;       // -(P(t) grad f) . grad f
  double lambda1;    // smallest eigenvalue of P(t)
  double grad_norm2; // |grad f(x)|^2
};
using LyapunovTrace = std::vector<LyapunovRow>;

/// V = f(anchor) - f(x) and its trajectory derivative at every sample.
LyapunovTrace lyapunov_trace(const System& system, const Trajectory& traj, std::span<const double> anchor);
LyapunovTrace lyapunov_trace_with_level(const System& system, const Trajectory& traj, double level);

struct DescentCheck {
  std::size_t rows = 0;
  double max_increase = 0.0;      // largest V(t_{k+1}) - V(t_k)
  double max_bound_excess = 0.0;  // largest vdot + lambda1 |grad f|^2
  bool monotone = true;
  bool bound_holds = true;
  bool ok() const { return monotone && bound_holds; }
};

inline constexpr double kMonotoneSlack = 1e-7;
inline constexpr double kBoundSlack = 1e-10;

DescentCheck check_descent(const LyapunovTrace& trace, double monotone_slack = kMonotoneSlack,
                           double bound_slack = kBoundSlack);

}  // namespace modgrad

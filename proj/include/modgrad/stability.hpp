#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "modgrad/equilibria.hpp"
#include "modgrad/field.hpp"
#include "modgrad/ode.hpp"

namespace modgrad {

/// Graded verdict on divergence of the integral of lambda_min(P(t)) over
/// [0, inf). Improper integrals are only semi-decidable from samples, so
/// there is no boolean answer.
struct EcVerdict {
  enum class Kind { DivergentLikely, ConvergentLikely, Inconclusive };
  Kind kind = Kind::Inconclusive;
  double horizon = 0.0;
  double horizon_integral = 0.0;  // I(T)
  double half_integral = 0.0;     // I(T/2)
  std::optional<double> tail_exponent;  // fitted p in lambda ~ C t^-p over [T/10, T]; inf if the tail vanishes
  bool clipped = false;                 // negative lambda values were clipped to 0
  std::string evidence;
};
const char* to_string(EcVerdict::Kind k);

inline constexpr double kEcExponentBand = 0.05;
inline constexpr double kEcGrowthThreshold = 0.05;
inline constexpr double kDefaultQuadTol = 1e-8;

/// Rule: DivergentLikely if p <= 0.95, or I(T) grows by >= 5% from T/2 to T
/// with an increment above 10 quad_tol. ConvergentLikely if p >= 1.05 and the
/// growth stays below 5%. Otherwise Inconclusive. Requires horizon >= 100.
EcVerdict ec_check(const MatrixPath& matrix, double horizon, double quad_tol = kDefaultQuadTol);
EcVerdict ec_check_lambda(const std::function<double(double)>& lambda_min, double horizon,
                          double quad_tol = kDefaultQuadTol);

struct H1Verdict {
  bool pass = false;
  Classification classification = Classification::Degenerate;
  std::size_t probes = 0;
  double min_drop = 0.0;  // min over probes of f(x_bar) - f(probe)
  double probe_radius = 0.0;
  std::string evidence;
};

struct DescentSummary {
  std::size_t trajectories = 0;
  std::size_t passed = 0;
  std::vector<double> start_times;
  double max_increase = 0.0;
  double max_bound_excess = 0.0;
  bool ok = false;
  std::string evidence;
};

enum class Conclusion { UniformlyAsymptoticallyStable, UniformlyStable, NoCertificate };
const char* to_string(Conclusion c);

struct StabilityReport {
  CriticalPoint equilibrium;
  H1Verdict h1;
  IsolationVerdict h2;
  EcVerdict h3;
  DescentSummary descent;
  Conclusion conclusion = Conclusion::NoCertificate;
  std::string summary;
};

struct CertifyOptions {
  double h1_probe_radius = 0.1;        // probes on shells r and r/4
  std::size_t h1_probes_per_shell = 16;
  double isolation_max_radius = 0.5;   // shells log-spaced down to 1e-3 of this
  std::size_t isolation_shells = 12;
  std::vector<double> isolation_radii; // overrides the automatic shells when non-empty
  std::size_t samples_per_shell = 64;
  double grad_floor = kDefaultGradFloor;
  std::size_t ray_samples = 400;
  double ec_horizon = 1e4;
  double quad_tol = kDefaultQuadTol;
  std::size_t descent_trajectories = 8;
  double descent_radius = 0.1;
  double descent_duration = 50.0;
  std::vector<double> start_times{0.0, 1.0, 10.0};  // cycled over the descent trajectories
  OdeOptions ode;
};

/// Stability verdict for one equilibrium. Failed sub-checks lower the
/// conclusion; they do not throw.
StabilityReport certify(const System& system, const CriticalPoint& point, const CertifyOptions& opts = {});

/// As certify(), reusing a precomputed EC verdict (it depends only on P).
StabilityReport certify(const System& system, const CriticalPoint& point, const EcVerdict& ec,
                        const CertifyOptions& opts);

}  // namespace modgrad

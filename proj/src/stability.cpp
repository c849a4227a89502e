#include "modgrad/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "modgrad/errors.hpp"
#include "modgrad/parallel.hpp"

namespace modgrad {

const char* to_string(EcVerdict::Kind k) {
  switch (k) {
    case EcVerdict::Kind::DivergentLikely: return "DivergentLikely";
    case EcVerdict::Kind::ConvergentLikely: return "ConvergentLikely";
    case EcVerdict::Kind::Inconclusive: return "Inconclusive";
  }
  return "?";
}

const char* to_string(Conclusion c) {
  switch (c) {
    case Conclusion::UniformlyAsymptoticallyStable: return "UniformlyAsymptoticallyStable";
    case Conclusion::UniformlyStable: return "UniformlyStable";
    case Conclusion::NoCertificate: return "NoCertificate";
  }
  return "?";
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Integral over [a, b] split at decade boundaries so the adaptive rule sees
// roughly uniform behaviour per panel.
double integrate_decades(const std::function<double(double)>& g, double a, double b, double tol) {
  std::vector<double> cuts{a};
  for (double d = 1.0; d < b; d *= 10.0)
    if (d > a) cuts.push_back(d);
  cuts.push_back(b);
  const double panel_tol = tol / static_cast<double>(cuts.size() - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) sum += integrate_adaptive(g, cuts[i], cuts[i + 1], panel_tol);
  return sum;
}

}  // namespace

EcVerdict ec_check_lambda(const std::function<double(double)>& lambda_min, double horizon, double quad_tol) {
  if (!(horizon >= 100.0)) throw DomainError("ec_check: horizon must be >= 100");
  EcVerdict v;
  v.horizon = horizon;
  bool clipped = false;
  auto lam = [&](double t) {
    const double l = lambda_min(t);
    if (l < 0.0) {
      clipped = true;
      return 0.0;
    }
    return l;
  };

  const double half = 0.5 * horizon;
  v.half_integral = integrate_decades(lam, 0.0, half, 0.5 * quad_tol);
  v.horizon_integral = v.half_integral + integrate_adaptive(lam, half, horizon, 0.5 * quad_tol);

  constexpr int kFitSamples = 32;
  std::vector<double> lt, ll;
  bool all_zero = true, any_zero = false;
  for (int i = 0; i < kFitSamples; ++i) {
    const double t = horizon / 10.0 * std::pow(10.0, static_cast<double>(i) / (kFitSamples - 1));
    const double l = lam(t);
    if (l > 0.0) {
      all_zero = false;
      lt.push_back(std::log(t));
      ll.push_back(std::log(l));
    } else {
      any_zero = true;
    }
  }
  if (all_zero) {
    v.tail_exponent = std::numeric_limits<double>::infinity();
  } else if (!any_zero) {
    const double n = static_cast<double>(lt.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
      sx += lt[i];
      sy += ll[i];
      sxx += lt[i] * lt[i];
      sxy += lt[i] * ll[i];
    }
    v.tail_exponent = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  v.clipped = clipped;

  const double increment = v.horizon_integral - v.half_integral;
  const double growth = v.horizon_integral > 0.0 ? increment / v.horizon_integral : 0.0;
  const bool slope_divergent = v.tail_exponent && *v.tail_exponent <= 1.0 - kEcExponentBand;
  const bool growth_divergent = growth >= kEcGrowthThreshold && increment > 10.0 * quad_tol;
  const bool slope_convergent = v.tail_exponent && *v.tail_exponent >= 1.0 + kEcExponentBand;

  if (slope_divergent || growth_divergent) {
    v.kind = EcVerdict::Kind::DivergentLikely;
  } else if (slope_convergent && growth < kEcGrowthThreshold) {
    v.kind = EcVerdict::Kind::ConvergentLikely;
  } else {
    v.kind = EcVerdict::Kind::Inconclusive;
  }

  v.evidence = "I(T)=" + fmt("%.10g", v.horizon_integral) + ", I(T/2)=" + fmt("%.10g", v.half_integral) +
               ", relative growth " + fmt("%.4g", growth) + " over [T/2,T] with T=" + fmt("%.6g", horizon);
  if (v.tail_exponent) {
    v.evidence += "; fitted tail exponent p=" + fmt("%.6g", *v.tail_exponent) + " on [T/10,T]";
  } else {
    v.evidence += "; tail exponent not fitted (lambda_min vanishes at some tail samples)";
  }
  if (clipped) v.evidence += "; negative lambda_min values were clipped to 0";
  return v;
}

EcVerdict ec_check(const MatrixPath& matrix, double horizon, double quad_tol) {
  return ec_check_lambda([&](double t) { return matrix.lambda_min(t); }, horizon, quad_tol);
}

namespace {

Vec offset_point(std::span<const double> x, const Vec& u, double r) {
  Vec p(x.begin(), x.end());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += r * u[i];
  return p;
}

H1Verdict check_h1(const ScalarField& field, const CriticalPoint& cp, const CertifyOptions& opts) {
  H1Verdict h;
  h.classification = cp.classification;
  const double wall = field.domain().wall_distance(cp.location);
  h.probe_radius = std::min(opts.h1_probe_radius, 0.9 * wall);
  if (cp.classification != Classification::IsolatedLocalMax) {
    h.evidence = std::string("Hessian classification is ") + to_string(cp.classification);
    return h;
  }
  if (!(h.probe_radius > 0.0)) {
    h.evidence = "equilibrium lies on the boundary of D";
    return h;
  }
  const double m = field.value(cp.location);
  const auto dirs = sphere_directions(cp.location.size(), opts.h1_probes_per_shell);
  h.min_drop = std::numeric_limits<double>::infinity();
  try {
    for (double r : {h.probe_radius, 0.25 * h.probe_radius}) {
      for (const auto& u : dirs) {
        h.min_drop = std::min(h.min_drop, m - field.value(offset_point(cp.location, u, r)));
        ++h.probes;
      }
    }
  } catch (const DomainError& e) {
    h.evidence = std::string("local-max probe failed: ") + e.what();
    return h;
  }
  h.pass = h.min_drop > 0.0;
  h.evidence = "Hessian negative definite; f(x_bar) - f(probe) >= " + fmt("%.6g", h.min_drop) + " over " +
               std::to_string(h.probes) + " probes at radii " + fmt("%.4g", h.probe_radius) + " and " +
               fmt("%.4g", 0.25 * h.probe_radius);
  if (!h.pass) h.evidence += " (a probe is not strictly below f(x_bar))";
  return h;
}

IsolationVerdict check_h2(const ScalarField& field, const CriticalPoint& cp, const CertifyOptions& opts) {
  std::vector<double> radii = opts.isolation_radii;
  if (radii.empty()) {
    const double r_max = std::min(opts.isolation_max_radius, 0.9 * field.domain().wall_distance(cp.location));
    const std::size_t shells = std::max<std::size_t>(opts.isolation_shells, 2);
    for (std::size_t k = 0; k < shells; ++k)
      radii.push_back(r_max * std::pow(1e-3, static_cast<double>(k) / static_cast<double>(shells - 1)));
  }
  try {
    return isolation_probe(field, cp.location, radii, opts.samples_per_shell, opts.grad_floor, opts.ray_samples);
  } catch (const Error& e) {
    IsolationVerdict v;
    v.kind = IsolationVerdict::Kind::Inconclusive;
    v.note = std::string("isolation probe failed: ") + e.what();
    return v;
  }
}

DescentSummary check_descent_trajectories(const System& system, const CriticalPoint& cp,
                                          const CertifyOptions& opts) {
  DescentSummary s;
  const std::size_t count = opts.descent_trajectories;
  s.trajectories = count;
  const double radius = std::min(opts.descent_radius, 0.9 * system.field().domain().wall_distance(cp.location));
  const auto dirs = sphere_directions(cp.location.size(), std::max<std::size_t>(count, 1));
  const double level = system.field().value(cp.location);

  struct Outcome {
    bool ok = false;
    double increase = 0.0, excess = 0.0;
    std::string error;
  };
  std::vector<Outcome> outcomes(count);
  std::vector<double> starts(count);
  for (std::size_t k = 0; k < count; ++k)
    starts[k] = opts.start_times.empty() ? 0.0 : opts.start_times[k % opts.start_times.size()];

  parallel_for(count, [&](std::size_t k) {
    Outcome& o = outcomes[k];
    try {
      const Vec x0 = offset_point(cp.location, dirs[k], radius);
      const Trajectory traj = simulate(system, x0, starts[k], starts[k] + opts.descent_duration, opts.ode);
      if (traj.status == TrajectoryStatus::StepFailure) {
        o.error = "integrator step failure: " + traj.message;
        return;
      }
      const DescentCheck c = check_descent(lyapunov_trace_with_level(system, traj, level));
      o.ok = c.ok();
      o.increase = c.max_increase;
      o.excess = c.max_bound_excess;
    } catch (const Error& e) {
      o.error = e.what();
    }
  });

  s.start_times = starts;
  s.max_bound_excess = count ? -std::numeric_limits<double>::infinity() : 0.0;
  std::string errors;
  for (const auto& o : outcomes) {
    if (o.ok) ++s.passed;
    s.max_increase = std::max(s.max_increase, o.increase);
    if (o.error.empty()) s.max_bound_excess = std::max(s.max_bound_excess, o.excess);
    if (!o.error.empty() && errors.empty()) errors = o.error;
  }
  s.ok = count > 0 && s.passed == count;
  s.evidence = std::to_string(s.passed) + "/" + std::to_string(count) + " trajectories from the shell r=" +
               fmt("%.4g", radius) + " satisfy V non-increasing (max rise " + fmt("%.3g", s.max_increase) +
               ") and V' <= -lambda1 |grad f|^2 (max excess " + fmt("%.3g", s.max_bound_excess) + ")";
  if (!errors.empty()) s.evidence += "; first failure: " + errors;
  return s;
}

}  // namespace

StabilityReport certify(const System& system, const CriticalPoint& point, const CertifyOptions& opts) {
  EcVerdict ec;
  try {
    ec = ec_check(system.matrix(), opts.ec_horizon, opts.quad_tol);
  } catch (const Error& e) {
    ec.kind = EcVerdict::Kind::Inconclusive;
    ec.horizon = opts.ec_horizon;
    ec.evidence = std::string("EC check failed: ") + e.what();
  }
  return certify(system, point, ec, opts);
}

StabilityReport certify(const System& system, const CriticalPoint& point, const EcVerdict& ec,
                        const CertifyOptions& opts) {
  StabilityReport r;
  r.equilibrium = point;
  r.h3 = ec;
  r.h1 = check_h1(system.field(), point, opts);
  if (r.h1.pass) {
    r.h2 = check_h2(system.field(), point, opts);
    r.descent = check_descent_trajectories(system, point, opts);
  } else {
    r.h2.kind = IsolationVerdict::Kind::Inconclusive;
    r.h2.note = "not probed: H1 fails";
    r.descent.evidence = "not run: H1 fails";
  }
  r.equilibrium.isolation = r.h2;

  if (!r.h1.pass) {
    r.conclusion = Conclusion::NoCertificate;
    r.summary = "H1 fails: " + r.h1.evidence;
  } else if (!r.descent.ok) {
    r.conclusion = Conclusion::NoCertificate;
    r.summary = "Lyapunov descent checks failed: " + r.descent.evidence;
  } else if (r.h2.kind == IsolationVerdict::Kind::IsolatedEvidence && r.h3.kind == EcVerdict::Kind::DivergentLikely) {
    r.conclusion = Conclusion::UniformlyAsymptoticallyStable;
    r.summary = "H1, H2 (evidence) and EC (divergent) hold";
  } else {
    r.conclusion = Conclusion::UniformlyStable;
    r.summary = "H1 holds";
    if (r.h2.kind != IsolationVerdict::Kind::IsolatedEvidence)
      r.summary += std::string("; H2 is ") + to_string(r.h2.kind);
    if (r.h3.kind != EcVerdict::Kind::DivergentLikely) r.summary += std::string("; EC is ") + to_string(r.h3.kind);
  }
  return r;
}

}  // namespace modgrad

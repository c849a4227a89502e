#include "modgrad/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modgrad/errors.hpp"

namespace modgrad {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// 5th-order minus 4th-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
// Continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// PI controller constants.
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;   // h_new >= 0.2 h
// Cap on h times the local Lipschitz estimate. For linear decay every stage
// value of the pair stays positive while h |lambda| <= 1.03, so steps do not
// overshoot an attracting equilibrium set (or stall at the tolerance floor
// on the edge of the stability region).
constexpr double kStiffnessCap = 0.9;
constexpr double kFacMax = 10.0;  // h_new <= 10 h

Vec axpy(std::span<const double> y, double h, std::initializer_list<std::pair<double, const Vec*>> terms) {
  Vec out(y.begin(), y.end());
  for (const auto& [coef, k] : terms) {
    if (coef == 0.0) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * coef * (*k)[i];
  }
  return out;
}

double error_norm(std::span<const double> y0, std::span<const double> y1, std::span<const double> err,
                  const OdeOptions& o) {
  double s = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double sc = o.abs_tol + o.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    s += (err[i] / sc) * (err[i] / sc);
  }
  return std::sqrt(s / static_cast<double>(err.size()));
}

double initial_step(const System& sys, double t0, std::span<const double> x0, const Vec& f0, double h_max,
                    const OdeOptions& o) {
  const std::size_t n = x0.size();
  double dnf = 0.0, dny = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = o.abs_tol + o.rel_tol * std::abs(x0[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (x0[i] / sk) * (x0[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, h_max);
  try {
    const Vec x1 = axpy(x0, h, {{1.0, &f0}});
    const Vec f1 = sys.rhs(t0 + h, x1);
    double der2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = o.abs_tol + o.rel_tol * std::abs(x0[i]);
      der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
    h = std::min({100.0 * h, h1, h_max});
  } catch (const DomainError&) {
    h = std::min(h, 1e-6);
  }
  return std::max(h, o.h_min);
}

Vec dense_eval(const Trajectory::Segment& s, double t) {
  const double theta = (t - s.t) / s.h;
  const double theta1 = 1.0 - theta;
  Vec out(s.coeff[0].size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = s.coeff[0][i] +
             theta * (s.coeff[1][i] + theta1 * (s.coeff[2][i] + theta * (s.coeff[3][i] + theta1 * s.coeff[4][i])));
  }
  return out;
}

bool within_any(const OdeOptions& o, std::span<const double> x, std::size_t& which) {
  for (std::size_t k = 0; k < o.convergence_targets.size(); ++k) {
    if (distance(x, o.convergence_targets[k]) < o.convergence_radius) {
      which = k;
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<double> long_horizon_checkpoints() { return {10.0, 1e2, 1e3, 1e4}; }

const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::ReachedEnd: return "ReachedEnd";
    case TrajectoryStatus::Converged: return "Converged";
    case TrajectoryStatus::LeftDomain: return "LeftDomain";
    case TrajectoryStatus::StepFailure: return "StepFailure";
  }
  return "?";
}

Vec Trajectory::at(double t) const {
  if (samples.empty()) throw DomainError("Trajectory::at: empty trajectory");
  if (t < samples.front().t || t > samples.back().t) throw DomainError("Trajectory::at: time outside trajectory");
  if (segments.empty()) return samples.front().x;
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double tv, const Segment& s) { return tv < s.t; });
  const Segment& s = it == segments.begin() ? segments.front() : *std::prev(it);
  return dense_eval(s, std::min(t, s.t + s.h));
}

Trajectory simulate(const System& system, std::span<const double> x0, double t0, double t_end,
                    const OdeOptions& opts) {
  if (x0.size() != system.dimension()) throw DimensionError("simulate: x0 has wrong length");
  if (!system.field().domain().contains(x0)) throw OutsideDomain("simulate: x0 lies outside D");
  if (!(t0 >= 0.0) || !(t0 < t_end)) throw DomainError("simulate: requires 0 <= t0 < t_end");

  Trajectory traj;
  traj.t0 = t0;
  traj.samples.push_back({t0, Vec(x0.begin(), x0.end())});

  const double h_max = opts.h_max > 0.0 ? opts.h_max : (t_end - t0) / 10.0;
  std::vector<double> pending_checkpoints;
  for (double c : opts.checkpoints)
    if (c >= t0 && c <= t_end) pending_checkpoints.push_back(c);
  std::sort(pending_checkpoints.begin(), pending_checkpoints.end());
  std::size_t next_checkpoint = 0;
  while (next_checkpoint < pending_checkpoints.size() && pending_checkpoints[next_checkpoint] == t0) {
    traj.checkpoints.push_back({t0, traj.samples.front().x});
    ++next_checkpoint;
  }

  double t = t0;
  Vec y(x0.begin(), x0.end());
  Vec k1;
  try {
    k1 = system.rhs(t, y);
  } catch (const DomainError& e) {
    traj.status = TrajectoryStatus::LeftDomain;
    traj.exit_point = y;
    traj.message = e.what();
    return traj;
  }

  auto converged_here = [&](double tc, std::span<const double> xc, const Vec& fc) {
    std::size_t which = 0;
    if (opts.convergence_radius > 0.0 && within_any(opts, xc, which) && norm(fc) < opts.convergence_rhs_tol) {
      traj.status = TrajectoryStatus::Converged;
      traj.converged_target = which;
      traj.hit_time = tc;
      return true;
    }
    return false;
  };
  if (converged_here(t, y, k1)) return traj;

  double h = opts.h_init > 0.0 ? std::min(opts.h_init, h_max) : initial_step(system, t, y, k1, h_max, opts);
  double facold = 1e-4;
  double rho = 0.0;  // local Lipschitz estimate from the last two stages
  bool last_rejected = false;
  std::size_t steps = 0;

  while (t < t_end) {
    if (++steps > opts.max_steps) {
      traj.status = TrajectoryStatus::StepFailure;
      traj.message = "maximum number of steps exceeded";
      return traj;
    }
    h = std::min(h, h_max);
    if (t + h > t_end - opts.h_min) h = t_end - t;

    Vec k2, k3, k4, k5, k6, k7, y5, y6;
    bool stage_failed = false;
    Vec failed_point;
    std::string failure;
    try {
      Vec ys;
      ys = axpy(y, h, {{a21, &k1}});
      failed_point = ys;
      k2 = system.rhs(t + c2 * h, ys);
      ys = axpy(y, h, {{a31, &k1}, {a32, &k2}});
      failed_point = ys;
      k3 = system.rhs(t + c3 * h, ys);
      ys = axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
      failed_point = ys;
      k4 = system.rhs(t + c4 * h, ys);
      ys = axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
      failed_point = ys;
      k5 = system.rhs(t + c5 * h, ys);
      ys = axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
      failed_point = ys;
      y6 = ys;
      k6 = system.rhs(t + h, ys);
      y5 = axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
      failed_point = y5;
      k7 = system.rhs(t + h, y5);
    } catch (const DomainError& e) {
      stage_failed = true;
      failure = e.what();
    }

    if (stage_failed) {
      ++traj.rejected_steps;
      last_rejected = true;
      if (h <= opts.h_min) {
        traj.status = TrajectoryStatus::LeftDomain;
        traj.exit_point = failed_point;
        traj.message = failure;
        return traj;
      }
      h = std::max(0.5 * h, opts.h_min);
      continue;
    }

    Vec err(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double en = error_norm(y, y5, err, opts);
    const double fac11 = std::pow(std::max(en, 1e-300), kExpo);

    if (en <= 1.0 || h <= opts.h_min) {
      if (en > 1.0) {
        traj.status = TrajectoryStatus::StepFailure;
        traj.message = "error test failed at the minimum step size";
        return traj;
      }
      Trajectory::Segment seg{t, h, {}};
      Vec ydiff(y.size()), bspl(y.size()), r4(y.size()), r5(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        ydiff[i] = y5[i] - y[i];
        bspl[i] = h * k1[i] - ydiff[i];
        r4[i] = ydiff[i] - h * k7[i] - bspl[i];
        r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      seg.coeff = {y, ydiff, bspl, r4, r5};
      const double t_new = (h == t_end - t) ? t_end : t + h;
      traj.segments.push_back(std::move(seg));
      traj.samples.push_back({t_new, y5});
      ++traj.accepted_steps;
      while (next_checkpoint < pending_checkpoints.size() && pending_checkpoints[next_checkpoint] <= t_new) {
        const double tc = pending_checkpoints[next_checkpoint++];
        traj.checkpoints.push_back({tc, dense_eval(traj.segments.back(), tc)});
      }

      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::clamp(fac / kSafety, 1.0 / kFacMax, 1.0 / kFacMin);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      double dk = 0.0, dy = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        dk += (k7[i] - k6[i]) * (k7[i] - k6[i]);
        dy += (y5[i] - y6[i]) * (y5[i] - y6[i]);
        yy += y5[i] * y5[i];
      }
      // Keep the previous estimate when the quotient is dominated by rounding.
      const double floor = 1e3 * std::numeric_limits<double>::epsilon() * (1.0 + std::sqrt(yy));
      if (dy > floor * floor) rho = std::sqrt(dk / dy);
      if (rho > 0.0) h_new = std::min(h_new, kStiffnessCap / rho);
      facold = std::max(en, 1e-4);
      last_rejected = false;

      t = t_new;
      y = std::move(y5);
      k1 = std::move(k7);
      if (converged_here(t, y, k1)) return traj;
      h = std::max(h_new, opts.h_min);
    } else {
      ++traj.rejected_steps;
      last_rejected = true;
      h = std::max(h / std::min(1.0 / kFacMin, fac11 / kSafety), opts.h_min);
    }
  }
  traj.status = TrajectoryStatus::ReachedEnd;
  return traj;
}

LyapunovTrace lyapunov_trace_with_level(const System& system, const Trajectory& traj, double level) {
  LyapunovTrace rows;
  rows.reserve(traj.samples.size());
  for (const auto& s : traj.samples) {
    const Vec g = system.field().gradient(s.x);
    const SymMatrix p = system.matrix().at(s.t);
    rows.push_back({s.t, level - system.field().value(s.x), -p.quadratic_form(g), eigen_smallest(p), dot(g, g)});
  }
  return rows;
}

LyapunovTrace lyapunov_trace(const System& system, const Trajectory& traj, std::span<const double> anchor) {
  return lyapunov_trace_with_level(system, traj, system.field().value(anchor));
}

DescentCheck check_descent(const LyapunovTrace& trace, double monotone_slack, double bound_slack) {
  DescentCheck c;
  c.rows = trace.size();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double excess = trace[i].vdot + trace[i].lambda1 * trace[i].grad_norm2;
    c.max_bound_excess = i == 0 ? excess : std::max(c.max_bound_excess, excess);
    if (i > 0) c.max_increase = std::max(c.max_increase, trace[i].v - trace[i - 1].v);
  }
  c.monotone = c.max_increase <= monotone_slack;
  c.bound_holds = c.max_bound_excess <= bound_slack;
  return c;
}

}  // namespace modgrad

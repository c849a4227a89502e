#include "modgrad/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "modgrad/errors.hpp"
#include "modgrad/parallel.hpp"

namespace modgrad {

const char* to_string(Classification c) {
  switch (c) {
    case Classification::IsolatedLocalMax: return "IsolatedLocalMax";
    case Classification::LocalMin: return "LocalMin";
    case Classification::Saddle: return "Saddle";
    case Classification::Degenerate: return "Degenerate";
  }
  return "?";
}

const char* to_string(IsolationVerdict::Kind k) {
  switch (k) {
    case IsolationVerdict::Kind::IsolatedEvidence: return "IsolatedEvidence";
    case IsolationVerdict::Kind::NotIsolated: return "NotIsolated";
    case IsolationVerdict::Kind::Inconclusive: return "Inconclusive";
  }
  return "?";
}

Classification classify_spectrum(std::span<const double> spectrum, double frobenius_norm, double degeneracy_tol) {
  const double tol = degeneracy_tol * frobenius_norm;
  if (frobenius_norm == 0.0) return Classification::Degenerate;
  bool neg = false, pos = false;
  for (double l : spectrum) {
    if (std::abs(l) <= tol) return Classification::Degenerate;
    (l < 0.0 ? neg : pos) = true;
  }
  if (neg && pos) return Classification::Saddle;
  return neg ? Classification::IsolatedLocalMax : Classification::LocalMin;
}

CriticalPoint describe_critical_point(const ScalarField& field, std::span<const double> location,
                                      double degeneracy_tol) {
  CriticalPoint cp;
  cp.location.assign(location.begin(), location.end());
  const SymMatrix h = field.hessian(location);
  cp.hessian_spectrum = eigen_all(h);
  cp.classification = classify_spectrum(cp.hessian_spectrum, h.frobenius_norm(), degeneracy_tol);
  cp.grad_norm = norm(field.gradient(location));
  return cp;
}

namespace {

enum class SeedOutcome { Converged, NotConverged, LeftBox };

struct SeedResult {
  SeedOutcome outcome = SeedOutcome::NotConverged;
  Vec root;
};

SeedResult newton_from(const ScalarField& field, Vec x, const FinderOptions& opts) {
  const std::size_t n = x.size();
  const Box& box = field.domain();
  try {
    Vec g = field.gradient(x);
    double gn = norm(g);
    for (std::size_t iter = 0; iter <= opts.max_newton_iters; ++iter) {
      if (gn <= opts.newton_tol) return {SeedOutcome::Converged, x};
      if (iter == opts.max_newton_iters) break;
      const SymMatrix h = field.hessian(x);
      const double hf = h.frobenius_norm();
      if (hf == 0.0) break;
      const Vec spec = eigen_all(h);
      double min_abs = std::abs(spec.front());
      for (double l : spec) min_abs = std::min(min_abs, std::abs(l));

      Vec rhs(n);
      for (std::size_t i = 0; i < n; ++i) rhs[i] = -g[i];
      Vec dx;
      if (min_abs > 1e-8 * hf) {
        dx = solve_dense(std::vector<double>(h.data().begin(), h.data().end()), rhs);
      } else {
        // Levenberg: (H^T H + mu^2 I) dx = -H^T g, mu = 1e-6 ||H||_F.
        const double mu = 1e-6 * hf;
        std::vector<double> a(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += h(k, i) * h(k, j);
            a[i * n + j] = s + (i == j ? mu * mu : 0.0);
          }
        dx = solve_dense(std::move(a), h.multiply(rhs));
      }

      // Backtrack on |grad f| so far-away seeds do not overshoot.
      Vec trial(n);
      Vec g_trial;
      double step = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < 12; ++bt, step *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + step * dx[i];
        if (!box.contains(trial)) continue;
        try {
          g_trial = field.gradient(trial);
        } catch (const DomainError&) {
          continue;
        }
        if (norm(g_trial) < gn) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + dx[i];
        if (!box.contains(trial)) return {SeedOutcome::LeftBox, {}};
        g_trial = field.gradient(trial);
      }
      x = trial;
      g = std::move(g_trial);
      gn = norm(g);
    }
  } catch (const DomainError&) {
    return {SeedOutcome::NotConverged, {}};
  } catch (const NumericFailure&) {
    return {SeedOutcome::NotConverged, {}};
  }
  return {SeedOutcome::NotConverged, {}};
}

}  // namespace

FinderResult find_critical_points(const ScalarField& field, const FinderOptions& opts) {
  if (opts.grid_per_axis < 2) throw DomainError("find_critical_points: grid_per_axis must be >= 2");
  const Box& box = field.domain();
  const std::size_t n = field.dimension();
  const std::size_t g = opts.grid_per_axis;
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= g;

  std::vector<SeedResult> results(total);
  parallel_for(total, [&](std::size_t idx) {
    Vec seed(n);
    std::size_t rem = idx;
    for (std::size_t axis = 0; axis < n; ++axis) {
      const std::size_t k = rem % g;
      rem /= g;
      seed[axis] = box.lo(axis) + box.width(axis) * static_cast<double>(k) / static_cast<double>(g - 1);
    }
    results[idx] = newton_from(field, std::move(seed), opts);
  });

  FinderResult out;
  out.seeds = total;
  const double dedup_radius = 10.0 * opts.newton_tol;
  for (auto& r : results) {
    switch (r.outcome) {
      case SeedOutcome::NotConverged: ++out.not_converged; continue;
      case SeedOutcome::LeftBox: ++out.left_box; continue;
      case SeedOutcome::Converged: ++out.converged; break;
    }
    const bool duplicate = std::any_of(out.points.begin(), out.points.end(), [&](const CriticalPoint& cp) {
      return distance(cp.location, r.root) <= dedup_radius;
    });
    if (duplicate) continue;
    try {
      out.points.push_back(describe_critical_point(field, r.root, opts.degeneracy_tol));
    } catch (const Error&) {
      ++out.not_converged;
    }
  }
  return out;
}

std::vector<Vec> sphere_directions(std::size_t dimension, std::size_t count) {
  std::vector<Vec> dirs;
  dirs.reserve(count);
  if (dimension == 1) {
    for (std::size_t k = 0; k < count; ++k) dirs.push_back({k % 2 == 0 ? 1.0 : -1.0});
    return dirs;
  }
  if (dimension == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
      dirs.push_back({std::cos(a), std::sin(a)});
    }
    return dirs;
  }
  // Fixed-seed Gaussian directions: deterministic and isotropic.
  std::mt19937_64 rng(0x5eed5eedULL + dimension);
  std::normal_distribution<double> normal;
  while (dirs.size() < count) {
    Vec v(dimension);
    for (double& c : v) c = normal(rng);
    const double len = norm(v);
    if (len < 1e-12) continue;
    for (double& c : v) c /= len;
    dirs.push_back(std::move(v));
  }
  return dirs;
}

namespace {

constexpr double kNearFloorFactor = 100.0;

// Golden-section minimization of |grad f| along point + s u on [lo, hi].
std::pair<double, double> refine_ray_minimum(const ScalarField& field, std::span<const double> point,
                                             const Vec& u, double lo, double hi) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto eval = [&](double s) {
    Vec x(point.begin(), point.end());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * u[i];
    return norm(field.gradient(x));
  };
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = eval(c), fd = eval(d);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval(d);
    }
  }
  return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

IsolationVerdict isolation_probe(const ScalarField& field, std::span<const double> point,
                                 std::span<const double> shell_radii, std::size_t samples_per_shell,
                                 double grad_floor, std::size_t ray_samples) {
  if (shell_radii.empty()) throw DomainError("isolation_probe: no shell radii");
  if (samples_per_shell < 8) throw DomainError("isolation_probe: samples_per_shell must be >= 8");
  const Box& box = field.domain();
  const double r_max = *std::max_element(shell_radii.begin(), shell_radii.end());
  const double r_min = *std::min_element(shell_radii.begin(), shell_radii.end());
  if (!(r_min > 0.0)) throw DomainError("isolation_probe: radii must be positive");
  if (box.wall_distance(point) < r_max) throw DomainError("isolation_probe: shell exits D");

  const auto dirs = sphere_directions(point.size(), samples_per_shell);
  IsolationVerdict v;
  v.min_grad_norm = std::numeric_limits<double>::infinity();
  std::vector<double> shell_min(shell_radii.size(), std::numeric_limits<double>::infinity());

  auto consider = [&](const Vec& x, double gn) {
    ++v.samples;
    if (gn < v.min_grad_norm) {
      v.min_grad_norm = gn;
      if (gn <= grad_floor) v.witness = x;
    }
  };
  auto point_at = [&](const Vec& u, double s) {
    Vec x(point.begin(), point.end());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * u[i];
    return x;
  };

  for (std::size_t k = 0; k < shell_radii.size(); ++k) {
    for (const auto& u : dirs) {
      const Vec x = point_at(u, shell_radii[k]);
      double gn;
      try {
        gn = norm(field.gradient(x));
      } catch (const DomainError&) {
        throw DomainError("isolation_probe: shell point outside the field's domain");
      }
      shell_min[k] = std::min(shell_min[k], gn);
      consider(x, gn);
    }
  }

  std::size_t ray_minima = 0;
  if (ray_samples >= 3 && r_max > r_min) {
    const double ratio = r_max / r_min;
    for (const auto& u : dirs) {
      std::vector<double> s(ray_samples), gn(ray_samples);
      for (std::size_t j = 0; j < ray_samples; ++j) {
        s[j] = r_min * std::pow(ratio, static_cast<double>(j) / static_cast<double>(ray_samples - 1));
        gn[j] = norm(field.gradient(point_at(u, s[j])));
      }
      for (std::size_t j = 1; j + 1 < ray_samples; ++j) {
        if (gn[j] <= gn[j - 1] && gn[j] <= gn[j + 1]) {
          ++ray_minima;
          const auto [sm, gm] = refine_ray_minimum(field, point, u, s[j - 1], s[j + 1]);
          consider(point_at(u, sm), gm);
        }
      }
    }
  }

  if (v.min_grad_norm <= grad_floor) {
    v.kind = IsolationVerdict::Kind::NotIsolated;
    v.note = "a sample with |grad f| <= grad_floor was found";
  } else if (v.min_grad_norm <= kNearFloorFactor * grad_floor) {
    v.kind = IsolationVerdict::Kind::Inconclusive;
    v.witness.reset();
    v.note = "smallest |grad f| lies within a factor 100 of grad_floor";
  } else {
    v.kind = IsolationVerdict::Kind::IsolatedEvidence;
    v.note = "every shell minimum exceeds grad_floor";
  }
  v.note += " (sampled evidence, not a proof; " + std::to_string(shell_radii.size()) + " shells x " +
            std::to_string(samples_per_shell) + " samples";
  if (ray_samples >= 3) v.note += ", " + std::to_string(ray_minima) + " refined ray minima";
  v.note += ")";
  return v;
}

}  // namespace modgrad

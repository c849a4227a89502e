#include "modgrad/basin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <random>

#include "modgrad/errors.hpp"
#include "modgrad/parallel.hpp"

namespace modgrad {

CellGrid::CellGrid(Box box, std::vector<std::size_t> resolution)
    : box_(std::move(box)), resolution_(std::move(resolution)) {
  if (resolution_.size() != box_.dimension()) throw DimensionError("CellGrid: resolution has wrong length");
  count_ = 1;
  for (std::size_t r : resolution_) {
    if (r == 0) throw DimensionError("CellGrid: zero resolution");
    count_ *= r;
  }
}

double CellGrid::cell_volume() const {
  double v = 1.0;
  for (std::size_t a = 0; a < dimension(); ++a) v *= cell_width(a);
  return v;
}

double CellGrid::cell_diagonal() const {
  double s = 0.0;
  for (std::size_t a = 0; a < dimension(); ++a) s += cell_width(a) * cell_width(a);
  return std::sqrt(s);
}

std::vector<std::size_t> CellGrid::unravel(std::size_t cell) const {
  std::vector<std::size_t> idx(dimension());
  for (std::size_t a = 0; a < dimension(); ++a) {
    idx[a] = cell % resolution_[a];
    cell /= resolution_[a];
  }
  return idx;
}

std::size_t CellGrid::ravel(std::span<const std::size_t> idx) const {
  std::size_t cell = 0;
  for (std::size_t a = dimension(); a-- > 0;) cell = cell * resolution_[a] + idx[a];
  return cell;
}

Vec CellGrid::center(std::size_t cell) const {
  const auto idx = unravel(cell);
  Vec x(dimension());
  for (std::size_t a = 0; a < dimension(); ++a) x[a] = box_.lo(a) + (static_cast<double>(idx[a]) + 0.5) * cell_width(a);
  return x;
}

std::size_t CellGrid::cell_of(std::span<const double> x) const {
  if (!box_.contains(x)) throw OutsideDomain("CellGrid::cell_of: point outside the box");
  std::vector<std::size_t> idx(dimension());
  for (std::size_t a = 0; a < dimension(); ++a) {
    const double f = (x[a] - box_.lo(a)) / cell_width(a);
    idx[a] = std::min(static_cast<std::size_t>(std::floor(f)), resolution_[a] - 1);
  }
  return ravel(idx);
}

std::vector<std::size_t> CellGrid::cells_touching(std::span<const double> x) const {
  if (!box_.contains(x)) return {};
  std::vector<std::vector<std::size_t>> per_axis(dimension());
  for (std::size_t a = 0; a < dimension(); ++a) {
    const double f = (x[a] - box_.lo(a)) / cell_width(a);
    const double fl = std::floor(f);
    const auto k = static_cast<std::size_t>(fl);
    if (k < resolution_[a]) per_axis[a].push_back(k);
    if (f == fl && k > 0) per_axis[a].push_back(k - 1);
  }
  std::vector<std::size_t> cells;
  std::vector<std::size_t> idx(dimension());
  auto rec = [&](auto&& self, std::size_t a) -> void {
    if (a == dimension()) {
      cells.push_back(ravel(idx));
      return;
    }
    for (std::size_t k : per_axis[a]) {
      idx[a] = k;
      self(self, a + 1);
    }
  };
  rec(rec, 0);
  return cells;
}

std::optional<std::size_t> CellGrid::neighbor(std::size_t cell, std::size_t axis, int dir) const {
  std::size_t stride = 1;
  for (std::size_t a = 0; a < axis; ++a) stride *= resolution_[a];
  const std::size_t k = (cell / stride) % resolution_[axis];
  if (dir < 0) {
    if (k == 0) return std::nullopt;
    return cell - stride;
  }
  if (k + 1 >= resolution_[axis]) return std::nullopt;
  return cell + stride;
}

bool CellGrid::on_wall(std::size_t cell) const {
  const auto idx = unravel(cell);
  for (std::size_t a = 0; a < dimension(); ++a)
    if (idx[a] == 0 || idx[a] + 1 == resolution_[a]) return true;
  return false;
}

GridComponent extract_component(const ScalarField& field, std::span<const double> anchor, double c,
                                std::span<const std::size_t> resolution) {
  const std::size_t n = field.dimension();
  if (n > kMaxGridDimension)
    throw DimensionError("extract_component: grid extraction supports n <= 4; use verify_basin_sampled");
  if (resolution.size() != n) throw DimensionError("extract_component: resolution has wrong length");
  for (std::size_t r : resolution)
    if (r < kMinResolution) throw DimensionError("extract_component: resolution must be >= 32 per axis");
  if (!field.domain().contains(anchor)) throw DomainError("extract_component: anchor outside the box");

  GridComponent comp;
  comp.grid = CellGrid(field.domain(), std::vector<std::size_t>(resolution.begin(), resolution.end()));
  comp.anchor.assign(anchor.begin(), anchor.end());
  comp.M = field.value(anchor);
  comp.c = c;
  if (!(c < comp.M)) throw DomainError("c must be below f(anchor)");
  comp.anchor_cell = comp.grid.cell_of(anchor);

  const std::size_t cells = comp.grid.cell_count();
  std::vector<std::uint8_t> candidate(cells, 0);
  const std::size_t row = comp.grid.resolution()[0];
  parallel_for(cells / row, [&](std::size_t r) {
    for (std::size_t cell = r * row; cell < (r + 1) * row; ++cell) {
      try {
        const double v = field.value(comp.grid.center(cell));
        candidate[cell] = (c < v && v < comp.M) ? 1 : 0;
      } catch (const DomainError&) {
        candidate[cell] = 0;
      }
    }
  });
  candidate[comp.anchor_cell] = 1;

  comp.mask.assign(cells, 0);
  std::deque<std::size_t> queue{comp.anchor_cell};
  comp.mask[comp.anchor_cell] = 1;
  while (!queue.empty()) {
    const std::size_t cell = queue.front();
    queue.pop_front();
    ++comp.masked_count;
    for (std::size_t a = 0; a < n; ++a) {
      for (int dir : {-1, 1}) {
        const auto nb = comp.grid.neighbor(cell, a, dir);
        if (nb && candidate[*nb] && !comp.mask[*nb]) {
          comp.mask[*nb] = 1;
          queue.push_back(*nb);
        }
      }
    }
  }

  for (std::size_t cell = 0; cell < cells; ++cell) {
    if (!comp.mask[cell]) continue;
    bool boundary = false;
    for (std::size_t a = 0; a < n && !boundary; ++a)
      for (int dir : {-1, 1}) {
        const auto nb = comp.grid.neighbor(cell, a, dir);
        if (!nb || !comp.mask[*nb]) {
          boundary = true;
          break;
        }
      }
    if (boundary) comp.boundary_cells.push_back(cell);
  }
  return comp;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

constexpr std::size_t kMaxWitnesses = 16;

void add_witness(HypothesisCheck& h, Vec w) {
  h.pass = false;
  if (h.witnesses.size() < kMaxWitnesses) h.witnesses.push_back(std::move(w));
}

Vec lerp(std::span<const double> a, std::span<const double> b, double s) {
  Vec x(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i] + s * (b[i] - a[i]);
  return x;
}

// Bisection for the crossing f = level on the segment a -> b, where
// above(f(a)) holds and fails at b.
Vec bisect_crossing(const ScalarField& f, std::span<const double> a, std::span<const double> b, double level,
                    bool a_above) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < kBoundaryBisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool above = f.value(lerp(a, b, mid)) > level;
    if (above == a_above) lo = mid;
    else hi = mid;
  }
  return lerp(a, b, 0.5 * (lo + hi));
}

}  // namespace

BasinHypotheses check_hypotheses(const GridComponent& comp, const ScalarField& field,
                                 std::span<const CriticalPoint> critical_points, std::optional<double> tol_boundary) {
  BasinHypotheses out;
  const CellGrid& grid = comp.grid;
  const std::size_t n = grid.dimension();

  // H4: no masked cell on the box wall; every face neighbour is evaluable.
  for (std::size_t cell : comp.boundary_cells) {
    ++out.h4.checked;
    if (grid.on_wall(cell)) add_witness(out.h4, grid.center(cell));
  }

  double lipschitz = 0.0;
  for (std::size_t cell : comp.boundary_cells) {
    try {
      lipschitz = std::max(lipschitz, norm(field.gradient(grid.center(cell))));
    } catch (const DomainError&) {
    }
  }
  out.lipschitz_estimate = lipschitz;
  out.tol_boundary = tol_boundary.value_or(2.0 * lipschitz * grid.cell_diagonal());

  // H5: refine each boundary face crossing and check which level it hits.
  std::size_t m_crossings = 0;
  for (std::size_t cell : comp.boundary_cells) {
    const Vec a = cell == comp.anchor_cell ? comp.anchor : grid.center(cell);
    for (std::size_t axis = 0; axis < n; ++axis) {
      for (int dir : {-1, 1}) {
        const auto nb = grid.neighbor(cell, axis, dir);
        if (!nb || comp.mask[*nb]) continue;
        const Vec b = grid.center(*nb);
        double fb;
        try {
          fb = field.value(b);
        } catch (const DomainError&) {
          add_witness(out.h4, b);
          continue;
        }
        ++out.h5.checked;
        try {
          if (fb >= comp.M) {
            const Vec x = bisect_crossing(field, a, b, comp.M, false);
            ++m_crossings;
            out.h5.max_residual = std::max(out.h5.max_residual, std::abs(field.value(x) - comp.c));
            add_witness(out.h5, x);
          } else {
            const Vec x = bisect_crossing(field, a, b, comp.c, true);
            const double residual = std::abs(field.value(x) - comp.c);
            out.h5.max_residual = std::max(out.h5.max_residual, residual);
            if (residual > out.tol_boundary) add_witness(out.h5, x);
          }
        } catch (const DomainError&) {
          add_witness(out.h4, b);
        }
      }
    }
  }
  out.h4.detail = out.h4.pass ? "no masked cell touches the box wall"
                              : "the component reaches the box wall or leaves the field's domain";
  out.h5.detail = "max |f - c| at refined boundary crossings " + fmt("%.3g", out.h5.max_residual) +
                  " (tolerance " + fmt("%.3g", out.tol_boundary) + ")";
  if (m_crossings > 0)
    out.h5.detail += "; " + std::to_string(m_crossings) + " boundary crossings reach f = M = " + fmt("%.10g", comp.M);

  // H6: no critical point other than the anchor inside a masked (closed) cell.
  const double anchor_tol = 1e-7 * (1.0 + norm(comp.anchor));
  for (const auto& cp : critical_points) {
    if (distance(cp.location, comp.anchor) <= anchor_tol) continue;
    ++out.h6.checked;
    for (std::size_t cell : grid.cells_touching(cp.location)) {
      if (comp.mask[cell]) {
        add_witness(out.h6, cp.location);
        break;
      }
    }
  }
  out.h6.detail = out.h6.pass ? "no other critical point lies in the closure of the component"
                              : std::to_string(out.h6.witnesses.size()) + " other critical point(s) inside";
  return out;
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

BasinVerification run_samples(const System& system, std::span<const double> anchor, std::vector<Vec> starts,
                              double t_end, double converge_radius, const OdeOptions& ode) {
  BasinVerification v;
  v.sample_count = starts.size();
  OdeOptions o = ode;
  o.convergence_targets = {Vec(anchor.begin(), anchor.end())};
  o.convergence_radius = converge_radius;

  struct Outcome {
    bool converged = false;
    BasinFailure failure;
  };
  std::vector<Outcome> outcomes(starts.size());
  parallel_for(starts.size(), [&](std::size_t k) {
    Outcome& out = outcomes[k];
    out.failure.start = starts[k];
    try {
      const Trajectory traj = simulate(system, starts[k], 0.0, t_end, o);
      out.converged = traj.status == TrajectoryStatus::Converged;
      out.failure.status = traj.status;
      out.failure.final_state = traj.final_state();
      out.failure.final_time = traj.final_time();
    } catch (const DomainError&) {
      out.failure.status = TrajectoryStatus::LeftDomain;
      out.failure.final_state = starts[k];
      out.failure.final_time = 0.0;
    }
  });
  for (auto& o2 : outcomes) {
    if (o2.converged) ++v.converged_count;
    else v.failures.push_back(std::move(o2.failure));
  }
  v.starts = std::move(starts);
  return v;
}

}  // namespace

BasinVerification verify_basin(const System& system, const GridComponent& comp, std::size_t sample_count,
                               double t_end, double converge_radius, std::uint64_t seed, const OdeOptions& ode) {
  std::vector<std::size_t> masked;
  masked.reserve(comp.masked_count);
  for (std::size_t cell = 0; cell < comp.mask.size(); ++cell)
    if (comp.mask[cell]) masked.push_back(cell);

  const std::size_t n = comp.grid.dimension();
  std::vector<Vec> starts(sample_count);
  for (std::size_t k = 0; k < sample_count; ++k) {
    std::mt19937_64 rng(sample_seed(seed, k));
    std::uniform_int_distribution<std::size_t> pick(0, masked.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t cell = masked[pick(rng)];
    const auto idx = comp.grid.unravel(cell);
    Vec x(n);
    for (std::size_t a = 0; a < n; ++a)
      x[a] = comp.grid.box().lo(a) + (static_cast<double>(idx[a]) + unit(rng)) * comp.grid.cell_width(a);
    starts[k] = std::move(x);
  }
  BasinVerification v = run_samples(system, comp.anchor, std::move(starts), t_end, converge_radius, ode);
  v.note = std::to_string(v.converged_count) + "/" + std::to_string(v.sample_count) +
           " sampled starts converged to the anchor within " + fmt("%.3g", converge_radius) + " by t=" +
           fmt("%.6g", t_end) + "; sampling is evidence for, not proof of, basin membership";
  return v;
}

BasinVerification verify_basin_sampled(const System& system, std::span<const double> anchor, double c,
                                       double sample_radius, std::size_t sample_count, double t_end,
                                       double converge_radius, std::uint64_t seed, const OdeOptions& ode) {
  const ScalarField& field = system.field();
  const double m = field.value(anchor);
  if (!(c < m)) throw DomainError("c must be below f(anchor)");
  const std::size_t n = anchor.size();
  std::vector<Vec> starts;
  constexpr std::size_t kMaxTries = 10000;
  for (std::size_t k = 0; k < sample_count; ++k) {
    std::mt19937_64 rng(sample_seed(seed, k));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t attempt = 0; attempt < kMaxTries; ++attempt) {
      Vec u(n);
      for (double& x : u) x = normal(rng);
      const double len = norm(u);
      if (len == 0.0) continue;
      const double r = sample_radius * std::pow(unit(rng), 1.0 / static_cast<double>(n));
      Vec x(anchor.begin(), anchor.end());
      for (std::size_t i = 0; i < n; ++i) x[i] += r * u[i] / len;
      if (!field.domain().contains(x)) continue;
      try {
        const double v = field.value(x);
        if (c < v && v < m) {
          starts.push_back(std::move(x));
          break;
        }
      } catch (const DomainError&) {
      }
    }
  }
  BasinVerification v = run_samples(system, anchor, std::move(starts), t_end, converge_radius, ode);
  v.note = std::to_string(v.converged_count) + "/" + std::to_string(v.sample_count) +
           " rejection-sampled starts in {c < f < M} within radius " + fmt("%.3g", sample_radius) +
           " converged; connectivity to the anchor is not checked in this mode";
  return v;
}

std::optional<double> suggest_level(const ScalarField& field, std::span<const double> anchor,
                                    std::span<const CriticalPoint> critical_points) {
  const double m = field.value(anchor);
  // Critical values within rounding of M are the same level, not a lower one.
  const double below = m - 1e-9 * (1.0 + std::abs(m));
  std::optional<double> best;
  for (const auto& cp : critical_points) {
    if (distance(cp.location, anchor) <= 1e-7 * (1.0 + norm(anchor))) continue;
    const double v = field.value(cp.location);
    if (v < below && (!best || v > *best)) best = v;
  }
  if (!best) return std::nullopt;
  return *best + 0.01 * (m - *best);
}

void write_mask_pgm(std::ostream& out, const GridComponent& comp) {
  if (comp.grid.dimension() != 2) throw DimensionError("write_mask_pgm: only 2-D masks");
  const std::size_t w = comp.grid.resolution()[0];
  const std::size_t h = comp.grid.resolution()[1];
  out << "P5\n" << w << " " << h << "\n255\n";
  std::vector<char> row(w);
  for (std::size_t j = h; j-- > 0;) {
    for (std::size_t i = 0; i < w; ++i) row[i] = comp.mask[j * w + i] ? static_cast<char>(255) : 0;
    out.write(row.data(), static_cast<std::streamsize>(w));
  }
}

void write_cells_csv(std::ostream& out, const GridComponent& comp) {
  const std::size_t n = comp.grid.dimension();
  for (std::size_t a = 0; a < n; ++a) out << (a ? "," : "") << "x" << a + 1;
  out << "\n";
  char buf[32];
  for (std::size_t cell = 0; cell < comp.mask.size(); ++cell) {
    if (!comp.mask[cell]) continue;
    const Vec x = comp.grid.center(cell);
    for (std::size_t a = 0; a < n; ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", x[a]);
      out << (a ? "," : "") << buf;
    }
    out << "\n";
  }
}

std::vector<std::vector<Vec>> mask_outline(const GridComponent& comp) {
  if (comp.grid.dimension() != 2) throw DimensionError("mask_outline: only 2-D masks");
  const std::size_t w = comp.grid.resolution()[0];
  const std::size_t h = comp.grid.resolution()[1];
  using Vertex = std::pair<std::size_t, std::size_t>;
  std::multimap<Vertex, Vertex> edges;  // directed, component on the left
  auto masked = [&](long i, long j) {
    return i >= 0 && j >= 0 && i < static_cast<long>(w) && j < static_cast<long>(h) && comp.mask[j * w + i];
  };
  for (std::size_t j = 0; j < h; ++j)
    for (std::size_t i = 0; i < w; ++i) {
      if (!comp.mask[j * w + i]) continue;
      const long li = static_cast<long>(i), lj = static_cast<long>(j);
      if (!masked(li, lj - 1)) edges.emplace(Vertex{i, j}, Vertex{i + 1, j});
      if (!masked(li + 1, lj)) edges.emplace(Vertex{i + 1, j}, Vertex{i + 1, j + 1});
      if (!masked(li, lj + 1)) edges.emplace(Vertex{i + 1, j + 1}, Vertex{i, j + 1});
      if (!masked(li - 1, lj)) edges.emplace(Vertex{i, j + 1}, Vertex{i, j});
    }
  auto to_point = [&](const Vertex& v) {
    return Vec{comp.grid.box().lo(0) + static_cast<double>(v.first) * comp.grid.cell_width(0),
               comp.grid.box().lo(1) + static_cast<double>(v.second) * comp.grid.cell_width(1)};
  };
  std::vector<std::vector<Vec>> loops;
  while (!edges.empty()) {
    auto it = edges.begin();
    const Vertex start = it->first;
    std::vector<Vec> loop{to_point(start)};
    Vertex cur = it->second;
    edges.erase(it);
    while (cur != start) {
      loop.push_back(to_point(cur));
      auto next = edges.find(cur);
      if (next == edges.end()) break;
      cur = next->second;
      edges.erase(next);
    }
    loop.push_back(to_point(start));
    loops.push_back(std::move(loop));
  }
  return loops;
}

void write_boundary_csv(std::ostream& out, const GridComponent& comp) {
  out << "polyline,x1,x2\n";
  char buf[96];
  const auto loops = mask_outline(comp);
  for (std::size_t k = 0; k < loops.size(); ++k)
    for (const auto& p : loops[k]) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k, p[0], p[1]);
      out << buf;
    }
}

}  // namespace modgrad

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "modgrad/equilibria.hpp"
#include "modgrad/field.hpp"
#include "modgrad/ode.hpp"

namespace modgrad {

/// Uniform cell grid over a box. Linear cell index runs axis 0 fastest.
class CellGrid {
 public:
  CellGrid() = default;
  CellGrid(Box box, std::vector<std::size_t> resolution);

  const Box& box() const noexcept { return box_; }
  const std::vector<std::size_t>& resolution() const noexcept { return resolution_; }
  std::size_t dimension() const noexcept { return resolution_.size(); }
  std::size_t cell_count() const noexcept { return count_; }
  double cell_width(std::size_t axis) const { return box_.width(axis) / static_cast<double>(resolution_[axis]); }
  double cell_volume() const;
  double cell_diagonal() const;

  std::vector<std::size_t> unravel(std::size_t cell) const;
  std::size_t ravel(std::span<const std::size_t> idx) const;
  Vec center(std::size_t cell) const;
  /// Cell containing x (points on the upper wall belong to the last cell).
  std::size_t cell_of(std::span<const double> x) const;
  /// All cells whose closed extent contains x (more than one on shared faces).
  std::vector<std::size_t> cells_touching(std::span<const double> x) const;
  /// Face neighbour of `cell` along `axis` in direction `dir` (+1/-1); nullopt past the wall.
  std::optional<std::size_t> neighbor(std::size_t cell, std::size_t axis, int dir) const;
  bool on_wall(std::size_t cell) const;

 private:
  Box box_;
  std::vector<std::size_t> resolution_;
  std::size_t count_ = 0;
};

inline constexpr std::size_t kMaxGridDimension = 4;
inline constexpr std::size_t kMinResolution = 32;

/// Face-connected component of {anchor} U {c < f < M}, M = f(anchor), on a
/// cell-centre grid.
struct GridComponent {
  CellGrid grid;
  std::vector<std::uint8_t> mask;  // 1 = cell in the component
  double c = 0.0;
  double M = 0.0;
  Vec anchor;
  std::size_t anchor_cell = 0;
  std::vector<std::size_t> boundary_cells;
  std::size_t masked_count = 0;

  bool contains(std::size_t cell) const { return mask[cell] != 0; }
  double masked_volume() const { return static_cast<double>(masked_count) * grid.cell_volume(); }
};

/// Throws DomainError if the anchor is outside the box or c >= f(anchor), and
/// DimensionError for n > 4 or a resolution below 32.
GridComponent extract_component(const ScalarField& field, std::span<const double> anchor, double c,
                                std::span<const std::size_t> resolution);

struct HypothesisCheck {
  bool pass = true;
  std::vector<Vec> witnesses;
  std::size_t checked = 0;
  double max_residual = 0.0;
  std::string detail;
};

struct BasinHypotheses {
  HypothesisCheck h4;  // component bounded away from the box walls
  HypothesisCheck h5;  // f = c on the boundary
  HypothesisCheck h6;  // no other critical point in the closure
  double tol_boundary = 0.0;
  double lipschitz_estimate = 0.0;
  bool all_pass() const { return h4.pass && h5.pass && h6.pass; }
};

inline constexpr int kBoundaryBisections = 40;

/// Checks H4-H6 on the grid component. tol_boundary defaults to
/// 2 * (max |grad f| over boundary cells) * cell diagonal.
BasinHypotheses check_hypotheses(const GridComponent& component, const ScalarField& field,
                                 std::span<const CriticalPoint> critical_points,
                                 std::optional<double> tol_boundary = std::nullopt);

struct BasinFailure {
  Vec start;
  TrajectoryStatus status;
  Vec final_state;
  double final_time;
};

struct BasinVerification {
  std::size_t sample_count = 0;
  std::size_t converged_count = 0;
  std::vector<BasinFailure> failures;
  std::vector<Vec> starts;
  std::string note;
};

/// Deterministic per-sample seed (splitmix64 of seed and sample index).
std::uint64_t sample_seed(std::uint64_t seed, std::size_t index);

/// Simulates trajectories from uniform points inside randomly chosen masked
/// cells; a sample converges iff the trajectory stops Converged at the anchor.
BasinVerification verify_basin(const System& system, const GridComponent& component, std::size_t sample_count,
                               double t_end, double converge_radius, std::uint64_t seed,
                               const OdeOptions& ode = {});

/// Fallback for n > 4: starts are rejection-sampled from {c < f < M} inside
/// the ball of radius `sample_radius` around the anchor (no connectivity test).
BasinVerification verify_basin_sampled(const System& system, std::span<const double> anchor, double c,
                                       double sample_radius, std::size_t sample_count, double t_end,
                                       double converge_radius, std::uint64_t seed, const OdeOptions& ode = {});

/// Heuristic level: slightly above the largest critical value below f(anchor)
/// among the other critical points. nullopt when there is none.
std::optional<double> suggest_level(const ScalarField& field, std::span<const double> anchor,
                                    std::span<const CriticalPoint> critical_points);

/// Binary PGM (P5), one byte per cell, 255 inside. Row 0 is the top (largest x2).
void write_mask_pgm(std::ostream& out, const GridComponent& component);
/// CSV of masked cell centres with header x1..xn.
void write_cells_csv(std::ostream& out, const GridComponent& component);

/// Closed outline loops of a 2-D mask, as lattice-vertex coordinates.
std::vector<std::vector<Vec>> mask_outline(const GridComponent& component);
/// CSV "polyline,x1,x2" of mask_outline().
void write_boundary_csv(std::ostream& out, const GridComponent& component);

}  // namespace modgrad

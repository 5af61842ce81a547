#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "beliefsum/hmm.hpp"

namespace beliefsum::solver {

struct CostModel {
  double c_f = 1.0;   // false-alarm cost, paid for stopping in a normal state
  double c_d = 0.05;  // delay cost, paid per continued step after absorption

  void validate(bool allow_zero = false) const;
};

// Regular discretization of the reduced belief space: points
// (q_low, q_high) = (i/M, j/M) with i + j <= M, row-major in i.
class SimplexGrid {
 public:
  explicit SimplexGrid(int resolution);

  int resolution() const { return m_; }
  std::size_t size() const { return offsets_.back(); }

  std::size_t index(int i, int j) const;
  ReducedBelief point(std::size_t idx) const;
  std::pair<int, int> coords(std::size_t idx) const;

  // Piecewise-linear interpolation on the triangulated grid. Exact at grid
  // points; O(1/M^2) bias elsewhere.
  double interpolate(std::span<const double> values, double q_low, double q_high) const;

  // Grid point nearest to (q_low, q_high), projected into the simplex.
  std::size_t nearest(double q_low, double q_high) const;

 private:
  int m_ = 0;
  std::vector<std::size_t> offsets_;  // offsets_[i] = index of (i, 0)
};

struct ValueFunction {
  std::vector<double> values;
  bool converged = false;
  double sup_norm_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool monotone = true;  // iterates never increased at any grid point
};

enum class Action : std::uint8_t { stop = 0, keep_observing = 1 };

struct Policy {
  std::vector<Action> actions;
};

// Smallest y with Poisson(rate) cumulative mass >= 1 - tail_mass. The
// Bellman observation sum is truncated there.
int observation_cutoff(double rate, double tail_mass = 1e-10);

// One Bellman backup over the grid:
//   V'(pi) = min{ c_f*(1-s), c_d*s + sum_y V(T(pi,y)) sigma(pi,y) },  s = q_low+q_high,
// with T the reduced filter step and V evaluated by interpolation.
// Requires identical pbar rows.
ValueFunction bellman_backup(const ValueFunction& v, const SimplexGrid& grid,
                             const CostModel& cost, const RateLadder& ladder,
                             const TransitionModel& model);

struct Solution {
  ValueFunction value;
  Policy policy;
};

// Value iteration from V0 = the stop-immediately cost, which makes the
// iterates pointwise non-increasing. Stops when the sup-norm residual drops
// below tol; returns converged = false if max_iter runs out first.
// Ties between stopping and continuing resolve to stop.
Solution value_iterate(const SimplexGrid& grid, const CostModel& cost,
                       const RateLadder& ladder, const TransitionModel& model,
                       double tol = 1e-6, int max_iter = 2000);

struct ConvexityViolation {
  std::size_t stop_a = 0;  // the two stop points whose segment is broken
  std::size_t stop_b = 0;
  std::size_t witness = 0;  // non-stop point within interpolation distance
};

struct ConvexityReport {
  bool convex = true;
  std::vector<ConvexityViolation> violations;  // capped, first occurrences
  // Hull-segment witnesses adjacent to the stop set. A slanted stop
  // boundary discretizes to a staircase, so these carry no signal about the
  // underlying region; they are counted but do not fail the check.
  int boundary_ambiguities = 0;
};

// Checks that the stop region is convex on the grid, up to one cell of
// boundary discretization: along every lattice line (rows, columns,
// constant-sum diagonals) the stop set must have no gaps, and segments
// between convex-hull vertices of the stop set must touch only stop points
// or immediate lattice neighbors of stop points. Each reported violation is
// a concrete pair of stop points plus a non-stop point within interpolation
// distance of their segment and at least two cells away from the stop set.
ConvexityReport check_convexity(const Policy& policy, const SimplexGrid& grid);

struct SumThresholdReport {
  bool holds = false;
  std::optional<double> a_star;  // stop region is { q_low + q_high > a_star }
  int mixed_levels = 0;          // diagonals carrying both actions
};

// Checks that the action depends on (q_low, q_high) only through the sum
// s = q_low + q_high, with stop exactly on { s > A* }. At most one boundary
// diagonal may carry both actions (one cell of grid ambiguity).
SumThresholdReport check_threshold_in_sum(const Policy& policy, const SimplexGrid& grid);

// Structured-text report: configuration echo, iteration count, residual,
// threshold estimate and convexity outcome.
std::string format_report(const Solution& solution, const SimplexGrid& grid,
                          const CostModel& cost, const RateLadder& ladder,
                          const TransitionModel& model);

// CSV dump, one row per grid point: q_low,q_high,V,action.
void write_policy_csv(std::ostream& os, const Solution& solution, const SimplexGrid& grid);

}  // namespace beliefsum::solver

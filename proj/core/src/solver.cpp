#include "beliefsum/solver.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>

namespace beliefsum::solver {

void CostModel::validate(bool allow_zero) const {
  const double floor = allow_zero ? 0.0 : std::numeric_limits<double>::min();
  if (!std::isfinite(c_f) || !std::isfinite(c_d) || c_f < floor || c_d < floor)
    throw ConfigError("CostModel: c_f and c_d must be positive");
}

SimplexGrid::SimplexGrid(int resolution) : m_(resolution) {
  if (resolution < 1) throw ConfigError("SimplexGrid: resolution must be >= 1");
  offsets_.resize(static_cast<std::size_t>(m_) + 2);
  offsets_[0] = 0;
  for (int i = 0; i <= m_; ++i)
    offsets_[static_cast<std::size_t>(i) + 1] =
        offsets_[static_cast<std::size_t>(i)] + static_cast<std::size_t>(m_ - i + 1);
}

std::size_t SimplexGrid::index(int i, int j) const {
  if (i < 0 || j < 0 || i + j > m_) throw DimensionMismatch("SimplexGrid: point outside simplex");
  return offsets_[static_cast<std::size_t>(i)] + static_cast<std::size_t>(j);
}

std::pair<int, int> SimplexGrid::coords(std::size_t idx) const {
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), idx);
  const int i = static_cast<int>(it - offsets_.begin()) - 1;
  const int j = static_cast<int>(idx - offsets_[static_cast<std::size_t>(i)]);
  return {i, j};
}

ReducedBelief SimplexGrid::point(std::size_t idx) const {
  const auto [i, j] = coords(idx);
  return ReducedBelief{static_cast<double>(i) / m_, static_cast<double>(j) / m_};
}

namespace {

struct Stencil {
  std::array<std::size_t, 3> nodes;
  std::array<double, 3> weights;
  int count = 0;
};

Stencil locate(const SimplexGrid& grid, int m, double x, double y) {
  x = std::clamp(x, 0.0, 1.0);
  y = std::clamp(y, 0.0, 1.0);
  const double s = x + y;
  if (s > 1.0) {
    x /= s;
    y /= s;
  }
  double fx = x * m;
  double fy = y * m;
  int i = std::min(static_cast<int>(fx), m);
  int j = std::min(static_cast<int>(fy), m);
  Stencil st;
  if (i + j >= m) {
    // On the far diagonal; the fractional weights are rounding noise.
    j = m - i;
    st.nodes[0] = grid.index(i, j);
    st.weights[0] = 1.0;
    st.count = 1;
    return st;
  }
  const double u = fx - i;
  const double v = fy - j;
  if (u + v <= 1.0 || i + j == m - 1) {
    // Lower triangle (i,j), (i+1,j), (i,j+1).
    double w0 = 1.0 - u - v;
    if (w0 < 0.0) w0 = 0.0;  // clipped against the diagonal
    const double norm = w0 + u + v;
    st.nodes = {grid.index(i, j), grid.index(i + 1, j), grid.index(i, j + 1)};
    st.weights = {w0 / norm, u / norm, v / norm};
    st.count = 3;
    return st;
  }
  // Upper triangle (i+1,j+1), (i+1,j), (i,j+1); reachable only when
  // i + j <= m - 2, so all three nodes are inside the simplex.
  st.nodes = {grid.index(i + 1, j + 1), grid.index(i + 1, j), grid.index(i, j + 1)};
  st.weights = {u + v - 1.0, 1.0 - v, 1.0 - u};
  st.count = 3;
  return st;
}

}  // namespace

double SimplexGrid::interpolate(std::span<const double> values, double q_low,
                                double q_high) const {
  if (values.size() != size()) throw DimensionMismatch("SimplexGrid: value vector size mismatch");
  const Stencil st = locate(*this, m_, q_low, q_high);
  double out = 0.0;
  for (int k = 0; k < st.count; ++k) {
    const std::size_t kk = static_cast<std::size_t>(k);
    out += st.weights[kk] * values[st.nodes[kk]];
  }
  return out;
}

std::size_t SimplexGrid::nearest(double q_low, double q_high) const {
  int i = static_cast<int>(std::lround(std::clamp(q_low, 0.0, 1.0) * m_));
  int j = static_cast<int>(std::lround(std::clamp(q_high, 0.0, 1.0) * m_));
  i = std::min(i, m_);
  j = std::min(j, m_ - i);
  return index(i, j);
}

int observation_cutoff(double rate, double tail_mass) {
  if (!std::isfinite(rate) || rate <= 0.0)
    throw InvalidParameter("observation_cutoff: rate must be positive");
  if (!(tail_mass > 0.0 && tail_mass < 1.0))
    throw InvalidParameter("observation_cutoff: tail_mass must be in (0,1)");
  const int hard_cap = static_cast<int>(rate + 80.0 * std::sqrt(rate) + 80.0);
  double p = std::exp(-rate);
  if (p == 0.0) return hard_cap;  // extreme rate; generous normal-tail bound
  double cdf = p;
  int y = 0;
  const double target = 1.0 - tail_mass;
  while (cdf < target && y < hard_cap) {
    ++y;
    p *= rate / y;
    cdf += p;
  }
  return y;
}

namespace {

// Everything the per-point backup needs, with the per-count emission terms
// computed once. The update applied here is algebraically the same as
// hmm::reduced_filter_step with cached pmf values; a unit test pins that.
struct BackupContext {
  const SimplexGrid& grid;
  double a_low, a_high, c_f, c_d;
  double row_low, row_high;
  int y_max;
  std::vector<double> w_low;     // pmf(lambda_0, y)
  std::vector<double> w_high;    // pmf(lambda_{N+1}, y)
  std::vector<double> w_normal;  // sum_j row[j] * pmf(lambda_j, y)

  BackupContext(const SimplexGrid& g, const CostModel& cost, const RateLadder& ladder,
                const TransitionModel& model)
      : grid(g), a_low(model.a_low), a_high(model.a_high), c_f(cost.c_f), c_d(cost.c_d) {
    ladder.validate();
    cost.validate(/*allow_zero=*/true);
    if (model.normal_count() != ladder.normal_count)
      throw DimensionMismatch("solver: ladder and transition model sizes disagree");
    if (!model.has_identical_rows())
      throw ConfigError("solver: the reduced recursion requires identical pbar rows");
    const auto row = model.shared_row();
    const int n = ladder.normal_count;
    row_low = row[0];
    row_high = row[static_cast<std::size_t>(n) + 1];
    y_max = observation_cutoff(ladder.max_rate());
    w_low.resize(static_cast<std::size_t>(y_max) + 1);
    w_high.resize(static_cast<std::size_t>(y_max) + 1);
    w_normal.assign(static_cast<std::size_t>(y_max) + 1, 0.0);
    for (int y = 0; y <= y_max; ++y) {
      const std::size_t yi = static_cast<std::size_t>(y);
      w_low[yi] = poisson_pmf(ladder.rate(0), y);
      w_high[yi] = poisson_pmf(ladder.rate(n + 1), y);
      for (int j = 1; j <= n; ++j)
        w_normal[yi] += row[static_cast<std::size_t>(j)] * poisson_pmf(ladder.rate(j), y);
    }
  }

  // Backup at one grid point against the interpolant of `values`.
  std::pair<double, Action> backup_point(std::span<const double> values,
                                         const ReducedBelief& pt) const {
    const double s = pt.q_low + pt.q_high;
    const double r = 1.0 - s;
    const double stop_cost = c_f * r;
    const double pred_low = a_low * pt.q_low + (1.0 - a_high) * pt.q_high + r * row_low;
    const double pred_high = (1.0 - a_low) * pt.q_low + a_high * pt.q_high + r * row_high;
    double cont_cost = c_d * s;
    for (int y = 0; y <= y_max; ++y) {
      const std::size_t yi = static_cast<std::size_t>(y);
      const double wl = pred_low * w_low[yi];
      const double wh = pred_high * w_high[yi];
      const double sig = wl + wh + r * w_normal[yi];
      if (sig <= 0.0) continue;
      cont_cost += grid.interpolate(values, wl / sig, wh / sig) * sig;
      if (stop_cost <= cont_cost) {
        // The remaining observation terms only grow the continue branch.
        cont_cost = stop_cost + 1.0;
        break;
      }
    }
    if (stop_cost <= cont_cost) return {stop_cost, Action::stop};
    return {cont_cost, Action::keep_observing};
  }

  void sweep(std::span<const double> in, std::span<double> out,
             std::span<Action> actions) const {
    const std::size_t total = grid.size();
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(hw, std::max<std::size_t>(1, total / 4096)));
    auto run_range = [&](std::size_t begin, std::size_t end) {
      for (std::size_t idx = begin; idx < end; ++idx) {
        const auto [value, action] = backup_point(in, grid.point(idx));
        out[idx] = value;
        actions[idx] = action;
      }
    };
    if (workers <= 1) {
      run_range(0, total);
      return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (total + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(total, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }
};

std::vector<double> stop_cost_values(const SimplexGrid& grid, const CostModel& cost) {
  std::vector<double> v(grid.size());
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const ReducedBelief pt = grid.point(idx);
    v[idx] = cost.c_f * (1.0 - pt.q_low - pt.q_high);
  }
  return v;
}

}  // namespace

ValueFunction bellman_backup(const ValueFunction& v, const SimplexGrid& grid,
                             const CostModel& cost, const RateLadder& ladder,
                             const TransitionModel& model) {
  if (v.values.size() != grid.size())
    throw DimensionMismatch("bellman_backup: value function does not match grid");
  const BackupContext ctx(grid, cost, ladder, model);
  ValueFunction out = v;
  std::vector<Action> actions(grid.size());
  ctx.sweep(v.values, out.values, actions);
  double residual = 0.0;
  for (std::size_t idx = 0; idx < grid.size(); ++idx)
    residual = std::max(residual, std::abs(out.values[idx] - v.values[idx]));
  out.sup_norm_residual = residual;
  out.iterations = v.iterations + 1;
  out.converged = false;
  return out;
}

Solution value_iterate(const SimplexGrid& grid, const CostModel& cost,
                       const RateLadder& ladder, const TransitionModel& model, double tol,
                       int max_iter) {
  if (!(tol > 0.0)) throw ConfigError("value_iterate: tol must be > 0");
  if (max_iter < 1) throw ConfigError("value_iterate: max_iter must be >= 1");
  const BackupContext ctx(grid, cost, ladder, model);

  Solution sol;
  sol.value.values = stop_cost_values(grid, cost);
  sol.policy.actions.assign(grid.size(), Action::stop);

  std::vector<double> next(grid.size());
  for (int iter = 1; iter <= max_iter; ++iter) {
    ctx.sweep(sol.value.values, next, sol.policy.actions);
    double residual = 0.0;
    double max_increase = 0.0;
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
      const double d = next[idx] - sol.value.values[idx];
      residual = std::max(residual, std::abs(d));
      max_increase = std::max(max_increase, d);
    }
    sol.value.values.swap(next);
    sol.value.iterations = iter;
    sol.value.sup_norm_residual = residual;
    if (max_increase > 1e-12) sol.value.monotone = false;
    if (residual < tol) {
      sol.value.converged = true;
      break;
    }
  }
  // extract the policy against the final iterate
  ctx.sweep(sol.value.values, next, sol.policy.actions);
  return sol;
}

namespace {

struct GridPointRef {
  int i = 0;
  int j = 0;
  std::size_t idx = 0;
};

long long cross(const GridPointRef& o, const GridPointRef& a, const GridPointRef& b) {
  return static_cast<long long>(a.i - o.i) * (b.j - o.j) -
         static_cast<long long>(a.j - o.j) * (b.i - o.i);
}

// Andrew monotone chain on integer grid coordinates.
std::vector<GridPointRef> convex_hull(std::vector<GridPointRef> pts) {
  std::sort(pts.begin(), pts.end(), [](const GridPointRef& a, const GridPointRef& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  if (pts.size() < 3) return pts;
  std::vector<GridPointRef> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t p = 0; p < pts.size(); ++p) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[p]) <= 0) --k;
    hull[k++] = pts[p];
  }
  const std::size_t lower = k + 1;
  for (std::size_t p = pts.size() - 1; p-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[p]) <= 0) --k;
    hull[k++] = pts[p];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

ConvexityReport check_convexity(const Policy& policy, const SimplexGrid& grid) {
  if (policy.actions.size() != grid.size())
    throw DimensionMismatch("check_convexity: policy does not match grid");
  const int m = grid.resolution();
  constexpr std::size_t kMaxViolations = 64;

  ConvexityReport report;
  std::set<std::size_t> seen;
  auto is_stop = [&](int i, int j) {
    return policy.actions[grid.index(i, j)] == Action::stop;
  };
  auto add_violation = [&](std::size_t a, std::size_t b, std::size_t witness) {
    if (seen.insert(witness).second && report.violations.size() < kMaxViolations)
      report.violations.push_back({a, b, witness});
    report.convex = false;
  };

  // Gap scan along a lattice line: any non-stop point strictly between two
  // stop points lies on their connecting segment.
  auto scan_line = [&](auto point_at, int length) {
    int prev_stop = -1;
    for (int t = 0; t < length; ++t) {
      const auto [i, j] = point_at(t);
      if (!is_stop(i, j)) continue;
      if (prev_stop >= 0 && prev_stop < t - 1) {
        const auto [pi, pj] = point_at(prev_stop);
        for (int g = prev_stop + 1; g < t; ++g) {
          const auto [gi, gj] = point_at(g);
          add_violation(grid.index(pi, pj), grid.index(i, j), grid.index(gi, gj));
        }
      }
      prev_stop = t;
    }
  };

  for (int j = 0; j <= m; ++j)
    scan_line([j](int t) { return std::pair<int, int>{t, j}; }, m - j + 1);
  for (int i = 0; i <= m; ++i)
    scan_line([i](int t) { return std::pair<int, int>{i, t}; }, m - i + 1);
  for (int level = 0; level <= m; ++level)
    scan_line([level](int t) { return std::pair<int, int>{t, level - t}; }, level + 1);

  // Segments between hull vertices of the stop region must interpolate only
  // stop points or their immediate lattice neighbors: a slanted boundary
  // discretizes to a staircase whose inner corners sit one cell inside the
  // hull, so witnesses touching the stop set are ambiguity, not shape.
  auto near_stop = [&](std::size_t node) {
    const auto [i, j] = grid.coords(node);
    static constexpr int kSteps[6][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};
    for (const auto& step : kSteps) {
      const int ni = i + step[0];
      const int nj = j + step[1];
      if (ni < 0 || nj < 0 || ni + nj > m) continue;
      if (policy.actions[grid.index(ni, nj)] == Action::stop) return true;
    }
    return false;
  };

  std::vector<GridPointRef> stops;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    if (policy.actions[idx] != Action::stop) continue;
    const auto [i, j] = grid.coords(idx);
    stops.push_back({i, j, idx});
  }
  const std::vector<GridPointRef> hull = convex_hull(std::move(stops));
  std::set<std::size_t> ambiguous;
  const int samples = 2 * m;
  for (std::size_t a = 0; a < hull.size(); ++a) {
    for (std::size_t b = a + 1; b < hull.size(); ++b) {
      for (int t = 0; t <= samples; ++t) {
        const double frac = static_cast<double>(t) / samples;
        const double x = (hull[a].i + frac * (hull[b].i - hull[a].i)) / m;
        const double y = (hull[a].j + frac * (hull[b].j - hull[a].j)) / m;
        const Stencil st = locate(grid, m, x, y);
        for (int k = 0; k < st.count; ++k) {
          if (st.weights[static_cast<std::size_t>(k)] < 1e-9) continue;
          const std::size_t node = st.nodes[static_cast<std::size_t>(k)];
          if (policy.actions[node] == Action::stop) continue;
          if (near_stop(node)) {
            ambiguous.insert(node);
          } else {
            add_violation(hull[a].idx, hull[b].idx, node);
          }
        }
      }
    }
  }
  report.boundary_ambiguities = static_cast<int>(ambiguous.size());
  return report;
}

SumThresholdReport check_threshold_in_sum(const Policy& policy, const SimplexGrid& grid) {
  if (policy.actions.size() != grid.size())
    throw DimensionMismatch("check_threshold_in_sum: policy does not match grid");
  const int m = grid.resolution();

  enum class Level { all_stop, all_continue, mixed };
  std::vector<Level> levels(static_cast<std::size_t>(m) + 1);
  SumThresholdReport report;
  for (int level = 0; level <= m; ++level) {
    int stops = 0;
    for (int i = 0; i <= level; ++i)
      if (policy.actions[grid.index(i, level - i)] == Action::stop) ++stops;
    const std::size_t li = static_cast<std::size_t>(level);
    levels[li] = stops == 0            ? Level::all_continue
                 : stops == level + 1  ? Level::all_stop
                                       : Level::mixed;
    if (levels[li] == Level::mixed) ++report.mixed_levels;
  }

  // Terminal run of all-stop diagonals.
  int first_stop_level = m + 1;
  for (int level = m; level >= 0 && levels[static_cast<std::size_t>(level)] == Level::all_stop;
       --level)
    first_stop_level = level;

  bool holds = first_stop_level <= m && report.mixed_levels <= 1;
  for (int level = 0; holds && level < first_stop_level - 1; ++level)
    if (levels[static_cast<std::size_t>(level)] != Level::all_continue) holds = false;
  report.holds = holds;
  if (holds) {
    if (first_stop_level == 0) {
      report.a_star = -0.5 / m;  // stop everywhere
    } else if (levels[static_cast<std::size_t>(first_stop_level - 1)] == Level::mixed) {
      report.a_star = static_cast<double>(first_stop_level - 1) / m;
    } else {
      report.a_star = (first_stop_level - 0.5) / m;
    }
  }
  return report;
}

namespace {

std::string fmt_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

std::string format_report(const Solution& solution, const SimplexGrid& grid,
                          const CostModel& cost, const RateLadder& ladder,
                          const TransitionModel& model) {
  const ConvexityReport convexity = check_convexity(solution.policy, grid);
  const SumThresholdReport sum = check_threshold_in_sum(solution.policy, grid);
  std::size_t stop_points = 0;
  for (Action a : solution.policy.actions)
    if (a == Action::stop) ++stop_points;

  std::ostringstream os;
  os << "solver report\n";
  os << "grid_resolution: " << grid.resolution() << "\n";
  os << "grid_points: " << grid.size() << "\n";
  os << "n_normal: " << ladder.normal_count << "\n";
  os << "rates:";
  for (double r : ladder.rates) os << " " << fmt_double(r);
  os << "\n";
  os << "a_low: " << fmt_double(model.a_low) << "\n";
  os << "a_high: " << fmt_double(model.a_high) << "\n";
  os << "c_f: " << fmt_double(cost.c_f) << "\n";
  os << "c_d: " << fmt_double(cost.c_d) << "\n";
  os << "iterations: " << solution.value.iterations << "\n";
  os << "converged: " << (solution.value.converged ? "true" : "false") << "\n";
  os << "sup_norm_residual: " << fmt_double(solution.value.sup_norm_residual) << "\n";
  os << "monotone_iterates: " << (solution.value.monotone ? "true" : "false") << "\n";
  os << "stop_points: " << stop_points << "\n";
  os << "threshold_in_sum: " << (sum.holds ? "holds" : "fails") << "\n";
  os << "a_star_estimate: " << (sum.a_star ? fmt_double(*sum.a_star) : std::string("none"))
     << "\n";
  os << "mixed_levels: " << sum.mixed_levels << "\n";
  os << "stop_region_convex: " << (convexity.convex ? "true" : "false") << "\n";
  os << "convexity_violations: " << convexity.violations.size() << "\n";
  os << "convexity_boundary_ambiguities: " << convexity.boundary_ambiguities << "\n";
  return os.str();
}

void write_policy_csv(std::ostream& os, const Solution& solution, const SimplexGrid& grid) {
  os << "q_low,q_high,V,action\n";
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const ReducedBelief pt = grid.point(idx);
    os << fmt_double(pt.q_low) << ',' << fmt_double(pt.q_high) << ','
       << fmt_double(solution.value.values[idx]) << ','
       << (solution.policy.actions[idx] == Action::stop ? "stop" : "continue") << '\n';
  }
}

}  // namespace beliefsum::solver

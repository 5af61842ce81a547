#include "beliefsum/rate_learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace beliefsum::learn {

namespace {

// Assign each value to the nearest centroid; centroids must be sorted.
// Returns the within-cluster sum of squared distances.
double assign(const std::vector<double>& values, const std::vector<double>& centroids,
              std::vector<int>& assignment) {
  double sse = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    int best = 0;
    double best_d = std::abs(values[i] - centroids[0]);
    for (std::size_t k = 1; k < centroids.size(); ++k) {
      const double d = std::abs(values[i] - centroids[k]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    assignment[i] = best;
    sse += best_d * best_d;
  }
  return sse;
}

}  // namespace

LearnResult learn_ladder(const TrainingSet& data, const LearnerConfig& config) {
  if (data.counts.empty()) throw UsageError("learn_ladder: empty training set");
  if (config.n_normal < 1) throw ConfigError("learn_ladder: n_normal must be >= 1");
  if (!(config.boundary_multiplier > 0.0))
    throw ConfigError("learn_ladder: boundary_multiplier must be > 0");
  if (!(config.rate_floor > 0.0)) throw ConfigError("learn_ladder: rate_floor must be > 0");
  for (int c : data.counts)
    if (c < 0) throw InvalidParameter("learn_ladder: counts must be nonnegative");

  std::vector<double> values(data.counts.begin(), data.counts.end());
  std::sort(values.begin(), values.end());

  // The requested k cannot exceed the number of distinct values.
  int distinct = 1;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] != values[i - 1]) ++distinct;
  const int k = std::min(config.n_normal, distinct);

  // Quantile initialization: centroid j at the (2j+1)/(2k) quantile.
  std::vector<double> centroids(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    std::size_t idx = static_cast<std::size_t>(
        (2.0 * j + 1.0) / (2.0 * k) * static_cast<double>(values.size()));
    idx = std::min(idx, values.size() - 1);
    centroids[static_cast<std::size_t>(j)] = values[idx];
  }
  std::sort(centroids.begin(), centroids.end());
  centroids.erase(std::unique(centroids.begin(), centroids.end()), centroids.end());

  LearnResult result;
  result.requested_n = config.n_normal;

  std::vector<int> assignment(values.size(), 0);
  std::vector<int> previous;
  constexpr int kMaxLloyd = 1000;
  for (int iter = 0; iter < kMaxLloyd; ++iter) {
    result.objective_trace.push_back(assign(values, centroids, assignment));
    result.lloyd_iterations = iter + 1;
    if (assignment == previous) break;  // fixed point
    previous = assignment;

    std::vector<double> sums(centroids.size(), 0.0);
    std::vector<int> sizes(centroids.size(), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      sums[static_cast<std::size_t>(assignment[i])] += values[i];
      ++sizes[static_cast<std::size_t>(assignment[i])];
    }
    std::vector<double> next;
    for (std::size_t j = 0; j < centroids.size(); ++j)
      if (sizes[j] > 0) next.push_back(sums[j] / sizes[j]);  // empty clusters drop out
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    if (next.size() != centroids.size()) previous.clear();  // sizes changed, reassign
    centroids = std::move(next);
  }

  result.effective_n = static_cast<int>(centroids.size());

  // Positivity floor, then strict ordering by nudging ties upward.
  const double eps = config.rate_floor;
  for (double& c : centroids) c = std::max(c, eps);
  for (std::size_t j = 1; j < centroids.size(); ++j)
    if (centroids[j] <= centroids[j - 1]) centroids[j] = centroids[j - 1] + eps;

  const double m = config.boundary_multiplier;
  const double low = std::max(eps, centroids.front() - m * std::sqrt(centroids.front()));
  const double high = centroids.back() + m * std::sqrt(centroids.back());

  std::vector<double> rates;
  rates.reserve(centroids.size() + 2);
  rates.push_back(low >= centroids.front() ? centroids.front() / 2.0 : low);
  rates.insert(rates.end(), centroids.begin(), centroids.end());
  rates.push_back(high);

  result.ladder = RateLadder::create(std::move(rates));
  return result;
}

TransitionModel default_transition(int n_normal, double a_low, double a_high) {
  if (n_normal < 1) throw ConfigError("default_transition: n_normal must be >= 1");
  const double p = 1.0 / (n_normal + 2);
  Matrix pbar(static_cast<std::size_t>(n_normal), static_cast<std::size_t>(n_normal) + 2, p);
  return TransitionModel::create(std::move(pbar), a_low, a_high);
}

RateLadder example_person_ladder() {
  return RateLadder::create({0.001, 5.0, 10.0, 15.0, 20.0, 25.0, 65.0});
}

RateLadder example_car_ladder() { return RateLadder::create({0.00001, 0.001, 55.0}); }

}  // namespace beliefsum::learn

#include "beliefsum/hmm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace beliefsum {

namespace {

constexpr double kRowSumTol = 1e-12;
// Entries in (-kClampFloor, 0) produced by rounding are clamped to zero and
// the vector renormalized.
constexpr double kClampFloor = 1e-15;

// log(n!) via a cumulative log-sum table; falls back to lgamma past the table.
double log_factorial(int n) {
  static constexpr int kTableSize = 1024;
  static const std::array<double, kTableSize> table = [] {
    std::array<double, kTableSize> t{};
    t[0] = 0.0;
    for (int k = 1; k < kTableSize; ++k) t[k] = t[k - 1] + std::log(static_cast<double>(k));
    return t;
  }();
  if (n < kTableSize) return table[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

void clamp_and_normalize(std::vector<double>& v) {
  double total = 0.0;
  for (double& x : v) {
    if (x < 0.0) {
      if (x <= -kClampFloor)
        throw InvalidParameter("belief entry is negative beyond rounding noise");
      x = 0.0;
    }
    total += x;
  }
  if (total <= 0.0) throw DegenerateObservation("belief mass vanished");
  for (double& x : v) x /= total;
}

}  // namespace

RateLadder RateLadder::create(std::vector<double> rates) {
  RateLadder ladder;
  ladder.rates = std::move(rates);
  ladder.normal_count = static_cast<int>(ladder.rates.size()) - 2;
  ladder.validate();
  return ladder;
}

void RateLadder::validate() const {
  if (normal_count < 1) throw ConfigError("RateLadder: need at least one normal state");
  if (rates.size() != static_cast<std::size_t>(normal_count) + 2)
    throw DimensionMismatch("RateLadder: rates length must be normal_count + 2");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!std::isfinite(rates[i]) || rates[i] <= 0.0)
      throw InvalidParameter("RateLadder: rates must be positive and finite");
    if (i > 0 && rates[i] <= rates[i - 1])
      throw InvalidParameter("RateLadder: rates must be strictly increasing");
  }
}

TransitionModel TransitionModel::create(Matrix pbar, double a_low, double a_high) {
  TransitionModel model;
  model.pbar = std::move(pbar);
  model.a_low = a_low;
  model.a_high = a_high;
  model.validate();
  return model;
}

void TransitionModel::validate() const {
  const int n = normal_count();
  if (n < 1) throw ConfigError("TransitionModel: pbar must have at least one row");
  if (pbar.cols() != static_cast<std::size_t>(n) + 2)
    throw DimensionMismatch("TransitionModel: pbar must be N x (N+2)");
  if (!(a_low >= 0.0 && a_low <= 1.0) || !(a_high >= 0.0 && a_high <= 1.0))
    throw InvalidParameter("TransitionModel: a_low/a_high must lie in [0,1]");
  for (int r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < pbar.cols(); ++c)
      if (pbar(r, c) < 0.0) throw InvalidParameter("TransitionModel: negative pbar entry");
    if (std::abs(pbar.row_sum(r) - 1.0) > kRowSumTol)
      throw InvalidParameter("TransitionModel: pbar row " + std::to_string(r + 1) +
                             " does not sum to 1");
  }
}

bool TransitionModel::has_identical_rows(double tol) const {
  for (std::size_t r = 1; r < pbar.rows(); ++r)
    for (std::size_t c = 0; c < pbar.cols(); ++c)
      if (std::abs(pbar(r, c) - pbar(0, c)) > tol) return false;
  return true;
}

std::span<const double> TransitionModel::shared_row() const {
  if (!has_identical_rows())
    throw ConfigError("TransitionModel: shared_row requires identical pbar rows");
  return pbar.row(0);
}

Belief Belief::uniform_normal(int n_normal) {
  Belief b;
  b.probs.assign(static_cast<std::size_t>(belief_size(n_normal)), 0.0);
  for (int j = 1; j <= n_normal; ++j)
    b.probs[static_cast<std::size_t>(normal_index(j))] = 1.0 / n_normal;
  return b;
}

Belief Belief::point_mass(int n_normal, int index) {
  Belief b;
  b.probs.assign(static_cast<std::size_t>(belief_size(n_normal)), 0.0);
  b.probs.at(static_cast<std::size_t>(index)) = 1.0;
  return b;
}

void Belief::validate(double tol) const {
  if (probs.size() < 4) throw DimensionMismatch("Belief: need at least 4 states");
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) throw InvalidParameter("Belief: entries must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > tol) throw InvalidParameter("Belief: entries must sum to 1");
}

void ReducedBelief::validate(double tol) const {
  if (q_low < -tol || q_high < -tol || q_low + q_high > 1.0 + tol)
    throw InvalidParameter("ReducedBelief: masses outside the simplex");
}

double log_poisson_pmf(double rate, int count) {
  if (!std::isfinite(rate) || rate <= 0.0)
    throw InvalidParameter("poisson_pmf: rate must be positive and finite");
  if (count < 0) throw InvalidParameter("poisson_pmf: count must be >= 0");
  return count * std::log(rate) - rate - log_factorial(count);
}

double poisson_pmf(double rate, int count) { return std::exp(log_poisson_pmf(rate, count)); }

Matrix build_p1(int n_normal) {
  if (n_normal < 1) throw ConfigError("build_p1: need n_normal >= 1");
  const std::size_t dim = static_cast<std::size_t>(belief_size(n_normal));
  Matrix p1(dim, dim, 0.0);
  for (std::size_t r = 0; r < dim; ++r) p1(r, kStateA) = 1.0;
  return p1;
}

Matrix build_p2(const TransitionModel& model, int n_normal) {
  if (model.normal_count() != n_normal)
    throw DimensionMismatch("build_p2: model size does not match n_normal");
  model.validate();
  const std::size_t dim = static_cast<std::size_t>(belief_size(n_normal));
  Matrix p2(dim, dim, 0.0);
  p2(kStateA, kStateA) = 1.0;
  const std::size_t low = static_cast<std::size_t>(low_index());
  const std::size_t high = static_cast<std::size_t>(high_index(n_normal));
  p2(low, low) = model.a_low;
  p2(low, high) = 1.0 - model.a_low;
  p2(high, low) = 1.0 - model.a_high;
  p2(high, high) = model.a_high;
  for (int j = 1; j <= n_normal; ++j) {
    const std::size_t r = static_cast<std::size_t>(normal_index(j));
    for (int s = 0; s <= n_normal + 1; ++s)
      p2(r, static_cast<std::size_t>(rate_state_index(s))) = model.pbar(j - 1, s);
  }
  return p2;
}

FilterStep filter_step(const Belief& belief, int count, const RateLadder& ladder,
                       const TransitionModel& model) {
  const int n = ladder.normal_count;
  if (belief.normal_count() != n || model.normal_count() != n)
    throw DimensionMismatch("filter_step: belief/ladder/model sizes disagree");
  belief.validate();
  if (belief.mass_a() != 0.0)
    throw InvalidParameter("filter_step: belief must carry no mass on the stopped state");

  // Predicted belief P2^T pi, written out against the structure of P2 so no
  // dense matrix is formed. The A row only feeds A, which holds zero mass.
  const std::size_t dim = belief.probs.size();
  std::vector<double> predicted(dim, 0.0);
  const double ql = belief.q_low();
  const double qh = belief.q_high();
  predicted[static_cast<std::size_t>(low_index())] = model.a_low * ql + (1.0 - model.a_high) * qh;
  predicted[static_cast<std::size_t>(high_index(n))] = (1.0 - model.a_low) * ql + model.a_high * qh;
  for (int j = 1; j <= n; ++j) {
    const double mass = belief.probs[static_cast<std::size_t>(normal_index(j))];
    if (mass == 0.0) continue;
    for (int s = 0; s <= n + 1; ++s)
      predicted[static_cast<std::size_t>(rate_state_index(s))] += mass * model.pbar(j - 1, s);
  }

  // Emission reweighting; state A has emission weight zero by convention.
  FilterStep out;
  out.posterior.probs.assign(dim, 0.0);
  double total = 0.0;
  for (int s = 0; s <= n + 1; ++s) {
    const std::size_t idx = static_cast<std::size_t>(rate_state_index(s));
    const double w = predicted[idx] * poisson_pmf(ladder.rate(s), count);
    out.posterior.probs[idx] = w;
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total))
    throw DegenerateObservation("filter_step: predictive probability of count " +
                                std::to_string(count) + " vanished");
  out.sigma = total;
  clamp_and_normalize(out.posterior.probs);
  return out;
}

Belief belief_update(const Belief& belief, int count, const RateLadder& ladder,
                     const TransitionModel& model) {
  return filter_step(belief, count, ladder, model).posterior;
}

double sigma(const Belief& belief, int count, const RateLadder& ladder,
             const TransitionModel& model) {
  return filter_step(belief, count, ladder, model).sigma;
}

ReducedBelief reduced_predict(const ReducedBelief& rb, std::span<const double> shared_row,
                              double a_low, double a_high, int n_normal) {
  const double r = std::max(0.0, rb.normal_mass());
  ReducedBelief pred;
  pred.q_low = a_low * rb.q_low + (1.0 - a_high) * rb.q_high + r * shared_row[0];
  pred.q_high = (1.0 - a_low) * rb.q_low + a_high * rb.q_high +
                r * shared_row[static_cast<std::size_t>(n_normal) + 1];
  return pred;
}

ReducedFilterStep reduced_filter_step(const ReducedBelief& rb, int count,
                                      const RateLadder& ladder,
                                      std::span<const double> shared_row, double a_low,
                                      double a_high) {
  const int n = ladder.normal_count;
  if (shared_row.size() != static_cast<std::size_t>(n) + 2)
    throw DimensionMismatch("reduced_filter_step: row length must be N+2");
  rb.validate();

  const ReducedBelief pred = reduced_predict(rb, shared_row, a_low, a_high, n);
  const double r = std::max(0.0, rb.normal_mass());

  const double w_low = pred.q_low * poisson_pmf(ladder.rate(0), count);
  const double w_high = pred.q_high * poisson_pmf(ladder.rate(n + 1), count);
  double w_normal = 0.0;
  for (int j = 1; j <= n; ++j)
    w_normal += shared_row[static_cast<std::size_t>(j)] * poisson_pmf(ladder.rate(j), count);
  w_normal *= r;

  const double total = w_low + w_high + w_normal;
  if (!(total > 0.0) || !std::isfinite(total))
    throw DegenerateObservation("reduced_filter_step: predictive probability vanished");

  ReducedFilterStep out;
  out.sigma = total;
  out.posterior.q_low = std::clamp(w_low / total, 0.0, 1.0);
  out.posterior.q_high = std::clamp(w_high / total, 0.0, 1.0);
  if (out.posterior.q_low + out.posterior.q_high > 1.0) {
    const double s = out.posterior.q_low + out.posterior.q_high;
    out.posterior.q_low /= s;
    out.posterior.q_high /= s;
  }
  return out;
}

ReducedBelief reduced_update(const ReducedBelief& rb, int count, const RateLadder& ladder,
                             std::span<const double> shared_row, double a_low,
                             double a_high) {
  return reduced_filter_step(rb, count, ladder, shared_row, a_low, a_high).posterior;
}

}  // namespace beliefsum

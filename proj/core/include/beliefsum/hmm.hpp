#pragma once

#include <span>
#include <vector>

#include "beliefsum/errors.hpp"
#include "beliefsum/matrix.hpp"

namespace beliefsum {

// State layout used everywhere in this library, including every serialized
// vector. With N normal states there are N+3 chain states, ordered
//
//   index 0      : A        (post-alarm absorbing state)
//   index 1      : 0        (low abnormal rate)
//   index 1+j    : j        (normal state, j = 1..N)
//   index N+2    : N+1      (high abnormal rate)
//
// "Rate states" 0..N+1 are the states that emit counts; A does not emit.
inline constexpr int kStateA = 0;

constexpr int belief_size(int n_normal) { return n_normal + 3; }
constexpr int low_index() { return 1; }
constexpr int high_index(int n_normal) { return n_normal + 2; }
constexpr int normal_index(int j) { return 1 + j; }  // j in 1..N
// Belief index of rate state s (s in 0..N+1).
constexpr int rate_state_index(int s) { return 1 + s; }

// Ordered Poisson means lambda_0 < lambda_1 < ... < lambda_{N+1}.
// lambda_1..lambda_N are the normal rates; lambda_0 and lambda_{N+1} are the
// abnormal boundary rates the detector watches for.
struct RateLadder {
  std::vector<double> rates;  // size N+2, indexed by rate state 0..N+1
  int normal_count = 0;       // N

  static RateLadder create(std::vector<double> rates);

  double rate(int state) const { return rates[static_cast<std::size_t>(state)]; }
  double max_rate() const { return rates.back(); }
  void validate() const;
};

// The continue-mode transition structure: pbar holds the rows for the normal
// states (N rows, destinations 0..N+1, no mass on A), a_low and a_high are
// the self-transition probabilities of the two abnormal states.
struct TransitionModel {
  Matrix pbar;  // N x (N+2)
  double a_low = 1.0;
  double a_high = 1.0;

  static TransitionModel create(Matrix pbar, double a_low, double a_high);

  int normal_count() const { return static_cast<int>(pbar.rows()); }
  // True when every pbar row is the same; the reduced filter and the solver
  // require this.
  bool has_identical_rows(double tol = 1e-15) const;
  std::span<const double> shared_row() const;  // throws unless rows identical
  void validate() const;
};

// Probability vector over the N+3 states in the fixed order above.
struct Belief {
  std::vector<double> probs;

  static Belief uniform_normal(int n_normal);
  static Belief point_mass(int n_normal, int index);

  int normal_count() const { return static_cast<int>(probs.size()) - 3; }
  double mass_a() const { return probs[kStateA]; }
  double q_low() const { return probs[low_index()]; }
  double q_high() const { return probs.back(); }
  void validate(double tol = 1e-12) const;
};

// The (pi(0), pi(N+1)) marginals, which are a sufficient statistic for the
// filter when all pbar rows are identical.
struct ReducedBelief {
  double q_low = 0.0;
  double q_high = 0.0;

  double sum() const { return q_low + q_high; }
  double normal_mass() const { return 1.0 - q_low - q_high; }
  void validate(double tol = 1e-12) const;
};

// Pois(rate) pmf at `count`, evaluated in log space so large counts do not
// overflow the factorial.
double poisson_pmf(double rate, int count);
double log_poisson_pmf(double rate, int count);

// Stop-mode transition matrix: every row is the unit vector on A.
Matrix build_p1(int n_normal);

// Continue-mode transition matrix over all N+3 states:
//   row A   : absorbing,
//   row 0   : a_low on 0, 1-a_low on N+1,
//   row j   : pbar row j (no mass on A),
//   row N+1 : 1-a_high on 0, a_high on N+1.
Matrix build_p2(const TransitionModel& model, int n_normal);

struct FilterStep {
  Belief posterior;
  double sigma = 0.0;  // predictive probability of the observed count
};

// One Bayes step of the continue-mode filter:
//   posterior ∝ B_y P2^T prior, sigma = 1^T B_y P2^T prior,
// where B_y is the diagonal of per-state Poisson pmfs (zero for A).
// Requires prior mass on A to be exactly zero.
FilterStep filter_step(const Belief& belief, int count, const RateLadder& ladder,
                       const TransitionModel& model);

Belief belief_update(const Belief& belief, int count, const RateLadder& ladder,
                     const TransitionModel& model);

double sigma(const Belief& belief, int count, const RateLadder& ladder,
             const TransitionModel& model);

// Prediction half of the reduced filter (mass after one P2 transition,
// before emission reweighting). Exposed separately because the predicted
// abnormal mass is monotone when a_low = a_high = 1.
ReducedBelief reduced_predict(const ReducedBelief& rb, std::span<const double> shared_row,
                              double a_low, double a_high, int n_normal);

struct ReducedFilterStep {
  ReducedBelief posterior;
  double sigma = 0.0;
};

// Reduced-filter Bayes step. Valid only when all pbar rows equal shared_row;
// the caller asserts that hypothesis (the full filter is the general path).
ReducedFilterStep reduced_filter_step(const ReducedBelief& rb, int count,
                                      const RateLadder& ladder,
                                      std::span<const double> shared_row, double a_low,
                                      double a_high);

ReducedBelief reduced_update(const ReducedBelief& rb, int count, const RateLadder& ladder,
                             std::span<const double> shared_row, double a_low,
                             double a_high);

}  // namespace beliefsum

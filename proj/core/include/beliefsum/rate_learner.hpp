#pragma once

#include <string>
#include <vector>

#include "beliefsum/hmm.hpp"

namespace beliefsum::learn {

struct TrainingSet {
  std::vector<int> counts;
  std::string source_label;
};

struct LearnerConfig {
  int n_normal = 5;
  double boundary_multiplier = 3.0;  // sd multiples for the abnormal boundary rates
  double rate_floor = 1e-3;
};

struct LearnResult {
  RateLadder ladder;
  int requested_n = 0;
  int effective_n = 0;  // < requested_n when clusters collapsed
  int lloyd_iterations = 0;
  std::vector<double> objective_trace;  // within-cluster SSE per Lloyd pass
};

// Fits lambda_1..lambda_N by one-dimensional k-means (deterministic quantile
// initialization, Lloyd iterations to a fixed point). Empty or duplicate
// clusters are merged, shrinking the effective N. The boundary rates come
// from the extreme learned rates and the Poisson sd sqrt(lambda):
//   lambda_0     = max(rate_floor, lambda_1 - m*sqrt(lambda_1))
//   lambda_{N+1} = lambda_N + m*sqrt(lambda_N)
LearnResult learn_ladder(const TrainingSet& data, const LearnerConfig& config);

// Every pbar entry 1/(N+2): the chain wanders the normal states and absorbs
// to either boundary, all with equal probability.
TransitionModel default_transition(int n_normal, double a_low = 1.0, double a_high = 1.0);

// Reference configurations from the field study this library grew out of.
RateLadder example_person_ladder();  // 0.001, 5, 10, 15, 20, 25, 65
RateLadder example_car_ladder();     // 0.00001, 0.001, 55

}  // namespace beliefsum::learn

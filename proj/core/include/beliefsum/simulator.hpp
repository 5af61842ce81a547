#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "beliefsum/detector.hpp"
#include "beliefsum/hmm.hpp"
#include "beliefsum/rng.hpp"

namespace beliefsum::sim {

struct ScenarioConfig {
  RateLadder ladder;
  TransitionModel model;
  std::vector<double> prior;  // over normal states 1..N (size N), sums to 1
  int horizon = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

// One Markov-modulated count path. states[k] is a rate-state index in
// 0..N+1; states[0] is drawn from the prior (normal states only) and each
// later state follows the continue-mode transition row of its predecessor.
// counts[k] ~ Pois(lambda_{states[k]}).
struct SamplePath {
  std::vector<int> states;
  std::vector<int> counts;
  std::optional<int> change_point;  // first k with states[k] in {0, N+1}
};

SamplePath sample_path(const ScenarioConfig& config, std::mt19937_64& rng);
// Trial substream derived from (config.seed, trial_index).
SamplePath sample_path(const ScenarioConfig& config, std::uint64_t trial_index);

struct OperatingPoint {
  double threshold = 0.0;
  double false_alarm_fraction = 0.0;  // fraction of trials with alarm before the change
  double mean_delay = 0.0;            // mean of max(tau - tau_c, 0) over detections
  int detections = 0;
  int false_alarms = 0;
  int censored = 0;  // change occurred but no alarm before the horizon
};

struct EvalReport {
  int trials = 0;
  double mean_detection_delay = 0.0;   // of the first operating point
  double false_alarm_fraction = 0.0;   // of the first operating point
  std::vector<OperatingPoint> points;  // one per threshold, input order
};

// Monte Carlo delay / false-alarm evaluation: for each trial one path is
// sampled and the detector is run in stop_at_alarm mode at every threshold.
// The count emitted by the initial state predates the first transition, so
// the detector consumes counts[1..]; its step clock then matches the path
// index and alarm steps compare directly with change_point.
EvalReport evaluate(const ScenarioConfig& scenario, const detector::DetectorConfig& det,
                    int trials, std::span<const double> thresholds);

}  // namespace beliefsum::sim

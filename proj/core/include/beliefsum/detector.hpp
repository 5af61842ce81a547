#pragma once

#include <optional>
#include <span>
#include <vector>

#include "beliefsum/hmm.hpp"

namespace beliefsum::detector {

// monitor: keep computing the statistic after the first crossing, so whole
// replays can be plotted. stop_at_alarm: stepping past the alarm is a
// contract violation; used for delay/false-alarm evaluation.
enum class RunMode { monitor, stop_at_alarm };

struct DetectorConfig {
  RateLadder ladder;
  TransitionModel model;
  double alpha = 0.5;       // mixing weight on q_low
  double threshold = 0.8;   // alarm when statistic > threshold, strictly
  Belief prior;             // must place no mass on A, 0, N+1
  bool report_sum = false;  // with alpha = 0.5, report q_low + q_high instead
  RunMode mode = RunMode::monitor;

  void validate() const;
};

struct DetectorState {
  Belief belief;
  int step = 0;
  bool alarmed = false;
  std::optional<int> alarm_step;
};

struct StatisticRecord {
  int step = 0;
  int count = 0;
  double statistic = 0.0;
  double q_low = 0.0;
  double q_high = 0.0;
};

// alpha*q_low + (1-alpha)*q_high, or the plain sum when report_sum applies.
double statistic_of(const Belief& belief, const DetectorConfig& config);

DetectorState init(const DetectorConfig& config);

struct StepResult {
  DetectorState state;
  StatisticRecord record;
};

// Advance by one count: belief update, statistic, first-crossing bookkeeping.
StepResult step(const DetectorState& state, int count, const DetectorConfig& config);

struct RunResult {
  std::vector<StatisticRecord> records;
  std::optional<int> alarm_step;
};

// Batch wrapper over step. In monitor mode every count yields a record; in
// stop_at_alarm mode the trajectory ends at the first crossing.
RunResult run(std::span<const int> counts, const DetectorConfig& config);

}  // namespace beliefsum::detector

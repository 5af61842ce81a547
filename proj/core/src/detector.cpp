#include "beliefsum/detector.hpp"

#include <cmath>

namespace beliefsum::detector {

void DetectorConfig::validate() const {
  ladder.validate();
  model.validate();
  const int n = ladder.normal_count;
  if (model.normal_count() != n)
    throw ConfigError("DetectorConfig: ladder and transition model sizes disagree");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("DetectorConfig: alpha must be in [0,1]");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("DetectorConfig: threshold must be in (0,1)");
  if (prior.normal_count() != n)
    throw ConfigError("DetectorConfig: prior size does not match ladder");
  prior.validate();
  if (prior.mass_a() != 0.0 || prior.q_low() != 0.0 || prior.q_high() != 0.0)
    throw ConfigError("DetectorConfig: prior must place no mass on A, 0 or N+1");
}

double statistic_of(const Belief& belief, const DetectorConfig& config) {
  if (config.report_sum && config.alpha == 0.5) return belief.q_low() + belief.q_high();
  return config.alpha * belief.q_low() + (1.0 - config.alpha) * belief.q_high();
}

DetectorState init(const DetectorConfig& config) {
  config.validate();
  DetectorState state;
  state.belief = config.prior;
  state.step = 0;
  state.alarmed = false;
  return state;
}

StepResult step(const DetectorState& state, int count, const DetectorConfig& config) {
  if (state.alarmed && config.mode == RunMode::stop_at_alarm)
    throw UsageError("detector::step: detector already alarmed; re-initialize it");

  StepResult out;
  out.state = state;
  out.state.belief = belief_update(state.belief, count, config.ladder, config.model);
  out.state.step = state.step + 1;

  const double stat = statistic_of(out.state.belief, config);
  if (!state.alarmed && stat > config.threshold) {
    out.state.alarmed = true;
    out.state.alarm_step = out.state.step;
  }

  out.record.step = out.state.step;
  out.record.count = count;
  out.record.statistic = stat;
  out.record.q_low = out.state.belief.q_low();
  out.record.q_high = out.state.belief.q_high();
  return out;
}

RunResult run(std::span<const int> counts, const DetectorConfig& config) {
  if (counts.empty()) throw UsageError("detector::run: empty count sequence");
  DetectorState state = init(config);
  RunResult result;
  result.records.reserve(counts.size());
  for (int count : counts) {
    StepResult s = step(state, count, config);
    state = std::move(s.state);
    result.records.push_back(s.record);
    if (state.alarmed && !result.alarm_step) result.alarm_step = state.alarm_step;
    if (state.alarmed && config.mode == RunMode::stop_at_alarm) break;
  }
  return result;
}

}  // namespace beliefsum::detector

#include "beliefsum/simulator.hpp"

#include <cmath>

namespace beliefsum::sim {

void ScenarioConfig::validate() const {
  ladder.validate();
  model.validate();
  const int n = ladder.normal_count;
  if (model.normal_count() != n)
    throw ConfigError("ScenarioConfig: ladder and transition model sizes disagree");
  if (prior.size() != static_cast<std::size_t>(n))
    throw ConfigError("ScenarioConfig: prior must have one weight per normal state");
  double total = 0.0;
  for (double p : prior) {
    if (p < 0.0) throw ConfigError("ScenarioConfig: negative prior weight");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("ScenarioConfig: prior must sum to 1");
  if (horizon < 1) throw ConfigError("ScenarioConfig: horizon must be >= 1");
}

namespace {

// Next rate state under the continue-mode transition structure.
int transition(int state, const ScenarioConfig& config, std::mt19937_64& rng) {
  const int n = config.ladder.normal_count;
  if (state == 0) {
    return uniform_unit(rng) < config.model.a_low ? 0 : n + 1;
  }
  if (state == n + 1) {
    return uniform_unit(rng) < config.model.a_high ? n + 1 : 0;
  }
  const auto row = config.model.pbar.row(static_cast<std::size_t>(state - 1));
  double u = uniform_unit(rng);
  for (int dest = 0; dest <= n + 1; ++dest) {
    u -= row[static_cast<std::size_t>(dest)];
    if (u < 0.0) return dest;
  }
  return n + 1;
}

}  // namespace

SamplePath sample_path(const ScenarioConfig& config, std::mt19937_64& rng) {
  config.validate();
  const int n = config.ladder.normal_count;
  SamplePath path;
  path.states.reserve(static_cast<std::size_t>(config.horizon));
  path.counts.reserve(static_cast<std::size_t>(config.horizon));

  int state = static_cast<int>(sample_discrete(rng, config.prior)) + 1;
  for (int k = 0; k < config.horizon; ++k) {
    if (k > 0) state = transition(state, config, rng);
    path.states.push_back(state);
    path.counts.push_back(sample_poisson(rng, config.ladder.rate(state)));
    if (!path.change_point && (state == 0 || state == n + 1)) path.change_point = k;
  }
  return path;
}

SamplePath sample_path(const ScenarioConfig& config, std::uint64_t trial_index) {
  std::mt19937_64 rng = make_stream(config.seed, trial_index);
  return sample_path(config, rng);
}

EvalReport evaluate(const ScenarioConfig& scenario, const detector::DetectorConfig& det,
                    int trials, std::span<const double> thresholds) {
  scenario.validate();
  if (trials < 1) throw UsageError("evaluate: trials must be >= 1");
  if (thresholds.empty()) throw UsageError("evaluate: need at least one threshold");

  detector::DetectorConfig config = det;
  config.mode = detector::RunMode::stop_at_alarm;

  EvalReport report;
  report.trials = trials;
  report.points.resize(thresholds.size());
  std::vector<double> delay_sum(thresholds.size(), 0.0);

  for (int t = 0; t < trials; ++t) {
    const SamplePath path = sample_path(scenario, static_cast<std::uint64_t>(t));
    const std::span<const int> observed(path.counts.data() + 1, path.counts.size() - 1);
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      config.threshold = thresholds[i];
      const detector::RunResult res = detector::run(observed, config);
      // Detector step j consumed counts[j], so alarm steps share the path clock.
      const std::optional<int> tau = res.alarm_step;
      const std::optional<int>& tau_c = path.change_point;
      OperatingPoint& point = report.points[i];
      point.threshold = thresholds[i];
      if (tau && (!tau_c || *tau < *tau_c)) {
        ++point.false_alarms;
      } else if (tau && tau_c) {
        ++point.detections;
        delay_sum[i] += static_cast<double>(*tau - *tau_c);
      } else if (!tau && tau_c) {
        ++point.censored;
      }
      // no change and no alarm: a clean trial, nothing to record
    }
  }

  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    OperatingPoint& point = report.points[i];
    point.false_alarm_fraction = static_cast<double>(point.false_alarms) / trials;
    point.mean_delay = point.detections > 0 ? delay_sum[i] / point.detections : 0.0;
  }
  report.false_alarm_fraction = report.points.front().false_alarm_fraction;
  report.mean_detection_delay = report.points.front().mean_delay;
  return report;
}

}  // namespace beliefsum::sim

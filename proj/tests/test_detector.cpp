#include <doctest.h>

#include <cmath>
#include <vector>

#include "beliefsum/detector.hpp"
#include "beliefsum/rate_learner.hpp"
#include "beliefsum/simulator.hpp"
#include "support/oracles.hpp"

using namespace beliefsum;
using detector::DetectorConfig;
using detector::DetectorState;
using detector::RunMode;

namespace {

DetectorConfig small_config(double alpha = 0.5, double threshold = 0.8,
                            bool report_sum = true) {
  DetectorConfig config;
  config.ladder = RateLadder::create({0.5, 2.0, 8.0});
  config.model = TransitionModel::create(Matrix::from_rows({{0.1, 0.8, 0.1}}), 1.0, 1.0);
  config.alpha = alpha;
  config.threshold = threshold;
  config.report_sum = report_sum;
  config.prior = Belief::uniform_normal(1);
  return config;
}

DetectorConfig person_config() {
  DetectorConfig config;
  config.ladder = learn::example_person_ladder();
  config.model = learn::default_transition(5, 1.0, 1.0);
  config.alpha = 0.5;
  config.threshold = 0.8;
  config.report_sum = true;
  config.prior = Belief::uniform_normal(5);
  return config;
}

}  // namespace

TEST_CASE("init starts from the prior with no alarm") {
  DetectorConfig config = person_config();
  const DetectorState state = detector::init(config);
  CHECK(state.step == 0);
  CHECK_FALSE(state.alarmed);
  CHECK_FALSE(state.alarm_step.has_value());
  for (int j = 1; j <= 5; ++j)
    CHECK(state.belief.probs[static_cast<std::size_t>(normal_index(j))] ==
          doctest::Approx(0.2).epsilon(1e-15));
  CHECK(detector::statistic_of(state.belief, config) == 0.0);

  config.report_sum = true;
  config.alpha = 0.5;
  CHECK(detector::statistic_of(detector::init(config).belief, config) == 0.0);
}

TEST_CASE("init rejects priors with mass on the absorbing states") {
  DetectorConfig config = small_config();
  config.prior.probs = {0.0, 0.1, 0.9, 0.0};
  CHECK_THROWS_AS(detector::init(config), ConfigError);
  config.prior.probs = {0.1, 0.0, 0.9, 0.0};
  CHECK_THROWS_AS(detector::init(config), ConfigError);
  config.prior.probs = {0.0, 0.0, 0.9, 0.1};
  CHECK_THROWS_AS(detector::init(config), ConfigError);
}

TEST_CASE("config validation catches bad alpha and threshold") {
  DetectorConfig config = small_config();
  config.alpha = 1.5;
  CHECK_THROWS_AS(detector::init(config), ConfigError);
  config = small_config();
  config.threshold = 1.0;
  CHECK_THROWS_AS(detector::init(config), ConfigError);
  config = small_config();
  config.threshold = 0.0;
  CHECK_THROWS_AS(detector::init(config), ConfigError);
}

TEST_CASE("a point mass on the high state alarms immediately when alpha is zero") {
  DetectorConfig config = small_config(/*alpha=*/0.0, /*threshold=*/0.99,
                                       /*report_sum=*/false);
  DetectorState state = detector::init(config);
  state.belief = Belief::point_mass(1, high_index(1));  // absorbing under a_high = 1
  const auto result = detector::step(state, 3, config);
  CHECK(result.record.statistic == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.state.alarmed);
  CHECK(result.state.alarm_step == 1);
}

TEST_CASE("alpha zero is blind to the low state") {
  DetectorConfig config = small_config(/*alpha=*/0.0, /*threshold=*/0.5,
                                       /*report_sum=*/false);
  DetectorState state = detector::init(config);
  state.belief = Belief::point_mass(1, low_index());
  for (int k = 0; k < 5; ++k) {
    const auto result = detector::step(state, 0, config);
    state = result.state;
    CHECK(result.record.statistic == 0.0);
    CHECK_FALSE(state.alarmed);
  }
}

TEST_CASE("alpha extremes weight exactly one abnormal state") {
  DetectorConfig config = small_config(/*alpha=*/1.0, /*threshold=*/0.5, false);
  Belief high = Belief::point_mass(1, high_index(1));
  CHECK(detector::statistic_of(high, config) == 0.0);  // blind to N+1
  Belief low = Belief::point_mass(1, low_index());
  CHECK(detector::statistic_of(low, config) == 1.0);
  config.alpha = 0.0;
  CHECK(detector::statistic_of(high, config) == 1.0);
  CHECK(detector::statistic_of(low, config) == 0.0);  // blind to 0
}

TEST_CASE("statistic trajectory and alarm step match the scripted dense filter") {
  DetectorConfig config = small_config(/*alpha=*/0.5, /*threshold=*/0.8,
                                       /*report_sum=*/true);
  const std::vector<int> counts = {2, 2, 9, 12, 11};

  // scripted oracle: dense filter, statistic = q_low + q_high
  std::vector<double> expected;
  oracle::Vec belief = {0.0, 0.0, 1.0, 0.0};
  for (int count : counts) {
    belief = oracle::dense_filter_step(belief, count, config.ladder, config.model).posterior;
    expected.push_back(belief[1] + belief[3]);
  }
  int expected_alarm = -1;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    if (expected[k] > config.threshold) {
      expected_alarm = static_cast<int>(k) + 1;
      break;
    }
  }
  REQUIRE(expected_alarm > 0);  // the script must cross for this test to bite

  const auto result = detector::run(counts, config);
  REQUIRE(result.records.size() == counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    CHECK(result.records[k].statistic == doctest::Approx(expected[k]).epsilon(1e-12));
    CHECK(result.records[k].step == static_cast<int>(k) + 1);
    CHECK(result.records[k].count == counts[k]);
  }
  CHECK(result.alarm_step == expected_alarm);
}

TEST_CASE("a stream of zeros pushes the statistic toward one") {
  DetectorConfig config = person_config();
  const std::vector<int> zeros(50, 0);
  const auto result = detector::run(zeros, config);
  REQUIRE(result.records.size() == 50);
  CHECK(result.alarm_step.has_value());
  CHECK(result.records.back().statistic > 0.99);
  CHECK(result.records.back().q_low > 0.99);  // the mass flows to the low state
}

TEST_CASE("constant mid-ladder counts settle the statistic at a fixed point") {
  DetectorConfig config = person_config();
  const std::vector<int> constant(300, 15);  // sits on lambda_3
  const auto result = detector::run(constant, config);
  const auto& records = result.records;
  // converges: late steps barely move
  for (std::size_t k = 250; k < records.size(); ++k)
    CHECK(std::abs(records[k].statistic - records[k - 1].statistic) < 1e-9);
  // and the fixed point is unremarkable: constant typical counts are not a change
  CHECK(records.back().statistic < 0.5);
  CHECK_FALSE(result.alarm_step.has_value());
}

TEST_CASE("on model-generated paths the alarm comes almost surely") {
  // absorption is inevitable under the uniform transition rows, and both
  // boundary rates are extreme enough that the statistic then pins near one
  DetectorConfig config = person_config();
  config.mode = RunMode::stop_at_alarm;
  sim::ScenarioConfig scenario;
  scenario.ladder = config.ladder;
  scenario.model = config.model;
  scenario.prior.assign(5, 0.2);
  scenario.horizon = 500;
  scenario.seed = 99;
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    const auto path = sim::sample_path(scenario, trial);
    const std::span<const int> observed(path.counts.data() + 1, path.counts.size() - 1);
    const auto result = detector::run(observed, config);
    CHECK(result.alarm_step.has_value());
  }
}

TEST_CASE("single count gives a single record") {
  const auto result = detector::run(std::vector<int>{3}, small_config());
  CHECK(result.records.size() == 1);
}

TEST_CASE("empty input is a usage error") {
  CHECK_THROWS_AS(detector::run(std::vector<int>{}, small_config()), UsageError);
}

TEST_CASE("run equals folding step over the counts") {
  DetectorConfig config = small_config();
  std::mt19937_64 rng = make_stream(21, 0);
  std::vector<int> counts;
  for (int k = 0; k < 60; ++k) counts.push_back(oracle::random_count(rng, 12));

  const auto batch = detector::run(counts, config);
  DetectorState state = detector::init(config);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const auto result = detector::step(state, counts[k], config);
    state = result.state;
    CHECK(result.record.step == batch.records[k].step);
    CHECK(result.record.count == batch.records[k].count);
    CHECK(result.record.statistic == batch.records[k].statistic);
    CHECK(result.record.q_low == batch.records[k].q_low);
    CHECK(result.record.q_high == batch.records[k].q_high);
  }
  CHECK(state.alarm_step == batch.alarm_step);
}

TEST_CASE("alarm is recorded at the first crossing and only there") {
  DetectorConfig config = small_config(/*alpha=*/0.5, /*threshold=*/0.6, true);
  std::mt19937_64 rng = make_stream(22, 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> counts;
    for (int k = 0; k < 80; ++k) counts.push_back(oracle::random_count(rng, 14));
    const auto result = detector::run(counts, config);
    for (const auto& record : result.records) {
      CHECK(record.statistic >= 0.0);
      CHECK(record.statistic <= 1.0);
      // report_sum with alpha = 0.5: the record carries the plain sum
      CHECK(record.statistic == record.q_low + record.q_high);
    }
    if (result.alarm_step) {
      for (const auto& record : result.records) {
        if (record.step < *result.alarm_step) CHECK(record.statistic <= config.threshold);
        if (record.step == *result.alarm_step) CHECK(record.statistic > config.threshold);
      }
    } else {
      for (const auto& record : result.records) CHECK(record.statistic <= config.threshold);
    }
  }
}

TEST_CASE("raising the threshold never makes the alarm earlier") {
  std::mt19937_64 rng = make_stream(23, 0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> counts;
    for (int k = 0; k < 100; ++k) counts.push_back(oracle::random_count(rng, 14));
    long last_alarm = -1;
    for (double threshold : {0.2, 0.4, 0.6, 0.8, 0.95}) {
      DetectorConfig config = small_config(0.5, threshold, true);
      const auto result = detector::run(counts, config);
      const long alarm = result.alarm_step ? *result.alarm_step
                                           : std::numeric_limits<long>::max();
      if (last_alarm >= 0) CHECK(alarm >= last_alarm);
      last_alarm = alarm;
    }
  }
}

TEST_CASE("stepping an alarmed detector is a contract violation in stop mode") {
  DetectorConfig config = small_config(/*alpha=*/0.0, /*threshold=*/0.9, false);
  config.mode = RunMode::stop_at_alarm;
  DetectorState state = detector::init(config);
  state.belief = Belief::point_mass(1, high_index(1));
  const auto result = detector::step(state, 3, config);
  REQUIRE(result.state.alarmed);
  CHECK_THROWS_AS(detector::step(result.state, 3, config), UsageError);

  // monitor mode keeps going and does not re-arm
  config.mode = RunMode::monitor;
  const auto after = detector::step(result.state, 3, config);
  CHECK(after.state.alarmed);
  CHECK(after.state.alarm_step == result.state.alarm_step);
}

TEST_CASE("stop mode truncates the trajectory at the alarm") {
  DetectorConfig monitor = person_config();
  DetectorConfig stopping = person_config();
  stopping.mode = RunMode::stop_at_alarm;
  const std::vector<int> zeros(50, 0);
  const auto full = detector::run(zeros, monitor);
  const auto cut = detector::run(zeros, stopping);
  REQUIRE(full.alarm_step.has_value());
  CHECK(full.records.size() == zeros.size());
  CHECK(cut.alarm_step == full.alarm_step);
  CHECK(static_cast<int>(cut.records.size()) == *cut.alarm_step);
}

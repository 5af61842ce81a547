#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "beliefsum/model_config.hpp"
#include "beliefsum/rate_learner.hpp"
#include "beliefsum/rng.hpp"

// End-to-end runs of the installed command-line surface against synthetic
// fixtures. BELIEFSUM_CLI_PATH is injected by the build.

namespace fs = std::filesystem;
using namespace beliefsum;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "beliefsum_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run_cli(const std::string& args) {
  const fs::path out_file = work_dir() / "cli_stdout.txt";
  const std::string command =
      std::string(BELIEFSUM_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
  CliResult result;
  const int raw = std::system(command.c_str());
  result.exit_code = raw == -1 ? -1 : WEXITSTATUS(raw);
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  result.out = ss.str();
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_stream_csv(const fs::path& path, const std::vector<int>& counts) {
  std::ofstream out(path);
  out << "timestamp,count\n";
  for (std::size_t k = 0; k < counts.size(); ++k) out << k << ',' << counts[k] << '\n';
}

// A day of counts whose hidden state wanders the given normal rates, with an
// optional window forced to the boosted rate.
std::vector<int> synth_day(std::uint64_t seed, int slots, const std::vector<double>& rates,
                           int event_begin = -1, int event_end = -1,
                           double event_rate = 65.0) {
  std::mt19937_64 rng = make_stream(seed, 0);
  std::vector<int> counts;
  counts.reserve(static_cast<std::size_t>(slots));
  for (int k = 0; k < slots; ++k) {
    const bool in_event = k >= event_begin && k < event_end;
    const double rate =
        in_event ? event_rate
                 : rates[static_cast<std::size_t>(uniform_unit(rng) * rates.size()) % rates.size()];
    counts.push_back(sample_poisson(rng, rate));
  }
  return counts;
}

fs::path shipped_person_config() {
  const fs::path path = work_dir() / "person_model.json";
  io::ModelConfig config;
  config.ladder = learn::example_person_ladder();
  config.model = learn::default_transition(5, 1.0, 1.0);
  config.alpha = 0.5;
  config.threshold = 0.8;
  config.report_sum = true;
  io::save_model_config(path, config);
  return path;
}

// First step opening a run of `sustain` consecutive statistics above the
// threshold. Single-slot spikes happen on quiet stretches (one unusually low
// count is enough); a sustained run marks the event.
int first_sustained_crossing(const fs::path& csv, double threshold, int sustain) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  int run = 0;
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string step, count, stat;
    std::getline(row, step, ',');
    std::getline(row, count, ',');
    std::getline(row, stat, ',');
    run = std::stod(stat) > threshold ? run + 1 : 0;
    if (run == sustain) return std::stoi(step) - sustain + 1;
  }
  return -1;
}

}  // namespace

TEST_CASE("learn then detect finds the injected event") {
  // training day wanders the mid rates; event day carries a boosted window
  const std::vector<double> normal_rates = {10.0, 15.0, 20.0};
  const fs::path train_csv = work_dir() / "train_day.csv";
  write_stream_csv(train_csv, synth_day(1001, 2500, normal_rates));
  const fs::path event_csv = work_dir() / "event_day.csv";
  write_stream_csv(event_csv, synth_day(1002, 1200, normal_rates, 500, 900));

  const fs::path model_json = work_dir() / "learned_model.json";
  const CliResult learn = run_cli("learn --input " + train_csv.string() + " --output " +
                                  model_json.string() +
                                  " --n 3 --alpha 0.5 --threshold 0.8 --report-sum");
  CHECK(learn.exit_code == 0);
  REQUIRE(fs::exists(model_json));

  const io::ModelConfig config = io::load_model_config(model_json);
  CHECK(config.ladder.normal_count >= 1);
  CHECK(config.provenance.has_value());
  CHECK(config.provenance->source_label == train_csv.string());

  const fs::path traj_csv = work_dir() / "event_trajectory.csv";
  const CliResult detect = run_cli("detect --config " + model_json.string() + " --input " +
                                   event_csv.string() + " --output " + traj_csv.string());
  CHECK(detect.exit_code == 0);
  CHECK(detect.out.find("stream: event_day") != std::string::npos);
  CHECK(detect.out.find("alarm_step: none") == std::string::npos);

  const int onset = first_sustained_crossing(traj_csv, 0.8, 5);
  REQUIRE(onset > 0);
  CHECK(onset >= 500);
  CHECK(onset <= 525);
}

TEST_CASE("detect on a zero stream drives the statistic to one") {
  const fs::path config = shipped_person_config();
  const fs::path zeros_csv = work_dir() / "zeros.csv";
  write_stream_csv(zeros_csv, std::vector<int>(60, 0));
  const fs::path traj = work_dir() / "zeros_trajectory.csv";
  const CliResult result = run_cli("detect --config " + config.string() + " --input " +
                                   zeros_csv.string() + " --output " + traj.string());
  CHECK(result.exit_code == 0);

  // last trajectory row: statistic close to one, mass on the low state
  std::ifstream in(traj);
  std::string line, last;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
    ++rows;
  }
  CHECK(rows == 60);  // monitor mode: one row per binned input
  std::stringstream row(last);
  std::string step, count, stat, q_low;
  std::getline(row, step, ',');
  std::getline(row, count, ',');
  std::getline(row, stat, ',');
  std::getline(row, q_low, ',');
  CHECK(std::stod(stat) > 0.99);
  CHECK(std::stod(q_low) > 0.99);

  // stop mode ends the trajectory at the alarm
  const fs::path cut = work_dir() / "zeros_stop_trajectory.csv";
  const CliResult stop_run = run_cli("detect --config " + config.string() + " --input " +
                                     zeros_csv.string() + " --output " + cut.string() +
                                     " --mode stop");
  CHECK(stop_run.exit_code == 0);
  std::ifstream cut_in(cut);
  int cut_rows = -1;  // discount the header
  for (std::string l; std::getline(cut_in, l);) ++cut_rows;
  const std::size_t pos = stop_run.out.find("alarm_step: ");
  REQUIRE(pos != std::string::npos);
  CHECK(cut_rows == std::stoi(stop_run.out.substr(pos + 12)));
  CHECK(cut_rows < 60);
}

TEST_CASE("detect over a directory writes one trajectory per stream") {
  const fs::path config = shipped_person_config();
  const fs::path stream_dir = work_dir() / "streams";
  fs::create_directories(stream_dir);
  write_stream_csv(stream_dir / "cam_a.csv", synth_day(2001, 300, {10.0, 15.0}));
  write_stream_csv(stream_dir / "cam_b.csv", synth_day(2002, 300, {10.0, 15.0}, 100, 300));
  const fs::path out_dir = work_dir() / "stream_out";

  const CliResult result = run_cli("detect --config " + config.string() + " --input " +
                                   stream_dir.string() + " --output " + out_dir.string());
  CHECK(result.exit_code == 0);
  CHECK(fs::exists(out_dir / "cam_a_trajectory.csv"));
  CHECK(fs::exists(out_dir / "cam_b_trajectory.csv"));
  const std::string summary = slurp(out_dir / "summary.txt");
  CHECK(summary.find("stream: cam_a") != std::string::npos);
  CHECK(summary.find("stream: cam_b") != std::string::npos);
  // the boosted stream alarms, the quiet one does not
  const std::size_t b_pos = summary.find("stream: cam_b");
  CHECK(summary.substr(0, b_pos).find("alarm_step: none") != std::string::npos);
  CHECK(summary.substr(b_pos).find("alarm_step: none") == std::string::npos);
}

TEST_CASE("simulate is reproducible for a fixed seed") {
  const fs::path config = shipped_person_config();
  const fs::path path_a = work_dir() / "path_a.csv";
  const fs::path path_b = work_dir() / "path_b.csv";
  const CliResult a = run_cli("simulate --config " + config.string() + " --output " +
                              path_a.string() + " --seed 7 --horizon 200");
  const CliResult b = run_cli("simulate --config " + config.string() + " --output " +
                              path_b.string() + " --seed 7 --horizon 200");
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(slurp(path_a) == slurp(path_b));
  CHECK(a.out == b.out);
  CHECK(a.out.find("change_point: ") != std::string::npos);

  const fs::path path_c = work_dir() / "path_c.csv";
  const CliResult c = run_cli("simulate --config " + config.string() + " --output " +
                              path_c.string() + " --seed 8 --horizon 200");
  CHECK(c.exit_code == 0);
  CHECK(slurp(path_a) != slurp(path_c));
}

TEST_CASE("solve with free stopping reports a stop-everywhere policy") {
  const fs::path config = shipped_person_config();
  const fs::path report_file = work_dir() / "solve_report.txt";
  const fs::path policy_csv = work_dir() / "policy.csv";
  const CliResult result =
      run_cli("solve --config " + config.string() + " --output " + report_file.string() +
              " --policy-csv " + policy_csv.string() + " --grid 10 --cf 0");
  CHECK(result.exit_code == 0);
  const std::string report = slurp(report_file);
  CHECK(report.find("grid_points: 66") != std::string::npos);
  CHECK(report.find("stop_points: 66") != std::string::npos);
  CHECK(report.find("stop_region_convex: true") != std::string::npos);
  const std::string policy = slurp(policy_csv);
  CHECK(policy.rfind("q_low,q_high,V,action", 0) == 0);
  CHECK(policy.find("continue") == std::string::npos);
}

TEST_CASE("eval writes operating points and is reproducible") {
  const fs::path config = shipped_person_config();
  const fs::path eval_a = work_dir() / "eval_a.csv";
  const fs::path eval_b = work_dir() / "eval_b.csv";
  const std::string args = " --seed 11 --trials 80 --horizon 60 --threshold 0.5 --threshold 0.8";
  const CliResult a =
      run_cli("eval --config " + config.string() + " --output " + eval_a.string() + args);
  const CliResult b =
      run_cli("eval --config " + config.string() + " --output " + eval_b.string() + args);
  CHECK(a.exit_code == 0);
  CHECK(slurp(eval_a) == slurp(eval_b));
  CHECK(slurp(eval_a).rfind("threshold,false_alarm_fraction,mean_delay,censored_count\n", 0) ==
        0);
  CHECK(a.out.find("trials: 80") != std::string::npos);
}

TEST_CASE("a learned model round-trips byte for byte") {
  const fs::path train_csv = work_dir() / "roundtrip_train.csv";
  write_stream_csv(train_csv, synth_day(3001, 800, {5.0, 20.0}));
  const fs::path model_json = work_dir() / "roundtrip_model.json";
  const CliResult learn = run_cli("learn --input " + train_csv.string() + " --output " +
                                  model_json.string() + " --n 2");
  REQUIRE(learn.exit_code == 0);
  const io::ModelConfig config = io::load_model_config(model_json);
  CHECK(io::serialize_model_config(config) == slurp(model_json));
}

TEST_CASE("bad inputs exit nonzero with a diagnostic") {
  const fs::path config = shipped_person_config();
  const CliResult missing = run_cli("detect --config " + config.string() +
                                    " --input /nonexistent.csv --output /tmp/x.csv");
  CHECK(missing.exit_code != 0);
  CHECK(missing.out.find("error") != std::string::npos);

  const fs::path bad_csv = work_dir() / "bad.csv";
  {
    std::ofstream out(bad_csv);
    out << "timestamp,count\n5,3\n4,2\n";  // decreasing timestamps
  }
  const fs::path traj = work_dir() / "bad_traj.csv";
  const CliResult decreasing = run_cli("detect --config " + config.string() + " --input " +
                                       bad_csv.string() + " --output " + traj.string());
  CHECK(decreasing.exit_code == 2);
  CHECK(decreasing.out.find("line") != std::string::npos);

  const CliResult no_sub = run_cli("");
  CHECK(no_sub.exit_code != 0);
}

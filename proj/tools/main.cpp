// beliefsum: rate-change detection in Poisson count streams.
//
// Subcommands: learn, detect, simulate, solve, eval. See README.md for the
// file formats; every random quantity is controlled by --seed.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "beliefsum/detector.hpp"
#include "beliefsum/model_config.hpp"
#include "beliefsum/rate_learner.hpp"
#include "beliefsum/simulator.hpp"
#include "beliefsum/solver.hpp"
#include "beliefsum/stream_io.hpp"

namespace fs = std::filesystem;
using namespace beliefsum;

namespace {

struct BinFlags {
  int width = 0;  // 0 = take the config's binning (or passthrough for learn)
  std::string unit = "seconds";

  std::optional<io::Binning> resolve() const {
    if (width <= 0) return std::nullopt;
    io::Binning binning;
    binning.width = width;
    if (unit == "rows") {
      binning.unit = io::Binning::Unit::rows;
    } else if (unit == "seconds") {
      binning.unit = io::Binning::Unit::seconds;
    } else {
      throw UsageError("--bin-unit must be rows or seconds");
    }
    return binning;
  }
};

void add_bin_flags(CLI::App* cmd, BinFlags& flags) {
  cmd->add_option("--bin-width", flags.width, "Aggregate counts into bins of this width");
  cmd->add_option("--bin-unit", flags.unit, "Bin width unit: seconds or rows")
      ->check(CLI::IsMember({"seconds", "rows"}));
}

detector::RunMode parse_mode(const std::string& mode) {
  if (mode == "monitor") return detector::RunMode::monitor;
  if (mode == "stop") return detector::RunMode::stop_at_alarm;
  throw UsageError("--mode must be monitor or stop");
}

int run_learn(const std::string& input, const std::string& output, int n_normal,
              double boundary_multiplier, double rate_floor, const BinFlags& bin_flags,
              double a_low, double a_high, double alpha, double threshold, bool report_sum) {
  const io::Binning binning = bin_flags.resolve().value_or(io::Binning{});
  const io::CountSeries series = io::ingest(input, binning);
  if (series.counts.empty()) throw UsageError("learn: no complete bins in " + input);

  learn::TrainingSet data;
  data.counts = series.counts;
  data.source_label = input;
  const learn::LearnResult result =
      learn::learn_ladder(data, learn::LearnerConfig{n_normal, boundary_multiplier, rate_floor});
  if (result.effective_n < result.requested_n)
    std::cerr << "warning: clusters collapsed, effective n_normal = " << result.effective_n
              << " (requested " << result.requested_n << ")\n";

  io::ModelConfig config;
  config.ladder = result.ladder;
  config.model = learn::default_transition(result.effective_n, a_low, a_high);
  config.alpha = alpha;
  config.threshold = threshold;
  config.report_sum = report_sum;
  config.binning = binning;
  config.provenance =
      io::LearnProvenance{data.source_label, io::fnv1a_hash(data.counts), result.requested_n,
                          result.effective_n, boundary_multiplier, rate_floor};
  io::save_model_config(output, config);

  std::cout << "learned rates:";
  for (double r : config.ladder.rates) std::cout << ' ' << r;
  std::cout << "\nmodel written to " << output << "\n";
  return 0;
}

struct DetectJob {
  fs::path input;
  fs::path output;
  std::string stream_id;
};

std::string detect_one(const DetectJob& job, const io::ModelConfig& config,
                       detector::RunMode mode, const io::Binning& binning) {
  const io::CountSeries series = io::ingest(job.input, binning);
  if (series.counts.empty()) throw UsageError("detect: no complete bins in " + job.input.string());
  const detector::DetectorConfig det = config.to_detector_config(mode);
  const detector::RunResult result = detector::run(series.counts, det);

  std::ofstream out(job.output);
  if (!out) throw UsageError("cannot write trajectory: " + job.output.string());
  io::write_trajectory_csv(out, result.records);
  return io::format_alarm_report(job.stream_id, result.alarm_step, det.threshold, det.alpha);
}

int run_detect(const std::string& input, const std::string& output,
               const std::string& config_path, const std::string& mode_name,
               const BinFlags& bin_flags, std::optional<double> threshold,
               std::optional<double> alpha) {
  io::ModelConfig config = io::load_model_config(config_path);
  if (threshold) config.threshold = *threshold;
  if (alpha) config.alpha = *alpha;
  const detector::RunMode mode = parse_mode(mode_name);
  const io::Binning binning = bin_flags.resolve().value_or(config.binning);

  if (!fs::is_directory(input)) {
    const DetectJob job{input, output, fs::path(input).stem().string()};
    const std::string report = detect_one(job, config, mode, binning);
    std::cout << report;
    return 0;
  }

  // Directory mode: one trajectory per stream file, plus a combined summary.
  fs::create_directories(output);
  std::vector<DetectJob> jobs;
  for (const auto& entry : fs::directory_iterator(input)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const std::string stem = entry.path().stem().string();
    jobs.push_back({entry.path(), fs::path(output) / (stem + "_trajectory.csv"), stem});
  }
  std::sort(jobs.begin(), jobs.end(),
            [](const DetectJob& a, const DetectJob& b) { return a.input < b.input; });
  if (jobs.empty()) throw UsageError("detect: no .csv stream files in " + input);

  std::vector<std::string> reports(jobs.size());
  std::vector<std::string> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < jobs.size(); k = next.fetch_add(1)) {
      try {
        reports[k] = detect_one(jobs[k], config, mode, binning);
      } catch (const std::exception& e) {
        failures[k] = e.what();
      }
    }
  };
  const unsigned n_workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                         static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::ofstream summary(fs::path(output) / "summary.txt");
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (!failures[k].empty()) throw UsageError(jobs[k].input.string() + ": " + failures[k]);
    summary << reports[k] << "\n";
    std::cout << reports[k] << "\n";
  }
  return 0;
}

int run_simulate(const std::string& config_path, const std::string& output,
                 std::uint64_t seed, int horizon, std::uint64_t trial) {
  const io::ModelConfig config = io::load_model_config(config_path);
  const sim::ScenarioConfig scenario = config.to_scenario_config(horizon, seed);
  const sim::SamplePath path = sim::sample_path(scenario, trial);

  std::ofstream out(output);
  if (!out) throw UsageError("cannot write path: " + output);
  io::write_path_csv(out, path);
  std::cout << "change_point: "
            << (path.change_point ? std::to_string(*path.change_point) : std::string("none"))
            << "\n";
  return 0;
}

int run_solve(const std::string& config_path, const std::string& output,
              const std::string& policy_csv, int grid_resolution, double tol, int max_iter,
              double c_f, double c_d) {
  const io::ModelConfig config = io::load_model_config(config_path);
  const solver::SimplexGrid grid(grid_resolution);
  const solver::CostModel cost{c_f, c_d};
  cost.validate(/*allow_zero=*/true);
  const solver::Solution solution =
      solver::value_iterate(grid, cost, config.ladder, config.model, tol, max_iter);
  const std::string report =
      solver::format_report(solution, grid, cost, config.ladder, config.model);

  std::ofstream out(output);
  if (!out) throw UsageError("cannot write report: " + output);
  out << report;
  std::cout << report;
  if (!solution.value.converged)
    std::cerr << "warning: value iteration did not converge within " << max_iter
              << " iterations\n";

  if (!policy_csv.empty()) {
    std::ofstream csv(policy_csv);
    if (!csv) throw UsageError("cannot write policy csv: " + policy_csv);
    solver::write_policy_csv(csv, solution, grid);
  }
  return 0;
}

int run_eval(const std::string& config_path, const std::string& output, std::uint64_t seed,
             int trials, std::vector<double> thresholds, int horizon) {
  const io::ModelConfig config = io::load_model_config(config_path);
  if (thresholds.empty()) thresholds.push_back(config.threshold);
  const sim::ScenarioConfig scenario = config.to_scenario_config(horizon, seed);
  const detector::DetectorConfig det =
      config.to_detector_config(detector::RunMode::stop_at_alarm);
  const sim::EvalReport report = sim::evaluate(scenario, det, trials, thresholds);

  std::ofstream out(output);
  if (!out) throw UsageError("cannot write eval csv: " + output);
  io::write_eval_csv(out, report);
  std::cout << io::format_eval_summary(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-sum rate-change detection for Poisson count streams"};
  app.require_subcommand(1);

  // learn
  std::string learn_input, learn_output;
  int learn_n = 5;
  double learn_multiplier = 3.0, learn_floor = 1e-3;
  double learn_a_low = 1.0, learn_a_high = 1.0, learn_alpha = 0.5, learn_threshold = 0.8;
  bool learn_report_sum = false;
  BinFlags learn_bins;
  CLI::App* learn_cmd = app.add_subcommand("learn", "Fit a rate ladder from a count stream");
  learn_cmd->add_option("--input", learn_input, "Training stream CSV")->required();
  learn_cmd->add_option("--output", learn_output, "Model config to write")->required();
  learn_cmd->add_option("--n", learn_n, "Number of normal states to fit");
  learn_cmd->add_option("--boundary-multiplier", learn_multiplier,
                        "Boundary rates sit this many Poisson sds beyond the extremes");
  learn_cmd->add_option("--rate-floor", learn_floor, "Lower bound for any rate");
  learn_cmd->add_option("--a-low", learn_a_low, "Self-transition of the low state");
  learn_cmd->add_option("--a-high", learn_a_high, "Self-transition of the high state");
  learn_cmd->add_option("--alpha", learn_alpha, "Statistic weight on the low state");
  learn_cmd->add_option("--threshold", learn_threshold, "Alarm threshold");
  learn_cmd->add_flag("--report-sum", learn_report_sum,
                      "Report q_low + q_high when alpha = 0.5");
  add_bin_flags(learn_cmd, learn_bins);

  // detect
  std::string detect_input, detect_output, detect_config, detect_mode = "monitor";
  std::optional<double> detect_threshold, detect_alpha;
  BinFlags detect_bins;
  CLI::App* detect_cmd = app.add_subcommand("detect", "Run the detector over a stream");
  detect_cmd->add_option("--config", detect_config, "Model config")->required();
  detect_cmd->add_option("--input", detect_input, "Stream CSV, or a directory of them")
      ->required();
  detect_cmd->add_option("--output", detect_output, "Trajectory CSV, or a directory")
      ->required();
  detect_cmd->add_option("--mode", detect_mode, "monitor or stop")
      ->check(CLI::IsMember({"monitor", "stop"}));
  detect_cmd->add_option("--threshold", detect_threshold, "Override the config threshold");
  detect_cmd->add_option("--alpha", detect_alpha, "Override the config alpha");
  add_bin_flags(detect_cmd, detect_bins);

  // simulate
  std::string sim_config, sim_output;
  std::uint64_t sim_seed = 0, sim_trial = 0;
  int sim_horizon = 1000;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Sample one path from the model");
  sim_cmd->add_option("--config", sim_config, "Model config")->required();
  sim_cmd->add_option("--output", sim_output, "Path CSV to write")->required();
  sim_cmd->add_option("--seed", sim_seed, "Random seed")->required();
  sim_cmd->add_option("--horizon", sim_horizon, "Path length in steps");
  sim_cmd->add_option("--trial", sim_trial, "Trial substream index");

  // solve
  std::string solve_config, solve_output, solve_policy;
  int solve_grid = 200, solve_max_iter = 2000;
  double solve_tol = 1e-6, solve_cf = 1.0, solve_cd = 0.05;
  CLI::App* solve_cmd = app.add_subcommand("solve", "Value-iterate the stopping policy");
  solve_cmd->add_option("--config", solve_config, "Model config")->required();
  solve_cmd->add_option("--output", solve_output, "Report file to write")->required();
  solve_cmd->add_option("--policy-csv", solve_policy, "Optional policy/value CSV dump");
  solve_cmd->add_option("--grid", solve_grid, "Simplex grid resolution");
  solve_cmd->add_option("--tol", solve_tol, "Sup-norm convergence tolerance");
  solve_cmd->add_option("--max-iter", solve_max_iter, "Iteration cap");
  solve_cmd->add_option("--cf", solve_cf, "False-alarm cost");
  solve_cmd->add_option("--cd", solve_cd, "Per-step delay cost");

  // eval
  std::string eval_config, eval_output;
  std::uint64_t eval_seed = 0;
  int eval_trials = 1000, eval_horizon = 500;
  std::vector<double> eval_thresholds;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Monte Carlo delay and false-alarm evaluation");
  eval_cmd->add_option("--config", eval_config, "Model config")->required();
  eval_cmd->add_option("--output", eval_output, "Operating-point CSV to write")->required();
  eval_cmd->add_option("--seed", eval_seed, "Random seed")->required();
  eval_cmd->add_option("--trials", eval_trials, "Number of Monte Carlo trials");
  eval_cmd->add_option("--threshold", eval_thresholds, "Threshold(s) to evaluate");
  eval_cmd->add_option("--horizon", eval_horizon, "Path length per trial");

  CLI11_PARSE(app, argc, argv);

  try {
    if (learn_cmd->parsed())
      return run_learn(learn_input, learn_output, learn_n, learn_multiplier, learn_floor,
                       learn_bins, learn_a_low, learn_a_high, learn_alpha, learn_threshold,
                       learn_report_sum);
    if (detect_cmd->parsed())
      return run_detect(detect_input, detect_output, detect_config, detect_mode, detect_bins,
                        detect_threshold, detect_alpha);
    if (sim_cmd->parsed())
      return run_simulate(sim_config, sim_output, sim_seed, sim_horizon, sim_trial);
    if (solve_cmd->parsed())
      return run_solve(solve_config, solve_output, solve_policy, solve_grid, solve_tol,
                       solve_max_iter, solve_cf, solve_cd);
    if (eval_cmd->parsed())
      return run_eval(eval_config, eval_output, eval_seed, eval_trials, eval_thresholds,
                      eval_horizon);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beliefsum/detector.hpp"
#include "beliefsum/hmm.hpp"
#include "beliefsum/simulator.hpp"

namespace beliefsum::io {

struct Binning {
  enum class Unit { rows, seconds };
  Unit unit = Unit::rows;
  int width = 1;  // width 1 in rows is a passthrough

  bool is_passthrough() const { return unit == Unit::rows && width == 1; }
};

// Provenance block written by the learn command.
struct LearnProvenance {
  std::string source_label;
  std::uint64_t data_hash = 0;  // FNV-1a over the training counts
  int requested_n = 0;
  int effective_n = 0;
  double boundary_multiplier = 0.0;
  double rate_floor = 0.0;
};

// The on-disk model description: rate ladder, transition structure and
// detector settings, one JSON document. pbar and prior may be given as the
// literal string "uniform".
struct ModelConfig {
  RateLadder ladder;
  TransitionModel model;
  double alpha = 0.5;
  double threshold = 0.8;
  bool report_sum = false;
  std::optional<std::vector<double>> prior;  // nullopt = uniform over 1..N
  Binning binning;
  std::optional<LearnProvenance> provenance;

  void validate() const;
  detector::DetectorConfig to_detector_config(detector::RunMode mode) const;
  sim::ScenarioConfig to_scenario_config(int horizon, std::uint64_t seed) const;
};

std::uint64_t fnv1a_hash(const std::vector<int>& counts);

ModelConfig parse_model_config(const std::string& text);
std::string serialize_model_config(const ModelConfig& config);

ModelConfig load_model_config(const std::filesystem::path& path);
void save_model_config(const std::filesystem::path& path, const ModelConfig& config);

}  // namespace beliefsum::io

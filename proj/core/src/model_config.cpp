#include "beliefsum/model_config.hpp"

#include <fstream>

#include <json.hpp>

namespace beliefsum::io {

using nlohmann::json;

void ModelConfig::validate() const {
  ladder.validate();
  model.validate();
  if (model.normal_count() != ladder.normal_count)
    throw ConfigError("ModelConfig: pbar and rates sizes disagree");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("ModelConfig: alpha must be in [0,1]");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("ModelConfig: threshold must be in (0,1)");
  if (prior) {
    if (prior->size() != static_cast<std::size_t>(ladder.normal_count))
      throw ConfigError("ModelConfig: prior must have one weight per normal state");
    double total = 0.0;
    for (double p : *prior) {
      if (p < 0.0) throw ConfigError("ModelConfig: negative prior weight");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("ModelConfig: prior must sum to 1");
  }
  if (binning.width < 1) throw ConfigError("ModelConfig: binning width must be >= 1");
}

detector::DetectorConfig ModelConfig::to_detector_config(detector::RunMode mode) const {
  validate();
  detector::DetectorConfig config;
  config.ladder = ladder;
  config.model = model;
  config.alpha = alpha;
  config.threshold = threshold;
  config.report_sum = report_sum;
  config.mode = mode;
  const int n = ladder.normal_count;
  if (prior) {
    Belief b;
    b.probs.assign(static_cast<std::size_t>(belief_size(n)), 0.0);
    for (int j = 1; j <= n; ++j)
      b.probs[static_cast<std::size_t>(normal_index(j))] = (*prior)[static_cast<std::size_t>(j - 1)];
    config.prior = std::move(b);
  } else {
    config.prior = Belief::uniform_normal(n);
  }
  return config;
}

sim::ScenarioConfig ModelConfig::to_scenario_config(int horizon, std::uint64_t seed) const {
  validate();
  sim::ScenarioConfig scenario;
  scenario.ladder = ladder;
  scenario.model = model;
  scenario.horizon = horizon;
  scenario.seed = seed;
  if (prior) {
    scenario.prior = *prior;
  } else {
    scenario.prior.assign(static_cast<std::size_t>(ladder.normal_count),
                          1.0 / ladder.normal_count);
  }
  return scenario;
}

std::uint64_t fnv1a_hash(const std::vector<int>& counts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int c : counts) {
    auto v = static_cast<std::uint64_t>(static_cast<std::int64_t>(c));
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

namespace {

bool is_uniform_pbar(const TransitionModel& model) {
  const int n = model.normal_count();
  const double p = 1.0 / (n + 2);
  for (std::size_t r = 0; r < model.pbar.rows(); ++r)
    for (std::size_t c = 0; c < model.pbar.cols(); ++c)
      if (model.pbar(r, c) != p) return false;
  return true;
}

}  // namespace

ModelConfig parse_model_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
  try {
    ModelConfig config;
    const auto rates = doc.at("rates").get<std::vector<double>>();
    const int n = doc.at("n_normal").get<int>();
    if (static_cast<int>(rates.size()) != n + 2)
      throw ConfigError("model config: rates length must be n_normal + 2");
    config.ladder = RateLadder::create(rates);

    const double a_low = doc.at("a_low").get<double>();
    const double a_high = doc.at("a_high").get<double>();
    const auto& pbar = doc.at("pbar");
    if (pbar.is_string()) {
      if (pbar.get<std::string>() != "uniform")
        throw ConfigError("model config: pbar must be a matrix or \"uniform\"");
      Matrix uniform(static_cast<std::size_t>(n), static_cast<std::size_t>(n) + 2,
                     1.0 / (n + 2));
      config.model = TransitionModel::create(std::move(uniform), a_low, a_high);
    } else {
      config.model = TransitionModel::create(
          Matrix::from_rows(pbar.get<std::vector<std::vector<double>>>()), a_low, a_high);
    }

    config.alpha = doc.at("alpha").get<double>();
    config.threshold = doc.at("threshold").get<double>();
    config.report_sum = doc.at("report_sum").get<bool>();

    const auto& prior = doc.at("prior");
    if (prior.is_string()) {
      if (prior.get<std::string>() != "uniform")
        throw ConfigError("model config: prior must be a vector or \"uniform\"");
    } else {
      config.prior = prior.get<std::vector<double>>();
    }

    const auto& binning = doc.at("binning");
    const std::string unit = binning.at("unit").get<std::string>();
    if (unit == "rows") {
      config.binning.unit = Binning::Unit::rows;
    } else if (unit == "seconds") {
      config.binning.unit = Binning::Unit::seconds;
    } else {
      throw ConfigError("model config: binning unit must be rows or seconds");
    }
    config.binning.width = binning.at("width").get<int>();

    if (doc.contains("provenance")) {
      const auto& p = doc.at("provenance");
      LearnProvenance prov;
      prov.source_label = p.at("source_label").get<std::string>();
      prov.data_hash = p.at("data_hash").get<std::uint64_t>();
      prov.requested_n = p.at("requested_n").get<int>();
      prov.effective_n = p.at("effective_n").get<int>();
      prov.boundary_multiplier = p.at("boundary_multiplier").get<double>();
      prov.rate_floor = p.at("rate_floor").get<double>();
      config.provenance = std::move(prov);
    }

    config.validate();
    return config;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

std::string serialize_model_config(const ModelConfig& config) {
  config.validate();
  json doc;
  doc["rates"] = config.ladder.rates;
  doc["n_normal"] = config.ladder.normal_count;
  if (is_uniform_pbar(config.model)) {
    doc["pbar"] = "uniform";
  } else {
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < config.model.pbar.rows(); ++r) {
      const auto row = config.model.pbar.row(r);
      rows.emplace_back(row.begin(), row.end());
    }
    doc["pbar"] = rows;
  }
  doc["a_low"] = config.model.a_low;
  doc["a_high"] = config.model.a_high;
  doc["alpha"] = config.alpha;
  doc["threshold"] = config.threshold;
  doc["report_sum"] = config.report_sum;
  if (config.prior) {
    doc["prior"] = *config.prior;
  } else {
    doc["prior"] = "uniform";
  }
  doc["binning"] = {{"unit", config.binning.unit == Binning::Unit::rows ? "rows" : "seconds"},
                    {"width", config.binning.width}};
  if (config.provenance) {
    doc["provenance"] = {{"source_label", config.provenance->source_label},
                         {"data_hash", config.provenance->data_hash},
                         {"requested_n", config.provenance->requested_n},
                         {"effective_n", config.provenance->effective_n},
                         {"boundary_multiplier", config.provenance->boundary_multiplier},
                         {"rate_floor", config.provenance->rate_floor}};
  }
  return doc.dump(2) + "\n";
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open model config: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_model_config(text);
}

void save_model_config(const std::filesystem::path& path, const ModelConfig& config) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write model config: " + path.string());
  out << serialize_model_config(config);
}

}  // namespace beliefsum::io

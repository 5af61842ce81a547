#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefsum/detector.hpp"
#include "beliefsum/model_config.hpp"
#include "beliefsum/simulator.hpp"

namespace beliefsum::io {

// One row of a count stream file. Timestamps are epoch seconds; the reader
// accepts plain integers or ISO-8601 "YYYY-MM-DDTHH:MM:SS[Z]".
struct StreamRow {
  std::int64_t timestamp = 0;
  int count = 0;
};

struct CountSeries {
  std::vector<int> counts;
  Binning binning;
  std::int64_t start_timestamp = 0;
  std::string source;
};

// Parses a "timestamp,count" CSV with a mandatory header. Malformed rows and
// decreasing timestamps raise ParseError with the offending line number.
std::vector<StreamRow> read_stream_file(const std::filesystem::path& path);

// Aggregates rows into fixed-width bins. Second bins align to the first
// timestamp; a trailing bin is kept only when the data reaches its final
// second (timestamps are treated as one-second slots). Row bins group
// consecutive rows; a short trailing group is dropped.
std::vector<int> bin_counts(std::span<const StreamRow> rows, const Binning& binning);

CountSeries ingest(const std::filesystem::path& path, const Binning& binning);

// Trajectory CSV, column order: step,count,statistic,q_low,q_high.
void write_trajectory_csv(std::ostream& os, std::span<const detector::StatisticRecord> records);

// Structured-text alarm record: stream id, alarm step, threshold, alpha.
std::string format_alarm_report(const std::string& stream_id, std::optional<int> alarm_step,
                                double threshold, double alpha);

// Evaluation CSV, column order: threshold,false_alarm_fraction,mean_delay,censored_count.
void write_eval_csv(std::ostream& os, const sim::EvalReport& report);

std::string format_eval_summary(const sim::EvalReport& report);

// Sampled path CSV, column order: step,state,count.
void write_path_csv(std::ostream& os, const sim::SamplePath& path);

}  // namespace beliefsum::io

#include "beliefsum/stream_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace beliefsum::io {

namespace {

std::string fmt_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::optional<std::int64_t> parse_iso8601(const std::string& text) {
  int y, mo, d, h, mi, s;
  char sep;
  if (std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s) != 7)
    return std::nullopt;
  if (sep != 'T' && sep != ' ') return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 ||
      s > 60)
    return std::nullopt;
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

std::optional<std::int64_t> parse_timestamp(std::string field) {
  // strip trailing Z / whitespace
  while (!field.empty() && (field.back() == 'Z' || field.back() == ' ' || field.back() == '\r'))
    field.pop_back();
  while (!field.empty() && field.front() == ' ') field.erase(field.begin());
  if (field.empty()) return std::nullopt;

  std::int64_t value = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec == std::errc() && res.ptr == field.data() + field.size()) return value;
  return parse_iso8601(field);
}

std::optional<int> parse_count(std::string field) {
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.pop_back();
  while (!field.empty() && field.front() == ' ') field.erase(field.begin());
  int value = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || value < 0)
    return std::nullopt;
  return value;
}

}  // namespace

std::vector<StreamRow> read_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open stream file: " + path.string());

  std::vector<StreamRow> rows;
  std::string line;
  long line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      std::string lowered = line;
      for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      lowered.erase(std::remove(lowered.begin(), lowered.end(), ' '), lowered.end());
      if (lowered != "timestamp,count")
        throw ParseError(path.string() + ": expected header \"timestamp,count\"", line_no);
      header_seen = true;
      continue;
    }
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError(path.string() + ": missing comma", line_no);
    const auto ts = parse_timestamp(line.substr(0, comma));
    if (!ts) throw ParseError(path.string() + ": bad timestamp", line_no);
    const auto count = parse_count(line.substr(comma + 1));
    if (!count) throw ParseError(path.string() + ": bad count", line_no);
    if (!rows.empty() && *ts < rows.back().timestamp)
      throw ParseError(path.string() + ": decreasing timestamp", line_no);
    rows.push_back({*ts, *count});
  }
  if (!header_seen) throw ParseError(path.string() + ": empty file, header required", 0);
  return rows;
}

std::vector<int> bin_counts(std::span<const StreamRow> rows, const Binning& binning) {
  if (binning.width < 1) throw UsageError("bin_counts: width must be >= 1");
  std::vector<int> out;
  if (rows.empty()) return out;

  if (binning.unit == Binning::Unit::rows) {
    if (binning.width == 1) {
      out.reserve(rows.size());
      for (const StreamRow& r : rows) out.push_back(r.count);
      return out;
    }
    const std::size_t width = static_cast<std::size_t>(binning.width);
    for (std::size_t start = 0; start + width <= rows.size(); start += width) {
      int total = 0;
      for (std::size_t k = 0; k < width; ++k) total += rows[start + k].count;
      out.push_back(total);
    }
    return out;
  }

  // Second bins, aligned to the first timestamp; the last bin is emitted only
  // when the data covers its final second.
  const std::int64_t t0 = rows.front().timestamp;
  const std::int64_t last = rows.back().timestamp;
  const std::int64_t width = binning.width;
  const std::int64_t full_bins = (last - t0 + 1) / width;
  out.assign(static_cast<std::size_t>(full_bins), 0);
  for (const StreamRow& r : rows) {
    const std::int64_t bin = (r.timestamp - t0) / width;
    if (bin < full_bins) out[static_cast<std::size_t>(bin)] += r.count;
  }
  return out;
}

CountSeries ingest(const std::filesystem::path& path, const Binning& binning) {
  const std::vector<StreamRow> rows = read_stream_file(path);
  CountSeries series;
  series.binning = binning;
  series.source = path.string();
  series.start_timestamp = rows.empty() ? 0 : rows.front().timestamp;
  series.counts = bin_counts(rows, binning);
  return series;
}

void write_trajectory_csv(std::ostream& os,
                          std::span<const detector::StatisticRecord> records) {
  os << "step,count,statistic,q_low,q_high\n";
  for (const auto& r : records)
    os << r.step << ',' << r.count << ',' << fmt_double(r.statistic) << ','
       << fmt_double(r.q_low) << ',' << fmt_double(r.q_high) << '\n';
}

std::string format_alarm_report(const std::string& stream_id, std::optional<int> alarm_step,
                                double threshold, double alpha) {
  std::ostringstream os;
  os << "stream: " << stream_id << "\n";
  os << "alarm_step: " << (alarm_step ? std::to_string(*alarm_step) : std::string("none"))
     << "\n";
  os << "threshold: " << fmt_double(threshold) << "\n";
  os << "alpha: " << fmt_double(alpha) << "\n";
  return os.str();
}

void write_eval_csv(std::ostream& os, const sim::EvalReport& report) {
  os << "threshold,false_alarm_fraction,mean_delay,censored_count\n";
  for (const auto& p : report.points)
    os << fmt_double(p.threshold) << ',' << fmt_double(p.false_alarm_fraction) << ','
       << fmt_double(p.mean_delay) << ',' << p.censored << '\n';
}

std::string format_eval_summary(const sim::EvalReport& report) {
  std::ostringstream os;
  os << "trials: " << report.trials << "\n";
  for (const auto& p : report.points) {
    os << "threshold " << fmt_double(p.threshold)
       << ": false_alarm_fraction=" << fmt_double(p.false_alarm_fraction)
       << " mean_delay=" << fmt_double(p.mean_delay) << " detections=" << p.detections
       << " false_alarms=" << p.false_alarms << " censored=" << p.censored << "\n";
  }
  return os.str();
}

void write_path_csv(std::ostream& os, const sim::SamplePath& path) {
  os << "step,state,count\n";
  for (std::size_t k = 0; k < path.states.size(); ++k)
    os << k << ',' << path.states[k] << ',' << path.counts[k] << '\n';
}

}  // namespace beliefsum::io

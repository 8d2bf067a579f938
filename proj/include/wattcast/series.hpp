#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wattcast/error.hpp"
#include "wattcast/time.hpp"

namespace wattcast {

/// One instant energy consumption reading, in Watts.
struct Measurement {
  Timestamp timestamp;
  double value = 0.0;

  friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Ordered, immutable sequence of measurements with strictly increasing
/// timestamps and finite values.
class TimeSeries {
 public:
  TimeSeries() = default;

  explicit TimeSeries(std::vector<Measurement> measurements, std::string label = {})
      : measurements_(std::move(measurements)), label_(std::move(label)) {
    for (std::size_t i = 0; i < measurements_.size(); ++i) {
      if (!std::isfinite(measurements_[i].value))
        throw ConfigError("non-finite value at index " + std::to_string(i));
      if (i > 0 && measurements_[i].timestamp <= measurements_[i - 1].timestamp)
        throw ConfigError("timestamps not strictly increasing at index " + std::to_string(i));
    }
  }

  std::span<const Measurement> measurements() const noexcept { return measurements_; }
  const std::string& label() const noexcept { return label_; }
  std::size_t size() const noexcept { return measurements_.size(); }
  bool empty() const noexcept { return measurements_.empty(); }
  const Measurement& operator[](std::size_t i) const { return measurements_[i]; }
  const Measurement& front() const { return measurements_.front(); }
  const Measurement& back() const { return measurements_.back(); }
  auto begin() const noexcept { return measurements_.begin(); }
  auto end() const noexcept { return measurements_.end(); }

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(measurements_.size());
    for (const auto& m : measurements_) out.push_back(m.value);
    return out;
  }

  /// Same timestamps, new values.
  TimeSeries with_values(std::span<const double> values) const {
    if (values.size() != measurements_.size()) throw ConfigError("with_values: length mismatch");
    std::vector<Measurement> out = measurements_;
    for (std::size_t i = 0; i < out.size(); ++i) out[i].value = values[i];
    return TimeSeries(std::move(out), label_);
  }

  TimeSeries with_label(std::string label) const { return TimeSeries(measurements_, std::move(label)); }

  /// Measurements with index in [first, last).
  TimeSeries slice(std::size_t first, std::size_t last) const {
    first = std::min(first, measurements_.size());
    last = std::clamp(last, first, measurements_.size());
    return TimeSeries(std::vector<Measurement>(measurements_.begin() + static_cast<std::ptrdiff_t>(first),
                                               measurements_.begin() + static_cast<std::ptrdiff_t>(last)),
                      label_);
  }

  friend bool operator==(const TimeSeries& a, const TimeSeries& b) { return a.measurements_ == b.measurements_; }

 private:
  std::vector<Measurement> measurements_;
  std::string label_;
};

// --- CSV ---------------------------------------------------------------------

struct CsvSchema {
  std::string timestamp_column = "timestamp";
  std::string value_column = "value_watts";
};

struct CsvReadResult {
  TimeSeries series;
  /// Rows dropped because their timestamp repeated an earlier row.
  std::size_t duplicates_dropped = 0;
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '"')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '"' || field.back() == '\r'))
      field.remove_suffix(1);
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError("invalid number '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Parses CSV text with a header row; see read_csv.
inline CsvReadResult parse_csv(std::istream& in, const CsvSchema& schema = {}, std::string label = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t ts_col = 0, val_col = 0;
  bool have_header = false;
  std::vector<Measurement> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (!have_header) {
      auto find = [&](const std::string& name) {
        auto it = std::find(fields.begin(), fields.end(), name);
        if (it == fields.end()) throw ParseError("missing column '" + name + "' in header", line_no);
        return static_cast<std::size_t>(it - fields.begin());
      };
      ts_col = find(schema.timestamp_column);
      val_col = find(schema.value_column);
      have_header = true;
      continue;
    }
    if (fields.size() <= std::max(ts_col, val_col)) throw ParseError("too few columns", line_no);
    try {
      Measurement m{parse_timestamp(fields[ts_col]), detail::parse_double(fields[val_col])};
      if (!std::isfinite(m.value)) throw ParseError("non-finite value");
      rows.push_back(m);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!have_header) throw ParseError("empty CSV input");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Measurement& a, const Measurement& b) { return a.timestamp < b.timestamp; });
  CsvReadResult result;
  std::vector<Measurement> unique;
  unique.reserve(rows.size());
  for (const auto& m : rows) {
    if (!unique.empty() && unique.back().timestamp == m.timestamp) {
      ++result.duplicates_dropped;
      continue;
    }
    unique.push_back(m);
  }
  result.series = TimeSeries(std::move(unique), std::move(label));
  return result;
}

/// Reads a `timestamp,value_watts` CSV file. Rows are sorted by timestamp
/// (stable); repeated timestamps keep the first row.
inline CsvReadResult read_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return parse_csv(in, schema, path);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// Decimal places used when writing values; negative selects the shortest
/// representation that round-trips exactly.
inline constexpr int kDefaultCsvPrecision = 6;

inline std::string format_value(double v, int precision = kDefaultCsvPrecision) {
  char buf[64];
  if (precision < 0) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  }
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s = buf;
  if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) {
    // Avoid "-0.000000" for tiny negatives.
    if (!s.empty() && s.front() == '-') s.erase(0, 1);
  }
  return s;
}

inline void write_csv(std::ostream& out, const TimeSeries& series, int precision = kDefaultCsvPrecision,
                      const CsvSchema& schema = {}) {
  out << schema.timestamp_column << ',' << schema.value_column << '\n';
  for (const auto& m : series) out << format_timestamp(m.timestamp) << ',' << format_value(m.value, precision) << '\n';
}

inline void write_csv(const TimeSeries& series, const std::string& path, int precision = kDefaultCsvPrecision,
                      const CsvSchema& schema = {}) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_csv(out, series, precision, schema);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace wattcast

#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wattcast/error.hpp"
#include "wattcast/experiment/grid.hpp"
#include "wattcast/series.hpp"

namespace wattcast::experiment {

/// One (series, algorithm, window) result.
struct EvalRow {
  std::string algorithm;  ///< display name, e.g. "CNN-LSTM"
  std::size_t window = 0;
  double mae_watts = 0.0;
  double rmse_watts = 0.0;
  double duration_minutes = 0.0;
  std::string best_config;
  std::string series;
  std::string status = "ok";  ///< "ok" or "error: <message>"

  bool ok() const { return status == "ok"; }
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

inline constexpr const char* kReportHeader =
    "algorithm,window,mae_watts,rmse_watts,duration_minutes,best_config,series,status";

namespace detail {
inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

inline std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace detail

/// Metrics with round-trip precision; duration in minutes with 2 decimals.
inline void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << kReportHeader << '\n';
  for (const auto& r : report.rows) {
    out << detail::csv_escape(r.algorithm) << ',' << r.window << ',' << format_number(r.mae_watts) << ','
        << format_number(r.rmse_watts) << ',' << detail::fixed2(r.duration_minutes) << ','
        << detail::csv_escape(r.best_config) << ',' << detail::csv_escape(r.series) << ','
        << detail::csv_escape(r.status) << '\n';
  }
}

inline void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_report_csv(out, report);
}

inline EvalReport read_report_csv(std::istream& in) {
  EvalReport report;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("report: empty file");
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::csv_fields(line);
    if (f.size() < 6) throw ParseError("report: expected at least 6 columns", line_no);
    EvalRow r;
    try {
      r.algorithm = f[0];
      r.window = std::stoull(f[1]);
      r.mae_watts = std::stod(f[2]);
      r.rmse_watts = std::stod(f[3]);
      r.duration_minutes = std::stod(f[4]);
    } catch (const std::logic_error&) {
      throw ParseError("report: bad numeric field", line_no);
    }
    r.best_config = f[5];
    if (f.size() > 6) r.series = f[6];
    if (f.size() > 7) r.status = f[7];
    report.rows.push_back(std::move(r));
  }
  return report;
}

inline EvalReport read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_report_csv(in);
}

/// Aligned table with columns Algorithm | Window | MAE | RMSE | Duration,
/// one block per series.
inline std::string format_report_table(const EvalReport& report) {
  std::vector<std::string> series_order;
  for (const auto& r : report.rows)
    if (std::find(series_order.begin(), series_order.end(), r.series) == series_order.end())
      series_order.push_back(r.series);

  std::ostringstream os;
  for (std::size_t s = 0; s < series_order.size(); ++s) {
    if (s > 0) os << '\n';
    if (!series_order[s].empty()) os << "Series: " << series_order[s] << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %-8s %-10s %-10s %-10s\n", "Algorithm", "Window", "MAE", "RMSE",
                  "Duration");
    os << line << std::string(52, '-') << '\n';
    for (const auto& r : report.rows) {
      if (r.series != series_order[s]) continue;
      if (r.ok()) {
        std::snprintf(line, sizeof line, "%-10s %-8zu %-10.2f %-10.2f %-10.2f\n", r.algorithm.c_str(), r.window,
                      r.mae_watts, r.rmse_watts, r.duration_minutes);
      } else {
        std::snprintf(line, sizeof line, "%-10s %-8zu %-10s %-10s %-10.2f\n", r.algorithm.c_str(), r.window,
                      "failed", "failed", r.duration_minutes);
      }
      os << line;
    }
  }
  os << "(duration in minutes)\n";
  return os.str();
}

}  // namespace wattcast::experiment

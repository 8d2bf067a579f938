#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wattcast/error.hpp"
#include "wattcast/series.hpp"

namespace wattcast {

/// Readings below `alpha` become `alpha`, readings above `beta` become `beta`.
struct CutoffConfig {
  double alpha = 0.0;
  double beta = 10000.0;

  void validate() const {
    if (!(alpha <= beta)) throw ConfigError("cutoff: alpha must be <= beta");
  }
};

/// Rolling z-score substitution over the trailing time window
/// [x.timestamp - window, x.timestamp).
struct ZScoreConfig {
  Seconds window = std::chrono::days{7};
  double omega = 3.0;

  void validate() const {
    if (window <= Seconds{0}) throw ConfigError("zscore: window must be positive");
    if (!(omega > 0.0)) throw ConfigError("zscore: omega must be positive");
  }
};

/// Sum readings into bins [d_c, d_c + t), each labelled by its right edge.
struct AggregationConfig {
  Seconds bin = std::chrono::minutes{5};
  Timestamp start = parse_timestamp("2020-01-01T00:10:00Z");
  Timestamp end = parse_timestamp("2021-12-01T00:00:00Z");

  void validate() const {
    if (bin <= Seconds{0}) throw ConfigError("aggregate: bin width must be positive");
    if (!(start < end)) throw ConfigError("aggregate: start must precede end");
  }

  /// Number of bins emitted for [start, end): ceil((end - start) / bin).
  std::size_t bin_count() const {
    const auto span = (end - start).count();
    const auto w = bin.count();
    return static_cast<std::size_t>((span + w - 1) / w);
  }
};

inline TimeSeries cutoff_filter(const TimeSeries& series, const CutoffConfig& cfg) {
  cfg.validate();
  std::vector<double> v = series.values();
  for (double& x : v) x = std::clamp(x, cfg.alpha, cfg.beta);
  return series.with_values(v);
}

/// Mean and population standard deviation of `values`, two-pass, in index order.
struct WindowStats {
  double mean = 0.0;
  double stddev = 0.0;
};

inline WindowStats window_stats(std::span<const double> values) {
  WindowStats s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double x : values) sum += x;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double x : values) {
    const double d = x - s.mean;
    sq += d * d;
  }
  s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

/// Single left-to-right pass. A value x is replaced by the window mean when
/// (x - mean) / stddev > omega, where the window holds the already-cleaned
/// values with timestamps in [x.t - window, x.t). Points with fewer than two
/// lagged values, or a zero-variance window, pass through. Detection is
/// one-sided: low values are left to the cutoff filter.
inline TimeSeries zscore_substitute(const TimeSeries& series, const ZScoreConfig& cfg) {
  cfg.validate();
  const auto m = series.measurements();
  std::vector<double> out = series.values();
  std::size_t lo = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Timestamp window_start = m[i].timestamp - cfg.window;
    while (lo < i && m[lo].timestamp < window_start) ++lo;
    const std::size_t n = i - lo;
    if (n < 2) continue;
    const auto stats = window_stats(std::span<const double>(out).subspan(lo, n));
    if (stats.stddev == 0.0) continue;
    const double z = (out[i] - stats.mean) / stats.stddev;
    if (z > cfg.omega) out[i] = stats.mean;
  }
  return series.with_values(out);
}

/// Equally spaced output: timestamps start + k * bin for k = 1..bin_count().
/// Readings outside [start, start + bin_count() * bin) are discarded; empty
/// bins are 0 W.
inline TimeSeries aggregate(const TimeSeries& series, const AggregationConfig& cfg) {
  cfg.validate();
  const std::size_t count = cfg.bin_count();
  std::vector<Measurement> out;
  out.reserve(count);
  const auto m = series.measurements();
  auto it = std::lower_bound(m.begin(), m.end(), cfg.start,
                             [](const Measurement& a, Timestamp t) { return a.timestamp < t; });
  Timestamp current = cfg.start;
  for (std::size_t k = 0; k < count; ++k) {
    const Timestamp next = current + cfg.bin;
    double sum = 0.0;
    while (it != m.end() && it->timestamp < next) {
      sum += it->value;
      ++it;
    }
    out.push_back({next, sum});
    current = next;
  }
  return TimeSeries(std::move(out), series.label());
}

/// cutoff -> z-score -> aggregation.
inline TimeSeries clean_pipeline(const TimeSeries& series, const CutoffConfig& cutoff, const ZScoreConfig& z,
                                 const AggregationConfig& agg) {
  return aggregate(zscore_substitute(cutoff_filter(series, cutoff), z), agg);
}

}  // namespace wattcast

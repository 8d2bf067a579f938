#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "wattcast/error.hpp"
#include "wattcast/series.hpp"

namespace wattcast {

/// Chronological split: train [first, train_end), validation [train_end,
/// val_end), test [val_end, last].
struct SplitSpec {
  Timestamp train_end = parse_timestamp("2021-03-01T00:00:00Z");
  Timestamp val_end = parse_timestamp("2021-06-01T00:00:00Z");
};

struct Splits {
  TimeSeries train;
  TimeSeries validation;
  TimeSeries test;
};

inline Splits split(const TimeSeries& series, const SplitSpec& spec) {
  if (series.empty()) throw ConfigError("split: empty series");
  if (!(series.front().timestamp < spec.train_end && spec.train_end < spec.val_end &&
        spec.val_end < series.back().timestamp))
    throw ConfigError("split: boundaries must satisfy first < train_end < val_end < last (" +
                      format_timestamp(series.front().timestamp) + " .. " + format_timestamp(series.back().timestamp) +
                      ")");
  const auto m = series.measurements();
  const auto index_of = [&](Timestamp t) {
    return static_cast<std::size_t>(
        std::lower_bound(m.begin(), m.end(), t, [](const Measurement& a, Timestamp b) { return a.timestamp < b; }) -
        m.begin());
  };
  const std::size_t a = index_of(spec.train_end);
  const std::size_t b = index_of(spec.val_end);
  return {series.slice(0, a), series.slice(a, b), series.slice(b, series.size())};
}

/// Min-max scaler mapping [min, max] of the training split onto [0, 1].
/// Values outside the fitted range map outside [0, 1].
class Scaler {
 public:
  Scaler(double min, double max) : min_(min), max_(max) {
    if (!(min < max)) throw ConfigError("scaler: degenerate range (min must be < max)");
  }

  static Scaler fit(std::span<const double> train) {
    if (train.empty()) throw ConfigError("scaler: cannot fit on an empty training split");
    const auto [lo, hi] = std::minmax_element(train.begin(), train.end());
    if (!(*lo < *hi)) throw ConfigError("scaler: training split is constant");
    return Scaler(*lo, *hi);
  }
  static Scaler fit(const TimeSeries& train) { return fit(train.values()); }

  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }

  double apply(double v) const noexcept { return (v - min_) / (max_ - min_); }
  double invert(double s) const noexcept { return s * (max_ - min_) + min_; }

  std::vector<double> apply(std::span<const double> v) const {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [this](double x) { return apply(x); });
    return out;
  }
  std::vector<double> invert(std::span<const double> v) const {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [this](double x) { return invert(x); });
    return out;
  }
  TimeSeries apply(const TimeSeries& s) const { return s.with_values(apply(s.values())); }

 private:
  double min_;
  double max_;
};

/// Supervised one-step-ahead dataset: inputs (n_samples, n_timesteps,
/// n_features) row-major, targets (n_samples).
struct WindowTensor {
  std::size_t n_samples = 0;
  std::size_t n_timesteps = 0;
  std::size_t n_features = 1;
  std::vector<double> inputs;
  std::vector<double> targets;
  /// Timestamp of each target; empty when built from bare values.
  std::vector<Timestamp> target_times;

  std::span<const double> sample(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * n_timesteps * n_features, n_timesteps * n_features);
  }

  friend bool operator==(const WindowTensor&, const WindowTensor&) = default;
};

/// inputs[i][j] = values[i + j], targets[i] = values[i + n_timesteps].
inline WindowTensor make_windows(std::span<const double> values, std::size_t n_timesteps) {
  if (n_timesteps == 0) throw ConfigError("make_windows: n_timesteps must be positive");
  if (values.size() <= n_timesteps)
    throw ConfigError("make_windows: series of length " + std::to_string(values.size()) +
                      " is too short for a window of " + std::to_string(n_timesteps));
  WindowTensor w;
  w.n_timesteps = n_timesteps;
  w.n_samples = values.size() - n_timesteps;
  w.inputs.resize(w.n_samples * n_timesteps);
  w.targets.resize(w.n_samples);
  for (std::size_t i = 0; i < w.n_samples; ++i) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(i), n_timesteps,
                w.inputs.begin() + static_cast<std::ptrdiff_t>(i * n_timesteps));
    w.targets[i] = values[i + n_timesteps];
  }
  return w;
}

inline WindowTensor make_windows(const TimeSeries& series, std::size_t n_timesteps) {
  auto w = make_windows(series.values(), n_timesteps);
  w.target_times.reserve(w.n_samples);
  for (std::size_t i = 0; i < w.n_samples; ++i) w.target_times.push_back(series[i + n_timesteps].timestamp);
  return w;
}

/// Windows whose targets are exactly the values of `segment`, using the last
/// n_timesteps values of `preceding` as lead-in context.
inline WindowTensor make_windows_with_context(const TimeSeries& preceding, const TimeSeries& segment,
                                              std::size_t n_timesteps) {
  if (preceding.size() < n_timesteps)
    throw ConfigError("make_windows: only " + std::to_string(preceding.size()) +
                      " values precede the segment, need " + std::to_string(n_timesteps) + " for context");
  if (segment.empty()) throw ConfigError("make_windows: empty segment");
  std::vector<Measurement> joined(preceding.end() - static_cast<std::ptrdiff_t>(n_timesteps), preceding.end());
  joined.insert(joined.end(), segment.begin(), segment.end());
  return make_windows(TimeSeries(std::move(joined), segment.label()), n_timesteps);
}

/// Train/validation/test window tensors on a normalized scale.
struct PreparedData {
  Scaler scaler{0.0, 1.0};
  WindowTensor train;
  WindowTensor validation;
  WindowTensor test;
};

struct PrepareOptions {
  std::size_t n_timesteps = 12;
  /// Prefix validation/test segments with the trailing values of the data
  /// preceding them so that every value in those splits becomes a target.
  bool context_prefix = true;
};

/// split -> fit scaler on train -> normalize -> window each split.
inline PreparedData prepare(const TimeSeries& series, const SplitSpec& spec, const PrepareOptions& opt) {
  const Splits parts = split(series, spec);
  PreparedData out;
  out.scaler = Scaler::fit(parts.train);
  const TimeSeries train = out.scaler.apply(parts.train);
  const TimeSeries val = out.scaler.apply(parts.validation);
  const TimeSeries test = out.scaler.apply(parts.test);
  out.train = make_windows(train, opt.n_timesteps);
  if (opt.context_prefix) {
    out.validation = make_windows_with_context(train, val, opt.n_timesteps);
    std::vector<Measurement> before(train.begin(), train.end());
    before.insert(before.end(), val.begin(), val.end());
    out.test = make_windows_with_context(TimeSeries(std::move(before)), test, opt.n_timesteps);
  } else {
    out.validation = make_windows(val, opt.n_timesteps);
    out.test = make_windows(test, opt.n_timesteps);
  }
  return out;
}

// --- binary tensor cache -------------------------------------------------------
//
// Header: n_samples, n_timesteps, n_features as uint64 little-endian.
// Body: inputs row-major float64 LE, then n_samples float64 targets.

namespace detail {

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("unexpected end of binary file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

}  // namespace detail

inline void write_window_tensor(const WindowTensor& w, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  detail::write_u64(out, w.n_samples);
  detail::write_u64(out, w.n_timesteps);
  detail::write_u64(out, w.n_features);
  for (double v : w.inputs) detail::write_f64(out, v);
  for (double v : w.targets) detail::write_f64(out, v);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline WindowTensor read_window_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  WindowTensor w;
  w.n_samples = detail::read_u64(in);
  w.n_timesteps = detail::read_u64(in);
  w.n_features = detail::read_u64(in);
  if (w.n_features != 1) throw IoError(path + ": only univariate tensors are supported");
  const std::uint64_t limit = std::uint64_t{1} << 34;
  if (w.n_samples > limit || w.n_timesteps > limit) throw IoError(path + ": implausible tensor shape");
  w.inputs.resize(w.n_samples * w.n_timesteps * w.n_features);
  for (double& v : w.inputs) v = detail::read_f64(in);
  w.targets.resize(w.n_samples);
  for (double& v : w.targets) v = detail::read_f64(in);
  return w;
}

}  // namespace wattcast

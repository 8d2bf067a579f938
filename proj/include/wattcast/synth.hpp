#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "wattcast/error.hpp"
#include "wattcast/random.hpp"
#include "wattcast/series.hpp"

namespace wattcast {

/// Parameters of the synthetic shop-floor analyser signal.
///
/// Readings arrive every `cadence` seconds, each gap scaled by a factor drawn
/// uniformly from [1 - jitter, 1 + jitter]. The jitter model is an assumption:
/// real analysers only report "small variations in seconds".
struct SynthConfig {
  Timestamp start = parse_timestamp("2020-01-01T00:00:00Z");
  Timestamp end = parse_timestamp("2020-03-01T00:00:00Z");
  double cadence_seconds = 270.0;
  double jitter = 0.05;
  double base_load = 1000.0;
  double daily_amplitude = 400.0;
  double weekly_amplitude = 150.0;
  double noise_sigma = 80.0;
  double outlier_rate = 0.0;
  /// Probability, per reading, that a dropout starts at that reading.
  double gap_rate = 0.0;
  /// Dropout length in readings, drawn uniformly from [min, max].
  std::size_t gap_min_readings = 1;
  std::size_t gap_max_readings = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(start < end)) throw ConfigError("synth: start must precede end");
    if (!(cadence_seconds >= 1.0)) throw ConfigError("synth: cadence must be >= 1 s");
    if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("synth: jitter must be in [0, 1)");
    if (base_load < 0 || daily_amplitude < 0 || weekly_amplitude < 0 || noise_sigma < 0)
      throw ConfigError("synth: amplitudes and sigma must be >= 0");
    if (!(outlier_rate >= 0 && outlier_rate <= 1) || !(gap_rate >= 0 && gap_rate <= 1))
      throw ConfigError("synth: rates must lie in [0, 1]");
    if (gap_min_readings == 0 || gap_min_readings > gap_max_readings)
      throw ConfigError("synth: invalid gap length range");
  }

  /// Standard deviation of the noiseless seasonal component over whole weeks.
  double seasonal_rms() const {
    return std::sqrt(0.5 * daily_amplitude * daily_amplitude + 0.5 * weekly_amplitude * weekly_amplitude);
  }
};

enum class OutlierKind { spike, negative };

struct InjectedOutlier {
  std::size_t index;  ///< position in the emitted series
  OutlierKind kind;
};

struct SynthResult {
  TimeSeries series;
  std::vector<InjectedOutlier> outliers;
  /// Readings that would have been emitted had no dropout been active.
  std::size_t readings_attempted = 0;
};

/// Noiseless seasonal level at instant t.
inline double seasonal_level(const SynthConfig& cfg, Timestamp t) {
  constexpr double day = 86400.0, week = 7 * 86400.0;
  const auto secs = static_cast<double>(t.time_since_epoch().count());
  const double two_pi = 2.0 * std::numbers::pi;
  return cfg.base_load + cfg.daily_amplitude * std::sin(two_pi * std::fmod(secs, day) / day) +
         cfg.weekly_amplitude * std::sin(two_pi * std::fmod(secs, week) / week);
}

/// Generates the series and records every injected outlier.
inline SynthResult generate_synthetic_logged(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SynthResult result;
  std::vector<Measurement> out;
  std::size_t gap_left = 0;

  double t = static_cast<double>(cfg.start.time_since_epoch().count());
  const auto t_end = static_cast<double>(cfg.end.time_since_epoch().count());
  Timestamp last{};
  bool have_last = false;
  while (t < t_end) {
    const Timestamp ts{Seconds{static_cast<std::int64_t>(std::llround(t))}};
    // One fixed-length block of draws per reading keeps the stream aligned
    // whether or not the reading is later dropped.
    const double noise = rng.normal();
    const double outlier_u = rng.uniform();
    const double outlier_kind_u = rng.uniform();
    const double outlier_mag_u = rng.uniform();
    const double gap_u = rng.uniform();
    const double gap_len_u = rng.uniform();
    const double jitter_u = rng.uniform();

    ++result.readings_attempted;
    if (gap_left == 0 && gap_u < cfg.gap_rate) {
      const auto span = cfg.gap_max_readings - cfg.gap_min_readings + 1;
      gap_left = cfg.gap_min_readings +
                 std::min<std::size_t>(span - 1, static_cast<std::size_t>(gap_len_u * static_cast<double>(span)));
    }
    if (gap_left > 0) {
      --gap_left;
    } else if (!have_last || ts > last) {
      double v = std::max(0.0, seasonal_level(cfg, ts) + cfg.noise_sigma * noise);
      if (outlier_u < cfg.outlier_rate) {
        if (outlier_kind_u < 0.5) {
          const double factor = 10.0 + 90.0 * outlier_mag_u;
          v = std::max(v, 1.0) * factor;
          result.outliers.push_back({out.size(), OutlierKind::spike});
        } else {
          v = -(1.0 + outlier_mag_u * std::max(cfg.base_load, 1.0));
          result.outliers.push_back({out.size(), OutlierKind::negative});
        }
      }
      out.push_back({ts, v});
      last = ts;
      have_last = true;
    }
    t += cfg.cadence_seconds * (1.0 + cfg.jitter * (2.0 * jitter_u - 1.0));
  }
  result.series = TimeSeries(std::move(out), "synthetic");
  return result;
}

/// base_load + daily and weekly sinusoids + Gaussian noise, clipped at 0,
/// with optional spike/negative outliers and contiguous dropouts.
inline TimeSeries generate_synthetic(const SynthConfig& cfg) { return generate_synthetic_logged(cfg).series; }

}  // namespace wattcast

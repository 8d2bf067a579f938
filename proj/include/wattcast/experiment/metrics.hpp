#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "wattcast/dataset.hpp"
#include "wattcast/error.hpp"

namespace wattcast::experiment {

namespace detail {
inline void check_pair(const char* name, std::span<const double> y, std::span<const double> y_hat) {
  if (y.empty()) throw ConfigError(std::string(name) + ": empty input");
  if (y.size() != y_hat.size())
    throw ConfigError(std::string(name) + ": length mismatch (" + std::to_string(y.size()) + " vs " +
                      std::to_string(y_hat.size()) + ")");
}
}  // namespace detail

/// Mean absolute error, in the units of y.
inline double mae(std::span<const double> y, std::span<const double> y_hat) {
  detail::check_pair("mae", y, y_hat);
  double s = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) s += std::abs(y[j] - y_hat[j]);
  return s / static_cast<double>(y.size());
}

/// Root mean squared error, in the units of y.
inline double rmse(std::span<const double> y, std::span<const double> y_hat) {
  detail::check_pair("rmse", y, y_hat);
  double s = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double d = y[j] - y_hat[j];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(y.size()));
}

struct Scores {
  double mae = 0.0;
  double rmse = 0.0;
};

/// Scores predictions made on the normalized scale after mapping both
/// targets and predictions back to Watts.
inline Scores score_watts(const Scaler& scaler, std::span<const double> targets_normalized,
                          std::span<const double> predictions_normalized) {
  const auto y = scaler.invert(targets_normalized);
  const auto y_hat = scaler.invert(predictions_normalized);
  return {mae(y, y_hat), rmse(y, y_hat)};
}

/// Naive forecast: each target predicted by the last value of its window.
inline std::vector<double> persistence_forecast(const WindowTensor& w) {
  std::vector<double> out(w.n_samples);
  for (std::size_t i = 0; i < w.n_samples; ++i) out[i] = w.sample(i).back();
  return out;
}

}  // namespace wattcast::experiment

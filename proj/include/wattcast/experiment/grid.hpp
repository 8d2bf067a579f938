#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wattcast/error.hpp"
#include "wattcast/models/spec.hpp"

namespace wattcast::experiment {

using models::Family;
using models::ModelSpec;

inline std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// One value per grid dimension, in grid order.
struct TrialConfig {
  std::vector<std::pair<std::string, double>> values;
  std::uint64_t seed = 0;
  std::uint64_t grid_index = 0;

  double get(const std::string& name, double fallback) const {
    for (const auto& [k, v] : values)
      if (k == name) return v;
    return fallback;
  }

  /// `name=value` pairs joined by ';' in grid order.
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : values) {
      if (!s.empty()) s += ';';
      s += k + '=' + format_number(v);
    }
    return s;
  }

  friend bool operator==(const TrialConfig&, const TrialConfig&) = default;
};

/// Finite Cartesian grid of hyperparameter values.
class HyperGrid {
 public:
  using Dimension = std::pair<std::string, std::vector<double>>;

  HyperGrid() = default;
  explicit HyperGrid(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    for (const auto& [name, vals] : dims_)
      if (vals.empty()) throw ConfigError("grid: dimension '" + name + "' has no values");
  }

  const std::vector<Dimension>& dimensions() const noexcept { return dims_; }

  std::uint64_t cardinality() const {
    std::uint64_t n = 1;
    for (const auto& d : dims_) n *= d.second.size();
    return n;
  }

  /// Mixed-radix decode with the last dimension varying fastest.
  TrialConfig point(std::uint64_t index) const {
    if (index >= cardinality()) throw ConfigError("grid: index out of range");
    TrialConfig cfg;
    cfg.grid_index = index;
    cfg.values.resize(dims_.size());
    for (std::size_t d = dims_.size(); d-- > 0;) {
      const auto& vals = dims_[d].second;
      cfg.values[d] = {dims_[d].first, vals[index % vals.size()]};
      index /= vals.size();
    }
    return cfg;
  }

  bool contains(const TrialConfig& cfg) const {
    if (cfg.values.size() != dims_.size()) return false;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      if (cfg.values[d].first != dims_[d].first) return false;
      if (std::find(dims_[d].second.begin(), dims_[d].second.end(), cfg.values[d].second) == dims_[d].second.end())
        return false;
    }
    return true;
  }

  /// Replaces (or appends) the values of named dimensions.
  HyperGrid with_overrides(const std::map<std::string, std::vector<double>>& overrides) const {
    auto dims = dims_;
    for (const auto& [name, vals] : overrides) {
      auto it = std::find_if(dims.begin(), dims.end(), [&](const Dimension& d) { return d.first == name; });
      if (it == dims.end())
        dims.emplace_back(name, vals);
      else
        it->second = vals;
    }
    return HyperGrid(std::move(dims));
  }

 private:
  std::vector<Dimension> dims_;
};

/// Dimension names understood by apply_trial().
inline constexpr const char* kKnownDimensions[] = {"dropout",     "lstm_layers", "lstm_units", "mlp_units",
                                                   "learning_rate", "batch_size", "conv_blocks", "filters",
                                                   "channels",    "kernel_size"};

/// Default search space per family. The LSTM grid is the published one
/// (486 points); the others mirror its structure.
inline HyperGrid default_grid(Family f) {
  const std::vector<double> lr{1e-4, 1e-3, 1e-2};
  const std::vector<double> batch{32, 64, 256};
  switch (f) {
    case Family::lstm:
      return HyperGrid({{"dropout", {0.1, 0.2, 0.3}},
                        {"lstm_layers", {2, 3, 4}},
                        {"lstm_units", {64, 128, 256}},
                        {"mlp_units", {32, 64}},
                        {"learning_rate", lr},
                        {"batch_size", batch}});
    case Family::cnn:
      return HyperGrid({{"conv_blocks", {2, 3}},
                        {"filters", {32, 64, 128}},
                        {"kernel_size", {3, 5}},
                        {"mlp_units", {32, 64}},
                        {"learning_rate", lr},
                        {"batch_size", batch}});
    case Family::cnn_lstm:
      return HyperGrid({{"filters", {32, 64}},
                        {"kernel_size", {3, 5}},
                        {"lstm_layers", {1, 2}},
                        {"lstm_units", {64, 128}},
                        {"learning_rate", lr},
                        {"batch_size", batch}});
    case Family::tcn:
      return HyperGrid({{"channels", {32, 64}},
                        {"kernel_size", {3, 5}},
                        {"dropout", {0.1, 0.2, 0.3}},
                        {"learning_rate", lr},
                        {"batch_size", batch}});
  }
  return {};
}

/// Optimizer-side hyperparameters carried by a trial.
struct TrainingChoice {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
};

namespace detail {
inline std::size_t as_count(const std::string& name, double v) {
  if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("grid: '" + name + "' must be a positive integer");
  return static_cast<std::size_t>(v);
}
}  // namespace detail

/// Writes the trial's values into a copy of `base`.
inline std::pair<ModelSpec, TrainingChoice> apply_trial(const ModelSpec& base, const TrialConfig& trial) {
  ModelSpec spec = base;
  spec.seed = trial.seed;
  TrainingChoice choice;
  for (const auto& [name, v] : trial.values) {
    if (name == "dropout") spec.dropout = v;
    else if (name == "lstm_layers") spec.lstm_layers = detail::as_count(name, v);
    else if (name == "lstm_units") spec.lstm_units = detail::as_count(name, v);
    else if (name == "mlp_units") spec.mlp_units = detail::as_count(name, v);
    else if (name == "conv_blocks") spec.conv_blocks = detail::as_count(name, v);
    else if (name == "filters" || name == "channels") spec.filters = detail::as_count(name, v);
    else if (name == "kernel_size") spec.kernel_size = detail::as_count(name, v);
    else if (name == "learning_rate") {
      if (!(v > 0.0)) throw ConfigError("grid: learning_rate must be positive");
      choice.learning_rate = v;
    } else if (name == "batch_size") choice.batch_size = detail::as_count(name, v);
    else throw ConfigError("grid: unknown hyperparameter '" + name + "'");
  }
  return {spec, choice};
}

}  // namespace wattcast::experiment

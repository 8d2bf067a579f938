#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wattcast/cleaning.hpp"
#include "wattcast/dataset.hpp"
#include "wattcast/experiment/report.hpp"
#include "wattcast/experiment/search.hpp"

namespace wattcast::experiment {

/// Everything needed to run the (series x family x window) protocol.
struct MatrixConfig {
  CutoffConfig cutoff;
  ZScoreConfig zscore;
  AggregationConfig aggregation;
  SplitSpec split;
  bool context_prefix = true;
  std::vector<std::size_t> windows{12, 288, 2016};
  std::vector<Family> families{Family::lstm, Family::cnn, Family::cnn_lstm, Family::tcn};
  /// Per-family replacements of default_grid() dimensions.
  std::map<Family, std::map<std::string, std::vector<double>>> grid_overrides;
  TrainConfig train;
  std::size_t n_iter = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  /// Raw input is cleaned unless it is already an aggregated series.
  bool clean_input = true;

  HyperGrid grid_for(Family f) const {
    const auto it = grid_overrides.find(f);
    return it == grid_overrides.end() ? default_grid(f) : default_grid(f).with_overrides(it->second);
  }
};

/// Test-set predictions of one matrix cell, in Watts.
struct CellPredictions {
  std::string series;
  std::string algorithm;
  std::size_t window = 0;
  std::vector<Timestamp> times;
  std::vector<double> actual;
  std::vector<double> predicted;
};

struct MatrixResult {
  EvalReport report;
  std::vector<CellPredictions> predictions;
  std::vector<SearchResult> searches;  ///< one per successful cell, models stripped
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs one cell: prepare -> random search -> evaluate the best trial's
/// already-trained model on test. Wall-clock duration covers all of it.
inline EvalRow run_cell(const TimeSeries& cleaned, Family family, std::size_t window, const MatrixConfig& cfg,
                        CellPredictions* predictions, SearchResult* search_out) {
  EvalRow row;
  row.algorithm = std::string(models::family_display_name(family));
  row.window = window;
  row.series = cleaned.label();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const PreparedData data = prepare(cleaned, cfg.split, {.n_timesteps = window, .context_prefix = cfg.context_prefix});
    ModelSpec base;
    base.family = family;
    base.n_timesteps = window;
    auto search = random_search(base, cfg.grid_for(family), data, cfg.train,
                                {.n_iter = cfg.n_iter, .master_seed = cfg.seed, .jobs = cfg.jobs});
    auto& best = search.trials[search.best];
    row.best_config = best.config.canonical();
    if (!best.ok || !best.model) throw Error("all " + std::to_string(search.trials.size()) + " trials failed: " + best.error);
    const auto pred = best.model->predict(data.test);
    const auto s = score_watts(data.scaler, data.test.targets, pred);
    row.mae_watts = s.mae;
    row.rmse_watts = s.rmse;
    if (predictions != nullptr) {
      predictions->series = row.series;
      predictions->algorithm = row.algorithm;
      predictions->window = window;
      predictions->times = data.test.target_times;
      predictions->actual = data.scaler.invert(data.test.targets);
      predictions->predicted = data.scaler.invert(pred);
    }
    if (search_out != nullptr) {
      for (auto& t : search.trials) t.model.reset();
      *search_out = std::move(search);
    }
  } catch (const Error& e) {
    row.status = std::string("error: ") + e.what();
  }
  row.duration_minutes =
      std::chrono::duration<double, std::ratio<60>>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

/// For each series: clean once, then one row per (family, window). Failing
/// cells are reported with an error status; the rest proceed.
inline MatrixResult run_matrix(const std::vector<TimeSeries>& series, const MatrixConfig& cfg,
                               const ProgressFn& progress = {}) {
  cfg.train.validate();
  MatrixResult result;
  for (const auto& raw : series) {
    const TimeSeries cleaned =
        cfg.clean_input ? clean_pipeline(raw, cfg.cutoff, cfg.zscore, cfg.aggregation) : raw;
    for (Family family : cfg.families) {
      for (std::size_t window : cfg.windows) {
        if (progress)
          progress(raw.label() + " " + std::string(models::family_display_name(family)) + " window " +
                   std::to_string(window));
        CellPredictions pred;
        SearchResult search;
        EvalRow row = run_cell(cleaned, family, window, cfg, &pred, &search);
        if (row.ok()) {
          result.predictions.push_back(std::move(pred));
          result.searches.push_back(std::move(search));
        }
        result.report.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

}  // namespace wattcast::experiment

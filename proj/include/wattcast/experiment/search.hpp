#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "wattcast/experiment/grid.hpp"
#include "wattcast/experiment/metrics.hpp"
#include "wattcast/experiment/train.hpp"

namespace wattcast::experiment {

struct TrialResult {
  std::size_t index = 0;
  TrialConfig config;
  bool ok = false;
  std::string error;
  double val_mae = 0.0;   ///< Watts
  double val_rmse = 0.0;  ///< Watts
  TrainHistory history;
  std::optional<models::Forecaster> model;
};

struct SearchResult {
  std::vector<TrialResult> trials;
  std::size_t best = 0;

  const TrialResult& best_trial() const { return trials.at(best); }
};

/// Draws `n_iter` distinct grid indices uniformly, resampling on collision.
/// Trial i is seeded with master_seed ^ i.
inline std::vector<TrialConfig> sample_trials(const HyperGrid& grid, std::size_t n_iter, std::uint64_t master_seed) {
  const auto card = grid.cardinality();
  if (n_iter == 0) throw ConfigError("random_search: n_iter must be positive");
  if (n_iter > card)
    throw ConfigError("random_search: n_iter " + std::to_string(n_iter) + " exceeds grid size " +
                      std::to_string(card));
  Rng rng(master_seed);
  std::set<std::uint64_t> seen;
  std::vector<TrialConfig> out;
  while (out.size() < n_iter) {
    const auto idx = rng.index(card);
    if (!seen.insert(idx).second) continue;
    TrialConfig cfg = grid.point(idx);
    cfg.seed = master_seed ^ static_cast<std::uint64_t>(out.size());
    out.push_back(std::move(cfg));
  }
  return out;
}

/// Lowest validation MAE; ties by lower validation RMSE, then earlier index.
/// Failed trials never win unless all failed (then the first is returned).
inline std::size_t select_best(std::span<const TrialResult> trials) {
  if (trials.empty()) throw ConfigError("select_best: no trials");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    if (!t.ok) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = trials[*best];
    if (t.val_mae < b.val_mae || (t.val_mae == b.val_mae && t.val_rmse < b.val_rmse) ||
        (t.val_mae == b.val_mae && t.val_rmse == b.val_rmse && t.index < b.index))
      best = i;
  }
  return best.value_or(0);
}

/// Trains one configuration and scores it on validation in Watts.
inline TrialResult run_trial(const ModelSpec& base, const TrialConfig& cfg, std::size_t index,
                             const PreparedData& data, const TrainConfig& train_cfg) {
  TrialResult r;
  r.index = index;
  r.config = cfg;
  try {
    const auto [spec, choice] = apply_trial(base, cfg);
    models::Forecaster model(spec);
    r.history = train(model, data.train, data.validation, train_cfg, choice.learning_rate, choice.batch_size, cfg.seed);
    const auto pred = model.predict(data.validation);
    const auto s = score_watts(data.scaler, data.validation.targets, pred);
    r.val_mae = s.mae;
    r.val_rmse = s.rmse;
    r.ok = std::isfinite(s.mae) && std::isfinite(s.rmse);
    if (!r.ok) r.error = "non-finite validation score";
    r.model = std::move(model);
  } catch (const Error& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

struct SearchOptions {
  std::size_t n_iter = 10;
  std::uint64_t master_seed = 0;
  /// Worker threads; results do not depend on it.
  std::size_t jobs = 1;
  /// Drop the trained models of non-winning trials.
  bool keep_only_best_model = true;
};

/// Random search over `grid` for the architecture in `base` (whose family and
/// n_timesteps must already be set).
inline SearchResult random_search(const ModelSpec& base, const HyperGrid& grid, const PreparedData& data,
                                  const TrainConfig& train_cfg, const SearchOptions& opt) {
  const auto configs = sample_trials(grid, opt.n_iter, opt.master_seed);
  SearchResult result;
  result.trials.resize(configs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++)
      result.trials[i] = run_trial(base, configs[i], i, data, train_cfg);
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opt.jobs, configs.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  result.best = select_best(result.trials);
  if (opt.keep_only_best_model)
    for (std::size_t i = 0; i < result.trials.size(); ++i)
      if (i != result.best) result.trials[i].model.reset();
  return result;
}

}  // namespace wattcast::experiment

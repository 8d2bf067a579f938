#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "wattcast/dataset.hpp"
#include "wattcast/models/forecaster.hpp"
#include "wattcast/nn/adam.hpp"

namespace wattcast::experiment {

/// Epoch budget and early stopping. The loss is always MSE on the
/// normalized scale.
struct TrainConfig {
  std::size_t max_epochs = 100;
  std::size_t patience = 10;

  void validate() const {
    if (max_epochs == 0) throw ConfigError("train: max_epochs must be positive");
    if (patience == 0 || patience > max_epochs) throw ConfigError("train: patience must lie in [1, max_epochs]");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;  ///< mean of mini-batch losses over the epoch
  double val_mse = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_mse = std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
  bool stopped_early = false;
};

inline double mse_of(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

/// Mini-batch Adam on MSE. Each epoch is one pass over a fresh shuffle of
/// the training samples; after each epoch the validation MSE is measured and
/// training stops once it has not improved for `patience` epochs. The model
/// is left holding the parameters of the best validation epoch.
///
/// Throws DivergedError on a non-finite loss.
inline TrainHistory train(models::Forecaster& model, const WindowTensor& train_data, const WindowTensor& val_data,
                          const TrainConfig& cfg, double learning_rate, std::size_t batch_size, std::uint64_t seed) {
  cfg.validate();
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (train_data.n_samples == 0 || val_data.n_samples == 0) throw ConfigError("train: empty split");

  Rng rng(seed);
  nn::AdamState adam;
  const nn::AdamConfig adam_cfg{.lr = learning_rate};
  TrainHistory history;
  std::vector<nn::Param> best_params(model.params().all().begin(), model.params().all().end());
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_data.n_samples);
  const std::size_t T = train_data.n_timesteps;
  const std::size_t row = T * train_data.n_features;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t n = std::min(batch_size, order.size() - start);
      nn::Tensor inputs({n, T, train_data.n_features});
      nn::Tensor targets({n});
      for (std::size_t i = 0; i < n; ++i) {
        const auto src = train_data.sample(order[start + i]);
        std::copy(src.begin(), src.end(), inputs.raw() + i * row);
        targets[i] = train_data.targets[order[start + i]];
      }
      model.params().zero_grad();
      nn::Tape tape;
      const nn::Var pred = model.forward(tape, inputs, {.training = true, .rng = &rng});
      const nn::Var loss = nn::mse_loss(pred, targets);
      const double lv = loss.value().item();
      if (!std::isfinite(lv))
        throw DivergedError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(history.steps + 1));
      tape.backward(loss);
      nn::adam_step(model.params().all(), adam, adam_cfg);
      loss_sum += lv;
      ++batches;
      ++history.steps;
    }

    const auto val_pred = model.predict(val_data);
    const double val_mse = mse_of(val_data.targets, val_pred);
    if (!std::isfinite(val_mse)) throw DivergedError("non-finite validation loss at epoch " + std::to_string(epoch));
    history.epochs.push_back({epoch, loss_sum / static_cast<double>(batches), val_mse});
    if (val_mse < history.best_val_mse) {
      history.best_val_mse = val_mse;
      history.best_epoch = epoch;
      since_best = 0;
      const auto current = model.params().all();
      std::copy(current.begin(), current.end(), best_params.begin());
    } else if (++since_best >= cfg.patience) {
      history.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }

  auto current = model.params().all();
  for (std::size_t i = 0; i < current.size(); ++i) current[i].value = best_params[i].value;
  return history;
}

}  // namespace wattcast::experiment

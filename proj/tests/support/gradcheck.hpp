#pragma once

// Central finite-difference gradient checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "wattcast/models/forecaster.hpp"
#include "wattcast/nn/ops.hpp"

namespace gradcheck {

using wattcast::Rng;
using wattcast::nn::Tape;
using wattcast::nn::Tensor;
using wattcast::nn::Var;

inline constexpr double kStep = 1e-6;

/// ||a - n||_2 / max(||a||_2, ||n||_2, floor).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& n, double floor = 1e-10) {
  double diff = 0, na = 0, nn_ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn_ += n[i] * n[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn_), floor});
}

inline Tensor random_tensor(wattcast::nn::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Builds a graph from leaf inputs; must return a scalar.
using Graph = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Reduces any output to a scalar via a fixed random projection so every
/// output element contributes a distinct weight.
inline Var project(Var out, const Tensor& weights) {
  return wattcast::nn::sum(wattcast::nn::mul(out, out.tape->constant(weights)));
}

/// Worst relative error over all inputs between the tape gradient and
/// central differences of `graph`.
inline double check(const Graph& graph, std::vector<Tensor> inputs) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.variable(t));
  const Var loss = graph(tape, leaves);
  tape.backward(loss);

  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = tape.grad(leaves[k]);
    std::vector<double> a(analytic.data().begin(), analytic.data().end()), n(a.size());
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double orig = inputs[k][i];
      const auto eval = [&](double v) {
        inputs[k][i] = v;
        Tape t(false);
        std::vector<Var> ls;
        for (const auto& x : inputs) ls.push_back(t.constant(x));
        return graph(t, ls).value().item();
      };
      n[i] = (eval(orig + kStep) - eval(orig - kStep)) / (2 * kStep);
      inputs[k][i] = orig;
    }
    worst = std::max(worst, relative_error(a, n));
  }
  return worst;
}

/// Checks d(MSE)/d(param) for `coords` randomly chosen parameter entries of
/// a model. When `training`, dropout masks are replayed from `dropout_seed`.
inline double check_model(wattcast::models::Forecaster& model, const Tensor& inputs, const Tensor& targets,
                          std::size_t coords, Rng& pick, bool training, std::uint64_t dropout_seed) {
  const auto loss_value = [&] {
    Rng rng(dropout_seed);
    Tape t(false);
    Var y = model.forward(t, inputs, {.training = training, .rng = &rng});
    return wattcast::nn::mse_loss(y, targets).value().item();
  };
  model.params().zero_grad();
  {
    Rng rng(dropout_seed);
    Tape t;
    Var y = model.forward(t, inputs, {.training = training, .rng = &rng});
    t.backward(wattcast::nn::mse_loss(y, targets));
  }
  auto params = model.params().all();
  std::vector<double> a, n;
  for (std::size_t c = 0; c < coords; ++c) {
    auto& p = params[pick.index(params.size())];
    const std::size_t i = pick.index(p.value.size());
    const double orig = p.value[i];
    p.value[i] = orig + kStep;
    const double up = loss_value();
    p.value[i] = orig - kStep;
    const double down = loss_value();
    p.value[i] = orig;
    a.push_back(p.grad[i]);
    n.push_back((up - down) / (2 * kStep));
  }
  return relative_error(a, n);
}

}  // namespace gradcheck

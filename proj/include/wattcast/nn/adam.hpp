#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "wattcast/nn/tape.hpp"

namespace wattcast::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates per parameter plus the shared step count.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
};

/// One bias-corrected Adam update using each param's accumulated gradient.
/// Moment buffers are created on the first call.
inline void adam_step(std::span<Param> params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (const Param& p : params) {
      state.m.emplace_back(p.value.shape());
      state.v.emplace_back(p.value.shape());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameter list");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = params[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    if (m.shape() != p.value.shape()) throw ShapeError("adam_step: moment shape mismatch for " + p.id);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p.value[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

}  // namespace wattcast::nn

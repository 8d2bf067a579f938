#pragma once

#include <cmath>

#include "wattcast/nn/tensor.hpp"
#include "wattcast/random.hpp"

namespace wattcast::nn {

/// Uniform in [-limit, limit] with limit = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

}  // namespace wattcast::nn

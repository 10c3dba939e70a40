#pragma once

#include <cstdint>
#include <span>

#include "romo/nn/matrix.hpp"
#include "romo/nn/mlp.hpp"

namespace romo {

struct AdamState {
  AdamState() = default;
  explicit AdamState(std::size_t num_params, double learning_rate = 1e-3)
      : m(num_params, 0.0), v(num_params, 0.0), lr(learning_rate) {}

  Vector m;
  Vector v;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam step. Gradients are checked for finiteness per
/// segment first; a NonFiniteError names the first offending tensor and
/// leaves params and state untouched.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::span<const ParamSegment> segments = {});

}  // namespace romo

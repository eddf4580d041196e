#pragma once

#include <vector>

#include "lagdyn/net.hpp"

namespace lagdyn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moment accumulators, one pair per parameter tensor.
struct OptimizerState {
  AdamConfig config;
  std::vector<Vec> first_moment;
  std::vector<Vec> second_moment;
  long step_count = 0;
};

OptimizerState make_optimizer_state(const std::vector<net::TensorRef>& tensors, const AdamConfig& config = {});

/// One bias-corrected Adam update over `tensors`; zeroes the gradient slots
/// afterwards. Throws ShapeMismatch if `state` was built for other tensors.
void adam_step(const std::vector<net::TensorRef>& tensors, OptimizerState& state);

}  // namespace lagdyn

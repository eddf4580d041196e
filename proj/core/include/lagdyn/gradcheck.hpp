#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lagdyn/net.hpp"

namespace lagdyn {

struct GradcheckOptions {
  double step = 1e-6;
  /// Number of coordinates to probe, spread across tensors round-robin.
  /// Zero probes every coordinate.
  std::size_t samples = 200;
  std::uint64_t seed = 0;
  /// Denominator floor: err = |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  /// Coordinates whose stencil crosses a kink (rectifier switch, mask edge)
  /// are skipped when set. Detection compares second differences at h/2, h
  /// and 2h, which scale linearly in h only where f is smooth.
  bool skip_kinks = true;
};

struct GradcheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;  ///< compared coordinates, skipped ones excluded
  std::size_t skipped = 0;
  std::string worst_tensor;
  Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Objective evaluated at the current tensor values. When `with_gradient` is
/// true it must also accumulate ∂f/∂θ into the (pre-zeroed) gradient slots.
using Objective = std::function<double(bool with_gradient)>;

/// Compares reverse-mode gradients against central differences with the
/// given step on a sampled coordinate subset. Restores every perturbed value
/// and leaves the analytic gradient in the slots.
GradcheckReport gradcheck(const Objective& objective, const std::vector<net::TensorRef>& tensors,
                          const GradcheckOptions& options = {});

}  // namespace lagdyn

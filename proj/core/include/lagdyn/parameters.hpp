#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lagdyn/net.hpp"

namespace lagdyn {

/// Architecture of a ParameterBundle. Everything needed to rebuild the
/// tensors of a checkpoint.
struct BundleShape {
  Index dof = 2;            ///< D
  Index hidden_width = 128;
  Index hidden_layers = 2;
  Index channels = 64;      ///< C, width of gated feature maps
  Index stages = 4;         ///< L
  Index kernel_size = 3;    ///< gate convolution length

  bool operator==(const BundleShape&) const = default;
};

/// One gate-refinement convolution: kernel plus scalar bias (stored 1 × 1).
struct GateConv {
  Vec kernel;
  Vec bias;
  Vec kernel_grad;
  Vec bias_grad;
};

/// Parameters of one gating stage: a convolution per salient signal
/// (power, torque, torque change) and the 1×1 fuse projection 3C → C.
struct GateStageParams {
  std::array<GateConv, 3> gates;
  Mat fuse_weight;  ///< C × 3C
  Vec fuse_bias;    ///< C
  Mat fuse_weight_grad;
  Vec fuse_bias_grad;
};

/// Every trainable tensor of the model with a gradient slot per tensor.
///
/// The four estimators map q (inertia, gravity) or concat(q, q̇) (coriolis,
/// friction) to packed Lagrangian terms.
struct ParameterBundle {
  BundleShape shape;
  net::DenseEstimator inertia;   ///< D → D(D+1)/2 lower-triangular factor entries
  net::DenseEstimator coriolis;  ///< 2D → D(D-1)/2 strictly-upper skew entries
  net::DenseEstimator gravity;   ///< D → D
  net::DenseEstimator friction;  ///< 2D → D
  std::vector<GateStageParams> stages;

  /// Seeded Glorot-uniform initialization; biases zero.
  static ParameterBundle initialize(const BundleShape& shape, std::uint64_t seed);

  /// Fixed-order named views over all tensors (estimators first, then stages).
  std::vector<net::TensorRef> tensors();

  void zero_grad();
  Index parameter_count();
};

}  // namespace lagdyn

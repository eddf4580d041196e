#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lagdyn/error.hpp"
#include "lagdyn/types.hpp"

namespace lagdyn::net {

// Activations ---------------------------------------------------------------

/// ln(1 + eˣ), overflow-safe: max(x, 0) + log1p(e^-|x|).
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// d softplus / dx.
inline double softplus_grad(double x) { return sigmoid(x); }
inline double sigmoid_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}
inline double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

enum class Activation { Identity, Relu };

// Parameter views -----------------------------------------------------------

/// Named view of one parameter tensor and its gradient slot. Both point into
/// storage owned elsewhere and share the shape rows × cols.
struct TensorRef {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  double* value = nullptr;
  double* grad = nullptr;

  Index size() const { return rows * cols; }
  std::span<double> values() const { return {value, static_cast<std::size_t>(size())}; }
  std::span<double> grads() const { return {grad, static_cast<std::size_t>(size())}; }
};

/// Glorot-uniform draw in ±√(6 / (fan_in + fan_out)).
void glorot_uniform(Eigen::Ref<Mat> w, Index fan_in, Index fan_out, std::mt19937_64& rng);

// Dense estimator -----------------------------------------------------------

struct DenseLayer {
  Mat weight;  ///< out × in
  Vec bias;    ///< out
  Mat weight_grad;
  Vec bias_grad;
  Activation activation = Activation::Identity;

  Index in() const { return weight.cols(); }
  Index out() const { return weight.rows(); }
};

/// Values recorded by a forward pass, consumed by backward().
struct EstimatorTape {
  std::vector<RowMat> inputs;          ///< input of each layer, batch × in
  std::vector<RowMat> preactivations;  ///< batch × out

  bool empty() const { return inputs.empty(); }
  void clear() {
    inputs.clear();
    preactivations.clear();
  }
};

/// Feed-forward estimator: affine layers, rectifier on hidden layers and
/// identity on the output layer.
class DenseEstimator {
 public:
  DenseEstimator() = default;

  /// widths = (input, hidden..., output). Weights Glorot-uniform, biases zero.
  DenseEstimator(std::vector<Index> widths, std::mt19937_64& rng);

  Index input_width() const { return layers_.empty() ? 0 : layers_.front().in(); }
  Index output_width() const { return layers_.empty() ? 0 : layers_.back().out(); }
  std::vector<Index> widths() const;

  /// One sample.
  Vec apply(const Vec& input) const;

  /// A batch, one sample per row.
  RowMat apply(const RowMat& input) const;

  /// Batch forward that records what backward() needs.
  RowMat forward(const RowMat& input, EstimatorTape& tape) const;

  /// Reverse pass. Accumulates ∂loss/∂θ into the gradient slots given
  /// `output_grad` = ∂loss/∂output and returns ∂loss/∂input.
  /// Throws TapeMissing if `tape` holds no forward pass.
  RowMat backward(const EstimatorTape& tape, const RowMat& output_grad);

  void zero_grad();
  void append_tensors(const std::string& prefix, std::vector<TensorRef>& out);

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  void check_input(Index width) const;

  std::vector<DenseLayer> layers_;
};

// Temporal convolution ------------------------------------------------------

/// Same-length 1-D cross-correlation with symmetric zero padding:
/// out[t] = bias + Σᵢ kernel[i] · x[t + i - K/2]. The kernel length K must be odd.
Vec conv1d(const Vec& signal, const Vec& kernel, double bias);

/// Reverse of conv1d. Accumulates into kernel_grad and bias_grad and returns
/// ∂loss/∂signal.
Vec conv1d_backward(const Vec& signal, const Vec& kernel, const Vec& output_grad, Vec& kernel_grad,
                    double& bias_grad);

}  // namespace lagdyn::net

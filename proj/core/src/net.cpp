#include "lagdyn/net.hpp"

#include <sstream>

namespace lagdyn::net {

void glorot_uniform(Eigen::Ref<Mat> w, Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const Index fans = fan_in + fan_out;
  const double limit = fans > 0 ? std::sqrt(6.0 / static_cast<double>(fans)) : 0.0;
  std::uniform_real_distribution<double> dist(-limit, limit);
  // Column-major fill order is part of the determinism contract.
  for (Index c = 0; c < w.cols(); ++c) {
    for (Index r = 0; r < w.rows(); ++r) {
      w(r, c) = dist(rng);
    }
  }
}

DenseEstimator::DenseEstimator(std::vector<Index> widths, std::mt19937_64& rng) {
  if (widths.size() < 2) {
    throw ShapeMismatch("an estimator needs at least input and output widths");
  }
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    const Index in = widths[l];
    const Index out = widths[l + 1];
    layer.weight.resize(out, in);
    glorot_uniform(layer.weight, in, out, rng);
    layer.bias = Vec::Zero(out);
    layer.weight_grad = Mat::Zero(out, in);
    layer.bias_grad = Vec::Zero(out);
    layer.activation = (l + 2 == widths.size()) ? Activation::Identity : Activation::Relu;
    layers_.push_back(std::move(layer));
  }
}

std::vector<Index> DenseEstimator::widths() const {
  std::vector<Index> w;
  if (layers_.empty()) {
    return w;
  }
  w.push_back(layers_.front().in());
  for (const auto& layer : layers_) {
    w.push_back(layer.out());
  }
  return w;
}

void DenseEstimator::check_input(Index width) const {
  if (width != input_width()) {
    std::ostringstream msg;
    msg << "estimator expects input width " << input_width() << ", got " << width;
    throw ShapeMismatch(msg.str());
  }
}

Vec DenseEstimator::apply(const Vec& input) const {
  check_input(input.size());
  Vec x = input;
  for (const auto& layer : layers_) {
    Vec z = layer.weight * x + layer.bias;
    if (layer.activation == Activation::Relu) {
      z = z.unaryExpr([](double v) { return relu(v); });
    }
    x = std::move(z);
  }
  return x;
}

RowMat DenseEstimator::apply(const RowMat& input) const {
  check_input(input.cols());
  RowMat x = input;
  for (const auto& layer : layers_) {
    RowMat z = x * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (layer.activation == Activation::Relu) {
      z = z.cwiseMax(0.0);
    }
    x = std::move(z);
  }
  return x;
}

RowMat DenseEstimator::forward(const RowMat& input, EstimatorTape& tape) const {
  check_input(input.cols());
  tape.clear();
  RowMat x = input;
  for (const auto& layer : layers_) {
    RowMat z = x * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    tape.inputs.push_back(std::move(x));
    if (layer.activation == Activation::Relu) {
      x = z.cwiseMax(0.0);
    } else {
      x = z;
    }
    tape.preactivations.push_back(std::move(z));
  }
  return x;
}

RowMat DenseEstimator::backward(const EstimatorTape& tape, const RowMat& output_grad) {
  if (tape.empty() || tape.inputs.size() != layers_.size()) {
    throw TapeMissing("estimator backward called without a recorded forward pass");
  }
  if (output_grad.cols() != output_width() || output_grad.rows() != tape.inputs.front().rows()) {
    throw ShapeMismatch("output gradient does not match the recorded forward pass");
  }
  RowMat grad = output_grad;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    auto& layer = layers_[k];
    if (layer.activation == Activation::Relu) {
      grad = grad.cwiseProduct(
          tape.preactivations[k].unaryExpr([](double v) { return relu_grad(v); }));
    }
    layer.weight_grad.noalias() += grad.transpose() * tape.inputs[k];
    layer.bias_grad += grad.colwise().sum().transpose();
    RowMat next = grad * layer.weight;
    grad = std::move(next);
  }
  return grad;
}

void DenseEstimator::zero_grad() {
  for (auto& layer : layers_) {
    layer.weight_grad.setZero();
    layer.bias_grad.setZero();
  }
}

void DenseEstimator::append_tensors(const std::string& prefix, std::vector<TensorRef>& out) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    auto& layer = layers_[k];
    const std::string base = prefix + ".layer" + std::to_string(k);
    out.push_back({base + ".weight", layer.weight.rows(), layer.weight.cols(), layer.weight.data(),
                   layer.weight_grad.data()});
    out.push_back({base + ".bias", layer.bias.size(), 1, layer.bias.data(), layer.bias_grad.data()});
  }
}

Vec conv1d(const Vec& signal, const Vec& kernel, double bias) {
  if (kernel.size() % 2 == 0) {
    throw ShapeMismatch("conv1d kernel length must be odd");
  }
  const Index n = signal.size();
  const Index half = kernel.size() / 2;
  Vec out = Vec::Constant(n, bias);
  for (Index t = 0; t < n; ++t) {
    for (Index i = 0; i < kernel.size(); ++i) {
      const Index s = t + i - half;
      if (s >= 0 && s < n) {
        out(t) += kernel(i) * signal(s);
      }
    }
  }
  return out;
}

Vec conv1d_backward(const Vec& signal, const Vec& kernel, const Vec& output_grad, Vec& kernel_grad,
                    double& bias_grad) {
  const Index n = signal.size();
  const Index half = kernel.size() / 2;
  Vec signal_grad = Vec::Zero(n);
  for (Index t = 0; t < n; ++t) {
    const double g = output_grad(t);
    bias_grad += g;
    for (Index i = 0; i < kernel.size(); ++i) {
      const Index s = t + i - half;
      if (s >= 0 && s < n) {
        kernel_grad(i) += g * signal(s);
        signal_grad(s) += g * kernel(i);
      }
    }
  }
  return signal_grad;
}

}  // namespace lagdyn::net

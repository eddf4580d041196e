#include "lagdyn/parameters.hpp"

namespace lagdyn {

namespace {

std::vector<Index> estimator_widths(Index in, Index out, const BundleShape& shape) {
  std::vector<Index> w{in};
  for (Index l = 0; l < shape.hidden_layers; ++l) {
    w.push_back(shape.hidden_width);
  }
  w.push_back(out);
  return w;
}

}  // namespace

ParameterBundle ParameterBundle::initialize(const BundleShape& shape, std::uint64_t seed) {
  if (shape.dof < 1 || shape.hidden_width < 1 || shape.hidden_layers < 0 || shape.channels < 1 ||
      shape.stages < 0 || shape.kernel_size < 1 || shape.kernel_size % 2 == 0) {
    throw ShapeMismatch("invalid bundle shape");
  }
  std::mt19937_64 rng(seed);
  const Index d = shape.dof;
  ParameterBundle b;
  b.shape = shape;
  b.inertia = net::DenseEstimator(estimator_widths(d, d * (d + 1) / 2, shape), rng);
  b.coriolis = net::DenseEstimator(estimator_widths(2 * d, d * (d - 1) / 2, shape), rng);
  b.gravity = net::DenseEstimator(estimator_widths(d, d, shape), rng);
  b.friction = net::DenseEstimator(estimator_widths(2 * d, d, shape), rng);

  const Index c = shape.channels;
  for (Index s = 0; s < shape.stages; ++s) {
    GateStageParams stage;
    for (auto& g : stage.gates) {
      Mat k(shape.kernel_size, 1);
      net::glorot_uniform(k, shape.kernel_size, shape.kernel_size, rng);
      g.kernel = k.col(0);
      g.bias = Vec::Zero(1);
      g.kernel_grad = Vec::Zero(shape.kernel_size);
      g.bias_grad = Vec::Zero(1);
    }
    stage.fuse_weight.resize(c, 3 * c);
    net::glorot_uniform(stage.fuse_weight, 3 * c, c, rng);
    stage.fuse_bias = Vec::Zero(c);
    stage.fuse_weight_grad = Mat::Zero(c, 3 * c);
    stage.fuse_bias_grad = Vec::Zero(c);
    b.stages.push_back(std::move(stage));
  }
  return b;
}

std::vector<net::TensorRef> ParameterBundle::tensors() {
  std::vector<net::TensorRef> out;
  inertia.append_tensors("inertia", out);
  coriolis.append_tensors("coriolis", out);
  gravity.append_tensors("gravity", out);
  friction.append_tensors("friction", out);
  static constexpr std::array<const char*, 3> kSignal{"power", "torque", "torque_change"};
  for (std::size_t s = 0; s < stages.size(); ++s) {
    auto& st = stages[s];
    const std::string base = "stage" + std::to_string(s);
    for (std::size_t k = 0; k < 3; ++k) {
      auto& g = st.gates[k];
      const std::string gb = base + ".gate_" + kSignal[k];
      out.push_back({gb + ".kernel", g.kernel.size(), 1, g.kernel.data(), g.kernel_grad.data()});
      out.push_back({gb + ".bias", 1, 1, g.bias.data(), g.bias_grad.data()});
    }
    out.push_back({base + ".fuse.weight", st.fuse_weight.rows(), st.fuse_weight.cols(),
                   st.fuse_weight.data(), st.fuse_weight_grad.data()});
    out.push_back({base + ".fuse.bias", st.fuse_bias.size(), 1, st.fuse_bias.data(),
                   st.fuse_bias_grad.data()});
  }
  return out;
}

void ParameterBundle::zero_grad() {
  for (auto& t : tensors()) {
    std::fill(t.grad, t.grad + t.size(), 0.0);
  }
}

Index ParameterBundle::parameter_count() {
  Index n = 0;
  for (const auto& t : tensors()) {
    n += t.size();
  }
  return n;
}

}  // namespace lagdyn

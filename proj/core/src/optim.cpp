#include "lagdyn/optim.hpp"

#include <cmath>

namespace lagdyn {

OptimizerState make_optimizer_state(const std::vector<net::TensorRef>& tensors, const AdamConfig& config) {
  OptimizerState state;
  state.config = config;
  for (const auto& t : tensors) {
    state.first_moment.push_back(Vec::Zero(t.size()));
    state.second_moment.push_back(Vec::Zero(t.size()));
  }
  return state;
}

void adam_step(const std::vector<net::TensorRef>& tensors, OptimizerState& state) {
  if (tensors.size() != state.first_moment.size()) {
    throw ShapeMismatch("optimizer state does not match the parameter tensors");
  }
  const auto& cfg = state.config;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const auto& tensor = tensors[k];
    Vec& m = state.first_moment[k];
    Vec& v = state.second_moment[k];
    if (m.size() != tensor.size()) {
      throw ShapeMismatch("optimizer moment shape differs for " + tensor.name);
    }
    for (Index i = 0; i < tensor.size(); ++i) {
      const double g = tensor.grad[i];
      m(i) = cfg.beta1 * m(i) + (1.0 - cfg.beta1) * g;
      v(i) = cfg.beta2 * v(i) + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m(i) / correction1;
      const double v_hat = v(i) / correction2;
      tensor.value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      tensor.grad[i] = 0.0;
    }
  }
}

}  // namespace lagdyn

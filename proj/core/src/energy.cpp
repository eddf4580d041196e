#include "lagdyn/energy.hpp"

#include <cmath>

namespace lagdyn::energy {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

void check_shapes(const RowMat& a, const RowMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeMismatch("energy inputs differ in shape");
  }
}

}  // namespace

double EnergyTrace::mean_abs_residual() const {
  if (frames() < 2) {
    return 0.0;
  }
  return residual.tail(frames() - 1).cwiseAbs().mean();
}

Vec kinetic_energy(const RowMat& inertia, const RowMat& qdot) {
  const Index dof = qdot.cols();
  if (inertia.rows() != qdot.rows() || inertia.cols() != dof * dof) {
    throw ShapeMismatch("inertia and velocity differ in shape");
  }
  Vec e(qdot.rows());
  for (Index t = 0; t < qdot.rows(); ++t) {
    ConstSquareMap m(inertia.row(t).data(), dof, dof);
    const auto v = qdot.row(t);
    e(t) = 0.5 * v.dot(m * v.transpose());
  }
  return e;
}

PowerWork power_and_work(const RowMat& tau, const RowMat& gravity, const RowMat& friction, const RowMat& qdot) {
  check_shapes(tau, gravity);
  check_shapes(tau, friction);
  check_shapes(tau, qdot);
  const Index frames = tau.rows();
  PowerWork pw;
  pw.power = (tau - gravity - friction).cwiseProduct(qdot).rowwise().sum();
  pw.work = Vec::Zero(frames);
  for (Index t = 1; t < frames; ++t) {
    pw.work(t) = 0.5 * (pw.power(t) + pw.power(t - 1));
  }
  return pw;
}

double huber(double r, double knee) {
  const double a = std::abs(r);
  return a <= knee ? 0.5 * r * r : knee * (a - 0.5 * knee);
}

double huber_grad(double r, double knee) {
  return std::abs(r) <= knee ? r : knee * sign(r);
}

EnergyTrace energy_trace(const dynamics::DynamicTerms& terms, const GeneralizedState& state,
                         const EnergyOptions& options) {
  if (terms.tau.rows() != terms.frames()) {
    throw ShapeMismatch("energy trace needs synthesized τ");
  }
  EnergyTrace tr;
  tr.kinetic = kinetic_energy(terms.inertia, state.qdot);
  auto pw = power_and_work(terms.tau, terms.gravity, terms.friction, state.qdot);
  tr.power = std::move(pw.power);
  tr.work = std::move(pw.work);
  const Index frames = terms.frames();
  tr.kinetic_change = Vec::Zero(frames);
  tr.residual = Vec::Zero(frames);
  tr.mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(frames, false);
  for (Index t = 1; t < frames; ++t) {
    const double de = tr.kinetic(t) - tr.kinetic(t - 1);
    const double w = tr.work(t);
    tr.kinetic_change(t) = de;
    const double s = std::abs(de) + std::abs(w);
    const double den = s + options.delta;
    tr.mask(t) = !(s < options.mask_threshold) && den > 0.0;
    tr.residual(t) = tr.mask(t) ? (de - w) / den : 0.0;
  }
  return tr;
}

double energy_consistency_loss(const dynamics::DynamicTerms& terms, const GeneralizedState& state,
                               const EnergyOptions& options) {
  if (terms.frames() < 2) {
    throw DegenerateLength("energy consistency needs at least two frames");
  }
  const auto tr = energy_trace(terms, state, options);
  double sum = 0.0;
  for (Index t = 1; t < tr.frames(); ++t) {
    sum += huber(tr.residual(t), options.huber_knee);
  }
  return sum / static_cast<double>(tr.frames() - 1);
}

double energy_consistency_loss(const dynamics::DynamicTerms& terms, const GeneralizedState& state,
                               const EnergyOptions& options, dynamics::TermGradients& grads, double scale,
                               EnergyTrace* trace) {
  if (terms.frames() < 2) {
    throw DegenerateLength("energy consistency needs at least two frames");
  }
  auto tr = energy_trace(terms, state, options);
  const Index frames = tr.frames();
  const Index dof = terms.dof;
  const double norm = 1.0 / static_cast<double>(frames - 1);

  double sum = 0.0;
  Vec d_kinetic = Vec::Zero(frames);
  Vec d_power = Vec::Zero(frames);
  for (Index t = 1; t < frames; ++t) {
    const double r = tr.residual(t);
    sum += huber(r, options.huber_knee);
    if (!tr.mask(t)) {
      continue;
    }
    const double de = tr.kinetic_change(t);
    const double w = tr.work(t);
    const double num = de - w;
    const double den = std::abs(de) + std::abs(w) + options.delta;
    const double g = scale * norm * huber_grad(r, options.huber_knee);
    const double g_de = g * (1.0 / den - num * sign(de) / (den * den));
    const double g_w = g * (-1.0 / den - num * sign(w) / (den * den));
    d_kinetic(t) += g_de;
    d_kinetic(t - 1) -= g_de;
    d_power(t) += 0.5 * g_w;
    d_power(t - 1) += 0.5 * g_w;
  }

  for (Index t = 0; t < frames; ++t) {
    const auto v = state.qdot.row(t);
    if (d_kinetic(t) != 0.0) {
      SquareMap dm(grads.inertia.row(t).data(), dof, dof);
      dm.noalias() += (0.5 * d_kinetic(t)) * (v.transpose() * v);
    }
    if (d_power(t) != 0.0) {
      grads.tau.row(t) += d_power(t) * v;
      grads.gravity.row(t) -= d_power(t) * v;
      grads.friction.row(t) -= d_power(t) * v;
    }
  }
  if (trace != nullptr) {
    *trace = std::move(tr);
  }
  return sum * norm;
}

}  // namespace lagdyn::energy

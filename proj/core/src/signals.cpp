#include "lagdyn/signals.hpp"

#include <algorithm>
#include <cmath>

#include "lagdyn/net.hpp"

namespace lagdyn::signals {

GateSignals salient_signals(const RowMat& tau, const RowMat& qdot) {
  if (tau.rows() != qdot.rows() || tau.cols() != qdot.cols()) {
    throw ShapeMismatch("τ and q̇ differ in shape");
  }
  const Index frames = tau.rows();
  GateSignals s;
  s.stage0.resize(3, frames);
  for (Index t = 0; t < frames; ++t) {
    s.stage0(kPower, t) = tau.row(t).cwiseProduct(qdot.row(t)).lpNorm<1>();
    s.stage0(kTorque, t) = tau.row(t).norm();
    s.stage0(kTorqueChange, t) = t == 0 ? 0.0 : (tau.row(t) - tau.row(t - 1)).norm();
  }
  return s;
}

GateStageOutput gate_stage(const Mat& features, const Mat& gates_in, const GateStageParams& params,
                           GateStageTape* tape) {
  const Index channels = features.rows();
  const Index frames = features.cols();
  if (gates_in.rows() != 3 || gates_in.cols() != frames) {
    throw ShapeMismatch("gate input must be 3 × T");
  }
  if (params.fuse_weight.rows() != channels || params.fuse_weight.cols() != 3 * channels ||
      params.fuse_bias.size() != channels) {
    throw ShapeMismatch("fuse projection does not match the feature channels");
  }
  GateStageOutput out;
  out.gates.resize(3, frames);
  for (Index k = 0; k < 3; ++k) {
    const auto& g = params.gates[static_cast<std::size_t>(k)];
    const Vec z = net::conv1d(gates_in.row(k).transpose(), g.kernel, g.bias(0));
    out.gates.row(k) = z.unaryExpr([](double v) { return net::sigmoid(v); }).transpose();
  }

  out.features = features;
  out.features.colwise() += params.fuse_bias;
  for (Index k = 0; k < 3; ++k) {
    const Mat modulated = features * out.gates.row(k).asDiagonal();
    out.features.noalias() += params.fuse_weight.middleCols(k * channels, channels) * modulated;
  }

  if (tape != nullptr) {
    tape->features = features;
    tape->gates_in = gates_in;
    tape->gates_out = out.gates;
    tape->recorded = true;
  }
  return out;
}

GateStageInputGrad gate_stage_backward(GateStageParams& params, const GateStageTape& tape,
                                       const Mat& features_grad, const Mat& gates_grad) {
  if (!tape.recorded) {
    throw TapeMissing("gate stage backward called without a recorded forward pass");
  }
  const Index channels = tape.features.rows();
  GateStageInputGrad in;
  in.features = features_grad;  // residual path
  in.gates_in.resize(3, tape.features.cols());
  params.fuse_bias_grad += features_grad.rowwise().sum();

  for (Index k = 0; k < 3; ++k) {
    const auto w = params.fuse_weight.middleCols(k * channels, channels);
    const auto g = tape.gates_out.row(k);
    params.fuse_weight_grad.middleCols(k * channels, channels).noalias() +=
        features_grad * (tape.features * g.asDiagonal()).transpose();
    const Mat back = w.transpose() * features_grad;  // ∂/∂(H ⊙ g_k)
    in.features.noalias() += back * g.asDiagonal();

    // ∂/∂g_k(t) = Σ_c back(c, t) H(c, t), plus the direct gate gradient.
    Vec d_gate = back.cwiseProduct(tape.features).colwise().sum().transpose();
    d_gate += gates_grad.row(k).transpose();
    const Vec d_pre = d_gate.cwiseProduct(g.transpose().cwiseProduct((1.0 - g.array()).matrix().transpose()));
    auto& conv = params.gates[static_cast<std::size_t>(k)];
    double bias_grad = 0.0;
    in.gates_in.row(k) =
        net::conv1d_backward(tape.gates_in.row(k).transpose(), conv.kernel, d_pre, conv.kernel_grad, bias_grad)
            .transpose();
    conv.bias_grad(0) += bias_grad;
  }
  return in;
}

GatingResult run_gating(const Mat& features, const Mat& stage0, std::span<const GateStageParams> stages,
                        std::vector<GateStageTape>* tapes) {
  GatingResult result;
  if (tapes != nullptr) {
    tapes->assign(stages.size(), GateStageTape{});
  }
  Mat h = features;
  Mat g = stage0;
  for (std::size_t l = 0; l < stages.size(); ++l) {
    auto out = gate_stage(h, g, stages[l], tapes != nullptr ? &(*tapes)[l] : nullptr);
    h = out.features;
    g = out.gates;
    result.features.push_back(std::move(out.features));
    result.gates.push_back(std::move(out.gates));
  }
  return result;
}

void refine_gates(GateSignals& signals, std::span<const GateStageParams> stages) {
  signals.refined.clear();
  Mat g = signals.stage0;
  for (const auto& stage : stages) {
    Mat next(3, g.cols());
    for (Index k = 0; k < 3; ++k) {
      const auto& conv = stage.gates[static_cast<std::size_t>(k)];
      const Vec z = net::conv1d(g.row(k).transpose(), conv.kernel, conv.bias(0));
      next.row(k) = z.unaryExpr([](double v) { return net::sigmoid(v); }).transpose();
    }
    signals.refined.push_back(next);
    g = std::move(next);
  }
}

FeatureMap spatial_fuse(const FeatureMap& kinematic, const RowMat& tau, const Projection& projection) {
  const Index channels = kinematic.channels();
  const Index frames = kinematic.frames();
  const Index joints = kinematic.joints();
  if (tau.rows() != frames || projection.weight.rows() != channels || projection.weight.cols() != tau.cols() ||
      projection.bias.size() != channels) {
    throw ShapeMismatch("spatial fusion inputs do not align");
  }
  FeatureMap out(2 * channels, frames, joints);
  for (Index t = 0; t < frames; ++t) {
    const Vec dyn = projection.weight * tau.row(t).transpose() + projection.bias;
    for (Index c = 0; c < channels; ++c) {
      for (Index v = 0; v < joints; ++v) {
        out(c, t, v) = kinematic(c, t, v);
        out(channels + c, t, v) = dyn(c);
      }
    }
  }
  return out;
}

Vec moving_average(std::span<const double> signal, Index window) {
  const Index n = static_cast<Index>(signal.size());
  Vec out(n);
  if (window <= 1) {
    for (Index i = 0; i < n; ++i) {
      out(i) = signal[static_cast<std::size_t>(i)];
    }
    return out;
  }
  const Index left = (window - 1) / 2;
  const Index right = window - 1 - left;
  for (Index i = 0; i < n; ++i) {
    const Index a = std::max<Index>(0, i - left);
    const Index b = std::min<Index>(n - 1, i + right);
    double s = 0.0;
    for (Index k = a; k <= b; ++k) {
      s += signal[static_cast<std::size_t>(k)];
    }
    out(i) = s / static_cast<double>(b - a + 1);
  }
  return out;
}

double interquartile_range(std::span<const double> values) {
  if (values.empty()) {
    return 0.0;
  }
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  auto quantile = [&v](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return quantile(0.75) - quantile(0.25);
}

std::vector<Index> local_minima(std::span<const double> s) {
  std::vector<Index> minima;
  const Index n = static_cast<Index>(s.size());
  Index i = 1;
  while (i < n - 1) {
    if (s[static_cast<std::size_t>(i)] < s[static_cast<std::size_t>(i - 1)]) {
      Index j = i;
      while (j + 1 < n && s[static_cast<std::size_t>(j + 1)] == s[static_cast<std::size_t>(i)]) {
        ++j;
      }
      if (j + 1 < n && s[static_cast<std::size_t>(j + 1)] > s[static_cast<std::size_t>(i)]) {
        minima.push_back((i + j) / 2);
      }
      i = j + 1;
    } else {
      ++i;
    }
  }
  return minima;
}

double trough_prominence(std::span<const double> s, Index i) {
  const Index n = static_cast<Index>(s.size());
  const double v = s[static_cast<std::size_t>(i)];
  double left = v;
  for (Index k = i - 1; k >= 0 && s[static_cast<std::size_t>(k)] >= v; --k) {
    left = std::max(left, s[static_cast<std::size_t>(k)]);
  }
  double right = v;
  for (Index k = i + 1; k < n && s[static_cast<std::size_t>(k)] >= v; ++k) {
    right = std::max(right, s[static_cast<std::size_t>(k)]);
  }
  return std::min(left, right) - v;
}

BoundarySet propose_boundaries(std::span<const double> signal, const BoundaryOptions& options) {
  BoundarySet out;
  if (signal.size() < 3) {
    return out;
  }
  const Vec smooth = moving_average(signal, options.smoothing_window);
  const std::span<const double> s(smooth.data(), static_cast<std::size_t>(smooth.size()));
  const double threshold = options.prominence_threshold.value_or(0.5 * interquartile_range(s));

  BoundarySet candidates;
  for (Index i : local_minima(s)) {
    const double p = trough_prominence(s, i);
    if (p >= threshold && p > 0.0) {
      candidates.push_back({i, p});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Boundary& a, const Boundary& b) {
    return a.prominence > b.prominence || (a.prominence == b.prominence && a.frame < b.frame);
  });
  for (const auto& c : candidates) {
    const bool clear = std::all_of(out.begin(), out.end(), [&](const Boundary& kept) {
      return std::abs(kept.frame - c.frame) >= options.min_separation;
    });
    if (clear) {
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end(), [](const Boundary& a, const Boundary& b) { return a.frame < b.frame; });
  return out;
}

Vec select_signal(const Mat& gates, BoundarySignal which) {
  switch (which) {
    case BoundarySignal::Power:
      return gates.row(kPower).transpose();
    case BoundarySignal::Torque:
      return gates.row(kTorque).transpose();
    case BoundarySignal::TorqueChange:
      return gates.row(kTorqueChange).transpose();
    case BoundarySignal::Average:
      break;
  }
  Vec avg = Vec::Zero(gates.cols());
  for (Index k = 0; k < 3; ++k) {
    const double scale = gates.row(k).cwiseAbs().maxCoeff();
    if (scale > 0.0) {
      avg += gates.row(k).transpose() / scale;
    }
  }
  return avg / 3.0;
}

BoundarySet detect_boundaries(const Mat& gates, BoundarySignal which, Polarity polarity,
                              const BoundaryOptions& options) {
  Vec s = select_signal(gates, which);
  if (polarity == Polarity::Peak) {
    s = -s;
  }
  return propose_boundaries(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), options);
}

}  // namespace lagdyn::signals

#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "lagdyn/parameters.hpp"
#include "lagdyn/types.hpp"

namespace lagdyn::signals {

/// Row order of every 3 × T gate matrix.
enum SalientChannel : Index { kPower = 0, kTorque = 1, kTorqueChange = 2 };

/// Stage-0 salient signals plus the refined gates of each gating stage.
struct GateSignals {
  Mat stage0;               ///< 3 × T, rows (g_P, g_τ, g_τ̇), nonnegative
  std::vector<Mat> refined;  ///< per stage, 3 × T in (0, 1)

  Index frames() const { return stage0.cols(); }
};

/// g_P(t) = ‖τ(t) ⊙ q̇(t)‖₁, g_τ(t) = ‖τ(t)‖₂, g_τ̇(t) = ‖τ(t) - τ(t-1)‖₂ with g_τ̇(0) = 0.
GateSignals salient_signals(const RowMat& tau, const RowMat& qdot);

// Temporal gating --------------------------------------------------------------

struct GateStageOutput {
  Mat features;  ///< H̃, C × T
  Mat gates;     ///< refined gates, 3 × T
};

struct GateStageTape {
  Mat features;  ///< H
  Mat gates_in;
  Mat gates_out;
  bool recorded = false;
};

/// One stage: gates_out_k = σ(conv_k(gates_in_k)) per channel, then
/// H̃ = fuse(concat(H ⊙ g_P, H ⊙ g_τ, H ⊙ g_τ̇)) + H.
GateStageOutput gate_stage(const Mat& features, const Mat& gates_in, const GateStageParams& params,
                           GateStageTape* tape = nullptr);

struct GateStageInputGrad {
  Mat features;
  Mat gates_in;
};

/// Reverse of gate_stage; accumulates parameter gradients into `params`.
/// Throws TapeMissing if the tape was not recorded.
GateStageInputGrad gate_stage_backward(GateStageParams& params, const GateStageTape& tape,
                                       const Mat& features_grad, const Mat& gates_grad);

struct GatingResult {
  std::vector<Mat> features;  ///< H̃ after each stage
  std::vector<Mat> gates;     ///< refined gates after each stage
};

/// Runs the stages in sequence; stage l consumes H̃ and gates of stage l-1.
GatingResult run_gating(const Mat& features, const Mat& stage0, std::span<const GateStageParams> stages,
                        std::vector<GateStageTape>* tapes = nullptr);

/// Refined gates of every stage given an all-zero feature map of `channels`
/// rows (gates do not depend on features).
void refine_gates(GateSignals& signals, std::span<const GateStageParams> stages);

// Spatial fusion ---------------------------------------------------------------

/// Channels × frames × joints, stored (c, t, v) -> (c * T + t) * V + v.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(Index channels, Index frames, Index joints)
      : channels_(channels), frames_(frames), joints_(joints),
        data_(static_cast<std::size_t>(channels * frames * joints), 0.0) {}

  Index channels() const { return channels_; }
  Index frames() const { return frames_; }
  Index joints() const { return joints_; }

  double& operator()(Index c, Index t, Index v) { return data_[offset(c, t, v)]; }
  double operator()(Index c, Index t, Index v) const { return data_[offset(c, t, v)]; }

 private:
  std::size_t offset(Index c, Index t, Index v) const {
    return static_cast<std::size_t>((c * frames_ + t) * joints_ + v);
  }

  Index channels_ = 0;
  Index frames_ = 0;
  Index joints_ = 0;
  std::vector<double> data_;
};

/// Linear map D → C applied per frame.
struct Projection {
  Mat weight;  ///< C × D
  Vec bias;    ///< C
};

/// F_sp = concat_channels(F_kin, broadcast_V(projection(τ))), 2C × T × V.
FeatureMap spatial_fuse(const FeatureMap& kinematic, const RowMat& tau, const Projection& projection);

// Boundary proposal ------------------------------------------------------------

struct Boundary {
  Index frame = 0;
  double prominence = 0.0;
};
using BoundarySet = std::vector<Boundary>;

struct BoundaryOptions {
  Index smoothing_window = 9;
  /// Minimum trough prominence; unset means 0.5 × IQR of the smoothed signal.
  std::optional<double> prominence_threshold;
  Index min_separation = 10;
};

/// Centered moving average; the window shrinks at the edges.
Vec moving_average(std::span<const double> signal, Index window);

/// Linear-interpolated 75th minus 25th percentile.
double interquartile_range(std::span<const double> values);

/// Interior local minima (plateaus reported at their middle).
std::vector<Index> local_minima(std::span<const double> signal);

/// min(left enclosing max, right enclosing max) - signal[i], where each side
/// extends until a strictly lower value or the sequence end.
double trough_prominence(std::span<const double> signal, Index i);

/// Smooth, collect troughs with prominence >= threshold, keep the most
/// prominent ones at least min_separation apart. Sorted by frame.
BoundarySet propose_boundaries(std::span<const double> signal, const BoundaryOptions& options = {});

enum class BoundarySignal { Power, Torque, TorqueChange, Average };

/// Whether boundaries sit in valleys of the chosen signal (refined gates) or
/// on its spikes (raw salient signals). Peaks are found as troughs of -s.
enum class Polarity { Trough, Peak };

/// One signal row, or the average of the three rows each scaled by its max.
Vec select_signal(const Mat& gates, BoundarySignal which);

BoundarySet detect_boundaries(const Mat& gates, BoundarySignal which, Polarity polarity,
                              const BoundaryOptions& options = {});

}  // namespace lagdyn::signals

#pragma once

#include <functional>
#include <vector>

#include "lagdyn/config.hpp"
#include "lagdyn/dynamics.hpp"
#include "lagdyn/energy.hpp"
#include "lagdyn/oracle.hpp"

namespace lagdyn::training {

/// One training sequence: finite-difference state of the sampled angles and
/// the applied torque.
struct Sample {
  GeneralizedState state;
  RowMat tau;
};

std::vector<Sample> prepare_samples(const std::vector<oracle::LabeledSequence>& data,
                                    BoundaryPadding padding = BoundaryPadding::Zero);

/// Mean over frames t >= skip and all D of (τ̂ - τ)². Adds scale · ∂/∂τ̂ to
/// `tau_grad` when given.
double torque_mse(const RowMat& predicted, const RowMat& target, Index skip, RowMat* tau_grad = nullptr,
                  double scale = 1.0);

struct SequenceLoss {
  double torque = 0.0;
  double energy = 0.0;
  double mean_abs_residual = 0.0;
};

struct ObjectiveOptions {
  double inertia_floor = dynamics::kDefaultInertiaFloor;
  energy::EnergyOptions energy;
  Index torque_skip_frames = 2;
};

/// torque + λ · energy for one sequence. With `scale` nonzero, accumulates
/// scale · ∂(torque + λ · energy)/∂θ into the estimator gradient slots.
SequenceLoss sequence_objective(ParameterBundle& bundle, const Sample& sample, const ObjectiveOptions& options,
                                double lambda, double scale);

/// Forward pass only: terms with τ synthesized, plus the energy trace.
struct Evaluation {
  dynamics::DynamicTerms terms;
  energy::EnergyTrace trace;
};
Evaluation evaluate(const ParameterBundle& bundle, const GeneralizedState& state, const ObjectiveOptions& options);

/// One row of the metrics log.
struct EpochMetrics {
  long epoch = 0;
  double l_torque = 0.0;
  double l_ec = 0.0;
  double mean_abs_residual = 0.0;
  double lambda_ec = 0.0;
};

struct HoldoutMetrics {
  double torque_mse = 0.0;
  double mean_abs_residual = 0.0;
};

struct TrainingResult {
  ParameterBundle bundle;
  std::vector<EpochMetrics> log;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> holdout_indices;
  HoldoutMetrics holdout;
};

ObjectiveOptions objective_options(const RunConfig& config);

/// Split of `count` sequences: a seeded permutation whose last
/// round(holdout_fraction · count) entries are held out.
void split_indices(std::size_t count, double holdout_fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& holdout);

/// Adam on the mean over each minibatch of torque MSE + λ₃^(e) · L_EC.
/// Log rows average the minibatch values of an epoch. Deterministic for a
/// fixed config. Throws NumericalBlowup naming the epoch of a non-finite loss.
TrainingResult train(const RunConfig& config, const std::vector<oracle::LabeledSequence>& data,
                     const std::function<void(const EpochMetrics&)>& on_epoch = {});

HoldoutMetrics evaluate_holdout(const ParameterBundle& bundle, const std::vector<Sample>& samples,
                                const std::vector<std::size_t>& indices, const ObjectiveOptions& options);

/// Reads config.data, trains, and writes metrics.csv, model.ckpt and
/// config.txt under config.output_dir.
TrainingResult run_training(const RunConfig& config, const std::function<void(const EpochMetrics&)>& on_epoch = {});

void write_metrics(const std::vector<EpochMetrics>& log, const std::filesystem::path& path);

}  // namespace lagdyn::training

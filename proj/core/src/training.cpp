#include "lagdyn/training.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "lagdyn/checkpoint.hpp"
#include "lagdyn/io.hpp"
#include "lagdyn/optim.hpp"

namespace lagdyn::training {

std::vector<Sample> prepare_samples(const std::vector<oracle::LabeledSequence>& data, BoundaryPadding padding) {
  std::vector<Sample> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    out.push_back({finite_differences(s.q, padding), s.tau});
  }
  return out;
}

double torque_mse(const RowMat& predicted, const RowMat& target, Index skip, RowMat* tau_grad, double scale) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols()) {
    throw ShapeMismatch("predicted and target torque differ in shape");
  }
  const Index frames = predicted.rows();
  const Index first = std::min(skip, frames);
  const Index count = (frames - first) * predicted.cols();
  if (count == 0) {
    return 0.0;
  }
  const auto diff = predicted.bottomRows(frames - first) - target.bottomRows(frames - first);
  const double n = static_cast<double>(count);
  if (tau_grad != nullptr) {
    tau_grad->bottomRows(frames - first) += (2.0 * scale / n) * diff;
  }
  return diff.squaredNorm() / n;
}

SequenceLoss sequence_objective(ParameterBundle& bundle, const Sample& sample, const ObjectiveOptions& options,
                                double lambda, double scale) {
  const bool with_gradient = scale != 0.0;
  dynamics::DynamicsTape tape;
  auto terms = dynamics::estimate_dynamic_terms(bundle, sample.state, options.inertia_floor,
                                                with_gradient ? &tape : nullptr);
  dynamics::synthesize_tau(terms, sample.state);

  SequenceLoss loss;
  if (!with_gradient) {
    loss.torque = torque_mse(terms.tau, sample.tau, options.torque_skip_frames);
    const auto trace = energy::energy_trace(terms, sample.state, options.energy);
    loss.energy = energy::energy_consistency_loss(terms, sample.state, options.energy);
    loss.mean_abs_residual = trace.mean_abs_residual();
    return loss;
  }

  auto grads = dynamics::TermGradients::zeros(terms.frames(), terms.dof);
  loss.torque = torque_mse(terms.tau, sample.tau, options.torque_skip_frames, &grads.tau, scale);
  energy::EnergyTrace trace;
  loss.energy = energy::energy_consistency_loss(terms, sample.state, options.energy, grads, scale * lambda, &trace);
  loss.mean_abs_residual = trace.mean_abs_residual();
  dynamics::backprop_tau(terms, sample.state, grads);
  dynamics::backprop_dynamic_terms(bundle, tape, terms, grads);
  return loss;
}

Evaluation evaluate(const ParameterBundle& bundle, const GeneralizedState& state, const ObjectiveOptions& options) {
  Evaluation ev;
  ev.terms = dynamics::estimate_dynamic_terms(bundle, state, options.inertia_floor);
  dynamics::synthesize_tau(ev.terms, state);
  ev.trace = energy::energy_trace(ev.terms, state, options.energy);
  return ev;
}

ObjectiveOptions objective_options(const RunConfig& config) {
  return {config.inertia_floor, config.energy, config.torque_skip_frames};
}

void split_indices(std::size_t count, double holdout_fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& holdout) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(oracle::sub_seed(seed, 0x5bd1e995));
  std::shuffle(order.begin(), order.end(), rng);
  auto held = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(count)));
  if (held >= count) {
    held = count > 0 ? count - 1 : 0;
  }
  train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(held));
  holdout.assign(order.end() - static_cast<std::ptrdiff_t>(held), order.end());
  std::sort(train.begin(), train.end());
  std::sort(holdout.begin(), holdout.end());
}

HoldoutMetrics evaluate_holdout(const ParameterBundle& bundle, const std::vector<Sample>& samples,
                                const std::vector<std::size_t>& indices, const ObjectiveOptions& options) {
  HoldoutMetrics m;
  if (indices.empty()) {
    return m;
  }
  for (auto i : indices) {
    const auto ev = evaluate(bundle, samples[i].state, options);
    m.torque_mse += torque_mse(ev.terms.tau, samples[i].tau, options.torque_skip_frames);
    m.mean_abs_residual += ev.trace.mean_abs_residual();
  }
  m.torque_mse /= static_cast<double>(indices.size());
  m.mean_abs_residual /= static_cast<double>(indices.size());
  return m;
}

TrainingResult train(const RunConfig& config, const std::vector<oracle::LabeledSequence>& data,
                     const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.validate();
  if (data.empty()) {
    throw DataUnreadable("training needs at least one sequence");
  }
  const Index dof = data.front().q.cols();
  for (const auto& s : data) {
    if (s.q.cols() != dof || s.frames() < 2) {
      throw DataUnreadable("sequences must share the degree-of-freedom count and hold >= 2 frames");
    }
  }
  BundleShape shape = config.shape;
  shape.dof = dof;

  TrainingResult result;
  result.bundle = ParameterBundle::initialize(shape, config.seed);
  split_indices(data.size(), config.holdout_fraction, config.seed, result.train_indices, result.holdout_indices);
  const auto samples =
      prepare_samples(data, config.pad_replicate ? BoundaryPadding::Replicate : BoundaryPadding::Zero);
  const auto options = objective_options(config);

  // Only the estimators receive gradients from this objective.
  std::vector<net::TensorRef> tensors;
  result.bundle.inertia.append_tensors("inertia", tensors);
  result.bundle.coriolis.append_tensors("coriolis", tensors);
  result.bundle.gravity.append_tensors("gravity", tensors);
  result.bundle.friction.append_tensors("friction", tensors);
  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  auto optimizer = make_optimizer_state(tensors, adam);
  result.bundle.zero_grad();

  std::mt19937_64 shuffle_rng(oracle::sub_seed(config.seed, 0x9e3779b9));
  std::vector<std::size_t> order = result.train_indices;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (long epoch = 0; epoch < config.epochs; ++epoch) {
    const double lambda = warmup_weight(epoch, config.warmup_start, config.warmup_ramp, config.lambda_ec);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochMetrics row;
    row.epoch = epoch;
    row.lambda_ec = lambda;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      const double scale = 1.0 / static_cast<double>(end - begin);
      SequenceLoss mean;
      for (std::size_t k = begin; k < end; ++k) {
        const auto l = sequence_objective(result.bundle, samples[order[k]], options, lambda, scale);
        mean.torque += scale * l.torque;
        mean.energy += scale * l.energy;
        mean.mean_abs_residual += scale * l.mean_abs_residual;
      }
      if (!std::isfinite(mean.torque) || !std::isfinite(mean.energy)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch;
        throw NumericalBlowup(msg.str());
      }
      adam_step(tensors, optimizer);
      row.l_torque += mean.torque;
      row.l_ec += mean.energy;
      row.mean_abs_residual += mean.mean_abs_residual;
      ++batches;
    }
    if (batches > 0) {
      const double inv = 1.0 / static_cast<double>(batches);
      row.l_torque *= inv;
      row.l_ec *= inv;
      row.mean_abs_residual *= inv;
    }
    result.log.push_back(row);
    if (on_epoch) {
      on_epoch(row);
    }
  }
  result.holdout = evaluate_holdout(result.bundle, samples, result.holdout_indices, options);
  return result;
}

void write_metrics(const std::vector<EpochMetrics>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataUnreadable("cannot write " + path.string());
  }
  out.precision(17);
  out << "epoch,l_torque,l_ec,mean_abs_residual,lambda_ec\n";
  for (const auto& r : log) {
    out << r.epoch << "," << r.l_torque << "," << r.l_ec << "," << r.mean_abs_residual << "," << r.lambda_ec << "\n";
  }
}

TrainingResult run_training(const RunConfig& config, const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.validate();
  if (config.data.empty()) {
    throw ConfigInvalid("train-dynamics needs 'data'");
  }
  const auto data = io::read_dataset(config.data);
  auto result = train(config, data, on_epoch);
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);
  write_metrics(result.log, dir / "metrics.csv");
  save_checkpoint(result.bundle, dir / "model.ckpt");
  std::ofstream(dir / "config.txt") << dump_config(config);
  return result;
}

}  // namespace lagdyn::training

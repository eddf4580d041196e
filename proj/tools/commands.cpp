#include "commands.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>

#include "json.hpp"
#include "lagdyn/checkpoint.hpp"
#include "lagdyn/config.hpp"
#include "lagdyn/eval.hpp"
#include "lagdyn/gradcheck.hpp"
#include "lagdyn/io.hpp"
#include "lagdyn/kinematics.hpp"
#include "lagdyn/signals.hpp"
#include "lagdyn/training.hpp"

namespace lagdyn::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_file;
  std::map<std::string, std::string> values;  // one slot per config key
  std::string checkpoint;
  long sequence = 0;
  std::string source = "oracle";
  std::string pred;
  std::string gt;
  std::size_t samples = 200;
  double tolerance = 1e-4;
};

RunConfig load_config(const Options& opts, const std::vector<CLI::Option*>& key_options) {
  RunConfig cfg;
  if (!opts.config_file.empty()) {
    apply_config(cfg, parse_config_file(opts.config_file));
  }
  ConfigMap overrides;
  for (auto* o : key_options) {
    if (o->count() > 0) {
      const auto key = o->get_name().substr(2);
      overrides[key] = opts.values.at(key);
    }
  }
  apply_config(cfg, overrides);
  cfg.validate();
  return cfg;
}

fs::path output_path(const RunConfig& cfg, const std::string& name) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  return dir / name;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataUnreadable("cannot write " + path.string());
  }
  out << std::setprecision(17);
  return out;
}

const oracle::LabeledSequence& pick_sequence(const std::vector<oracle::LabeledSequence>& data, long index) {
  if (index < 0 || static_cast<std::size_t>(index) >= data.size()) {
    throw DataUnreadable("sequence index " + std::to_string(index) + " out of range (dataset holds " +
                         std::to_string(data.size()) + ")");
  }
  return data[static_cast<std::size_t>(index)];
}

std::vector<oracle::LabeledSequence> require_data(const RunConfig& cfg) {
  if (cfg.data.empty()) {
    throw ConfigInvalid("this command needs 'data'");
  }
  return io::read_dataset(cfg.data);
}

ParameterBundle require_checkpoint(const Options& opts) {
  if (opts.checkpoint.empty()) {
    throw ConfigInvalid("this command needs --checkpoint");
  }
  return load_checkpoint(opts.checkpoint);
}

BoundaryPadding padding(const RunConfig& cfg) {
  return cfg.pad_replicate ? BoundaryPadding::Replicate : BoundaryPadding::Zero;
}

GeneralizedState state_from_poses(const RunConfig& cfg) {
  const auto topo = io::read_topology(cfg.topology);
  const auto pose = io::read_poses(cfg.poses, topo.joint_count(), topo.spatial_dim());
  return kinematics::assemble_state(pose, topo, {padding(cfg), cfg.strict});
}

// Commands ---------------------------------------------------------------------

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.topology.empty()) {
    const auto topo = io::read_topology(cfg.topology);
    out << "topology: " << topo.joint_count() << " joints, dim " << topo.spatial_dim() << ", D = " << topo.dof()
        << "\n";
    if (!cfg.poses.empty()) {
      const auto pose = io::read_poses(cfg.poses, topo.joint_count(), topo.spatial_dim());
      out << "poses: " << pose.frames() << " frames\n";
    }
  } else if (!cfg.poses.empty()) {
    throw ConfigInvalid("'poses' needs 'topology'");
  }
  if (!cfg.data.empty()) {
    const auto data = io::read_dataset(cfg.data);
    out << "data: " << data.size() << " sequences\n";
  }
  out << "config ok\n";
  return kSuccess;
}

int cmd_coords(const RunConfig& cfg, std::ostream& out) {
  if (cfg.topology.empty() || cfg.poses.empty()) {
    throw ConfigInvalid("coords needs 'topology' and 'poses'");
  }
  const auto state = state_from_poses(cfg);
  const auto path = output_path(cfg, "coords.csv");
  auto csv = open_csv(path);
  const Index d = state.dof();
  csv << "t";
  for (const char* prefix : {"q", "qdot", "qddot"}) {
    for (Index i = 0; i < d; ++i) {
      csv << "," << prefix << i;
    }
  }
  csv << "\n";
  for (Index t = 0; t < state.frames(); ++t) {
    csv << t;
    for (const RowMat* m : {&state.q, &state.qdot, &state.qddot}) {
      for (Index i = 0; i < d; ++i) {
        csv << "," << (*m)(t, i);
      }
    }
    csv << "\n";
  }
  out << "wrote " << state.frames() << " frames, D = " << d << " to " << path.string() << "\n";
  return kSuccess;
}

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const auto data = oracle::generate_labeled_dataset(cfg.dataset, cfg.seed);
  const auto path = output_path(cfg, "dataset.jsonl");
  io::write_dataset(data, path);
  out << "wrote " << data.size() << " sequences to " << path.string() << "\n";
  return kSuccess;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto result = training::run_training(cfg, [&out](const training::EpochMetrics& r) {
    out << "epoch " << r.epoch << "  l_torque " << r.l_torque << "  l_ec " << r.l_ec << "  mean|r_E| "
        << r.mean_abs_residual << "  lambda " << r.lambda_ec << "\n";
  });
  out << "holdout: torque mse " << result.holdout.torque_mse << ", mean|r_E| " << result.holdout.mean_abs_residual
      << "\n";
  out << "wrote " << (fs::path(cfg.output_dir) / "model.ckpt").string() << "\n";
  return kSuccess;
}

int cmd_energy_audit(const RunConfig& cfg, const Options& opts, std::ostream& out) {
  auto bundle = require_checkpoint(opts);
  GeneralizedState state;
  if (!cfg.poses.empty()) {
    state = state_from_poses(cfg);
  } else {
    const auto data = require_data(cfg);
    state = finite_differences(pick_sequence(data, opts.sequence).q, padding(cfg));
  }
  const auto ev = training::evaluate(bundle, state, training::objective_options(cfg));
  const auto path = output_path(cfg, "energy_audit.csv");
  auto csv = open_csv(path);
  csv << "t,E_K,dE_K,P,W,r_E,mask\n";
  const auto& tr = ev.trace;
  for (Index t = 0; t < tr.frames(); ++t) {
    csv << t << "," << tr.kinetic(t) << "," << tr.kinetic_change(t) << "," << tr.power(t) << "," << tr.work(t)
        << "," << tr.residual(t) << "," << (tr.mask(t) ? 1 : 0) << "\n";
  }
  out << "mean|r_E| " << tr.mean_abs_residual() << " over " << tr.frames() << " frames, wrote " << path.string()
      << "\n";
  return kSuccess;
}

struct SignalRun {
  signals::GateSignals gates;
};

SignalRun compute_signals(const RunConfig& cfg, const Options& opts) {
  const auto data = require_data(cfg);
  const auto& seq = pick_sequence(data, opts.sequence);
  const auto state = finite_differences(seq.q, padding(cfg));
  ParameterBundle bundle;
  RowMat tau;
  if (opts.source == "model") {
    bundle = require_checkpoint(opts);
    tau = training::evaluate(bundle, state, training::objective_options(cfg)).terms.tau;
  } else if (opts.source == "oracle") {
    if (!opts.checkpoint.empty()) {
      bundle = load_checkpoint(opts.checkpoint);
    } else {
      BundleShape shape = cfg.shape;
      shape.dof = state.dof();
      bundle = ParameterBundle::initialize(shape, cfg.seed);
    }
    tau = seq.tau;
  } else {
    throw ConfigInvalid("--source must be 'oracle' or 'model'");
  }
  SignalRun run;
  run.gates = signals::salient_signals(tau, state.qdot);
  signals::refine_gates(run.gates, bundle.stages);
  return run;
}

int cmd_signals(const RunConfig& cfg, const Options& opts, std::ostream& out) {
  const auto run = compute_signals(cfg, opts);
  const auto path = output_path(cfg, "signals.csv");
  auto csv = open_csv(path);
  csv << "t,g_P,g_tau,g_tau_dot";
  for (std::size_t l = 0; l < run.gates.refined.size(); ++l) {
    csv << ",stage" << l + 1 << "_P,stage" << l + 1 << "_tau,stage" << l + 1 << "_tau_dot";
  }
  csv << "\n";
  for (Index t = 0; t < run.gates.frames(); ++t) {
    csv << t;
    for (Index k = 0; k < 3; ++k) {
      csv << "," << run.gates.stage0(k, t);
    }
    for (const auto& g : run.gates.refined) {
      for (Index k = 0; k < 3; ++k) {
        csv << "," << g(k, t);
      }
    }
    csv << "\n";
  }
  out << "wrote " << run.gates.frames() << " frames to " << path.string() << "\n";
  return kSuccess;
}

int cmd_boundaries(const RunConfig& cfg, const Options& opts, std::ostream& out) {
  const auto run = compute_signals(cfg, opts);
  const auto found =
      signals::detect_boundaries(run.gates.stage0, cfg.boundary_signal, cfg.polarity, cfg.boundary);
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : found) {
    j.push_back({{"frame", b.frame}, {"prominence", b.prominence}});
  }
  const auto path = output_path(cfg, "boundaries.json");
  std::ofstream(path) << j.dump(2) << "\n";
  out << found.size() << " boundaries written to " << path.string() << "\n";
  return kSuccess;
}

int cmd_eval(const Options& opts, std::ostream& out) {
  if (opts.pred.empty() || opts.gt.empty()) {
    throw ConfigInvalid("eval needs --pred and --gt");
  }
  const auto pred = io::read_labels(opts.pred);
  const auto gt = io::read_labels(opts.gt);
  const auto s = eval::score_segmentation(pred, gt);
  out << std::fixed << std::setprecision(2);
  out << "metric   value\n";
  out << "Acc      " << s.accuracy << "\n";
  out << "Edit     " << s.edit << "\n";
  out << "F1@10    " << s.f1_10 << "\n";
  out << "F1@25    " << s.f1_25 << "\n";
  out << "F1@50    " << s.f1_50 << "\n";
  return kSuccess;
}

int cmd_gradcheck(const RunConfig& cfg, const Options& opts, std::ostream& out) {
  oracle::LabeledSequence seq;
  if (!cfg.data.empty()) {
    const auto data = io::read_dataset(cfg.data);
    seq = pick_sequence(data, opts.sequence);
  } else {
    auto ds = cfg.dataset;
    ds.sequences = 1;
    ds.regimes = 1;
    ds.min_regime_frames = std::min<Index>(ds.frames, 64);
    ds.frames = ds.min_regime_frames;
    seq = oracle::generate_labeled_dataset(ds, cfg.seed).front();
  }
  const Index frames = std::min<Index>(seq.frames(), 64);
  training::Sample sample{finite_differences(seq.q.topRows(frames), padding(cfg)), seq.tau.topRows(frames)};

  ParameterBundle bundle;
  if (!opts.checkpoint.empty()) {
    bundle = load_checkpoint(opts.checkpoint);
  } else {
    BundleShape shape = cfg.shape;
    shape.dof = sample.state.dof();
    bundle = ParameterBundle::initialize(shape, cfg.seed);
  }
  std::vector<net::TensorRef> tensors;
  bundle.inertia.append_tensors("inertia", tensors);
  bundle.coriolis.append_tensors("coriolis", tensors);
  bundle.gravity.append_tensors("gravity", tensors);
  bundle.friction.append_tensors("friction", tensors);

  const auto options = training::objective_options(cfg);
  const double lambda = cfg.lambda_ec;
  auto objective = [&](bool with_gradient) {
    const auto l = training::sequence_objective(bundle, sample, options, lambda, with_gradient ? 1.0 : 0.0);
    return l.torque + lambda * l.energy;
  };
  GradcheckOptions go;
  go.samples = opts.samples;
  go.seed = cfg.seed;
  const auto report = gradcheck(objective, tensors, go);
  out << std::setprecision(6) << "max relative error " << report.max_relative_error << " over "
      << report.coordinates << " coordinates, " << report.skipped << " skipped at kinks (worst " << report.worst_tensor << "[" << report.worst_index
      << "]: analytic " << report.worst_analytic << ", numeric " << report.worst_numeric << ")\n";
  if (!(report.max_relative_error < opts.tolerance)) {
    out << "FAIL: above tolerance " << opts.tolerance << "\n";
    return kNumericalFailure;
  }
  out << "ok\n";
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lagrangian dynamics toolkit: coordinates, learned dynamic terms, energy audits, boundaries"};
  app.require_subcommand(1);
  Options opts;
  const auto keys = config_keys();
  for (const auto& k : keys) {
    opts.values[k];
  }

  std::map<CLI::App*, std::vector<CLI::Option*>> key_options;
  auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config_file, "key = value configuration file");
    auto& list = key_options[sub];
    for (const auto& k : keys) {
      list.push_back(sub->add_option("--" + k, opts.values[k])->group("Configuration keys"));
    }
    return sub;
  };

  auto* validate = add("validate", "Check the configuration and every referenced input file");
  auto* coords = add("coords", "Generalized coordinates and differences of a pose sequence");
  auto* generate = add("generate-oracle", "Synthesize a labeled pendulum dataset");
  auto* train = add("train-dynamics", "Train the dynamic-term estimators");
  auto* audit = add("energy-audit", "Per-frame work-energy bookkeeping of a trained model");
  audit->add_option("--checkpoint", opts.checkpoint, "Trained model")->required();
  audit->add_option("--sequence", opts.sequence, "Dataset sequence index");
  auto* sig = add("signals", "Salient dynamic signals and refined gates");
  auto* seg = add("segment-boundaries", "Propose boundaries from a salient signal");
  for (auto* sub : {sig, seg}) {
    sub->add_option("--checkpoint", opts.checkpoint, "Trained model (gate stages, learned torque)");
    sub->add_option("--sequence", opts.sequence, "Dataset sequence index");
    sub->add_option("--source", opts.source, "Torque source: oracle or model")
        ->check(CLI::IsMember({"oracle", "model"}));
  }
  auto* ev = add("eval", "Score predicted frame labels against ground truth");
  ev->add_option("--pred", opts.pred, "Predicted labels CSV (frame,label)")->required();
  ev->add_option("--gt", opts.gt, "Ground-truth labels CSV (frame,label)")->required();
  auto* grad = add("gradcheck", "Compare reverse-mode gradients with central differences");
  grad->add_option("--checkpoint", opts.checkpoint, "Model to check (default: fresh initialization)");
  grad->add_option("--sequence", opts.sequence, "Dataset sequence index");
  grad->add_option("--samples", opts.samples, "Coordinates to probe");
  grad->add_option("--tolerance", opts.tolerance, "Maximum relative error");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const auto cfg = load_config(opts, key_options.at(sub));
    if (sub == validate) return cmd_validate(cfg, out);
    if (sub == coords) return cmd_coords(cfg, out);
    if (sub == generate) return cmd_generate(cfg, out);
    if (sub == train) return cmd_train(cfg, out);
    if (sub == audit) return cmd_energy_audit(cfg, opts, out);
    if (sub == sig) return cmd_signals(cfg, opts, out);
    if (sub == seg) return cmd_boundaries(cfg, opts, out);
    if (sub == ev) return cmd_eval(opts, out);
    if (sub == grad) return cmd_gradcheck(cfg, opts, out);
    return kConfigError;
  } catch (const ConfigInvalid& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalBlowup& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const Error& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace lagdyn::cli

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lagdyn/config.hpp"
#include "lagdyn/dynamics.hpp"
#include "lagdyn/energy.hpp"
#include "lagdyn/eval.hpp"
#include "lagdyn/gradcheck.hpp"
#include "lagdyn/oracle.hpp"
#include "lagdyn/signals.hpp"
#include "lagdyn/training.hpp"
#include "reference.hpp"

using namespace lagdyn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // <= 0: no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome spd_by_construction() {
  ref::Rng rng(101);
  const double floor = dynamics::kDefaultInertiaFloor;
  double min_diag = std::numeric_limits<double>::infinity();
  double min_form = std::numeric_limits<double>::infinity();
  long failures = 0;
  const std::array<Index, 3> dims{2, 4, 8};
  for (int n = 0; n < 10000; ++n) {
    const Index d = dims[static_cast<std::size_t>(n % 3)];
    std::vector<double> raw(static_cast<std::size_t>(dynamics::lower_packed_size(d)));
    // Mix of ordinary and strongly saturated raw outputs.
    const double spread = (n % 5 == 0) ? 60.0 : 4.0;
    for (auto& r : raw) {
      r = rng.uniform(-spread, spread);
    }
    const auto f = dynamics::build_inertia(raw, d, floor);
    for (Index i = 0; i < d; ++i) {
      min_diag = std::min(min_diag, f.lower(i, i));
    }
    for (int k = 0; k < 100; ++k) {
      const Vec x = rng.vec(d);
      const double form = x.dot(f.inertia * x);
      min_form = std::min(min_form, form);
      failures += form > 0.0 ? 0 : 1;
    }
  }
  return {failures == 0 && min_diag >= floor,
          fmt("1e6 forms, %ld non-positive, min form %.3g, min L_ii %.6g", failures, min_form, min_diag)};
}

// 2 ---------------------------------------------------------------------------

Outcome exact_passivity() {
  ref::Rng rng(202);
  double worst = 0.0;
  Index frames = 0;
  for (Index dof : {2, 3, 5, 8}) {
    BundleShape shape;
    shape.dof = dof;
    shape.hidden_width = 32;
    const auto bundle = ParameterBundle::initialize(shape, static_cast<std::uint64_t>(dof));
    const RowMat q = rng.rows(2500, dof, -3, 3);
    auto state = finite_differences(q, BoundaryPadding::Zero);
    state.qdot = rng.rows(2500, dof, -5, 5);
    const auto terms = dynamics::estimate_dynamic_terms(bundle, state);
    for (Index t = 0; t < terms.frames(); ++t) {
      const Vec v = state.qdot.row(t).transpose();
      const Mat rate = terms.square(terms.inertia_rate, t);
      const Mat gap = rate - 2.0 * Mat(terms.C(t));
      worst = std::max(worst, std::abs(v.dot(gap * v)));
      ++frames;
    }
  }
  return {worst < 1e-9, fmt("%ld frames, max |qdot'(Mdot - 2C)qdot| = %.3g", static_cast<long>(frames), worst)};
}

// 3 ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
  oracle::DatasetOptions ds;
  ds.sequences = 1;
  ds.frames = 240;
  ds.min_regime_frames = 60;
  const auto data = oracle::generate_labeled_dataset(ds, 303);
  const auto samples = training::prepare_samples(data);
  RunConfig cfg;
  BundleShape shape = cfg.shape;
  shape.dof = 2;
  auto bundle = ParameterBundle::initialize(shape, 303);
  const auto options = training::objective_options(cfg);
  const double lambda = cfg.lambda_ec;
  std::vector<net::TensorRef> tensors;
  bundle.inertia.append_tensors("inertia", tensors);
  bundle.coriolis.append_tensors("coriolis", tensors);
  bundle.gravity.append_tensors("gravity", tensors);
  bundle.friction.append_tensors("friction", tensors);
  auto objective = [&](bool with_gradient) {
    const auto l = training::sequence_objective(bundle, samples[0], options, lambda, with_gradient ? 1.0 : 0.0);
    return l.torque + lambda * l.energy;
  };
  GradcheckOptions go;
  go.samples = 400;
  go.seed = 3;
  const auto r = gradcheck(objective, tensors, go);
  return {r.coordinates >= 200 && r.skipped * 10 <= go.samples && r.max_relative_error < 1e-4,
          fmt("%zu coordinates compared (%zu skipped at kinks), max relative error %.3g (%s[%ld])", r.coordinates,
              r.skipped, r.max_relative_error,
              r.worst_tensor.c_str(), static_cast<long>(r.worst_index))};
}

// 4 ---------------------------------------------------------------------------

Outcome oracle_work_energy() {
  const auto chain = oracle::LinkChain::uniform(2, 1.0, 1.0);
  oracle::SimulationOptions sim;
  sim.dt = 1e-3;
  sim.steps = 10000;
  const auto traj = oracle::simulate_trajectory(chain, Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d::Zero(),
                                                [](double, Index) { return Vec(Vec::Zero(2)); }, sim);
  double e0 = 0.0, drift = 0.0;
  for (Index t = 0; t < traj.state.frames(); ++t) {
    const Vec q = traj.state.q.row(t).transpose(), v = traj.state.qdot.row(t).transpose();
    const double e = oracle::kinetic_energy(chain, q, v) + oracle::potential_energy(chain, q);
    if (t == 0) {
      e0 = e;
    }
    drift = std::max(drift, std::abs(e - e0) / std::abs(e0));
  }

  // Work per frame in physical time: scale the generalized forces by dt.
  auto terms = oracle::trajectory_terms(chain, traj);
  terms.tau *= sim.dt;
  terms.gravity *= sim.dt;
  terms.friction *= sim.dt;
  energy::EnergyOptions opts;
  opts.delta = 0.0;
  opts.mask_threshold = 0.0;
  const auto trace = energy::energy_trace(terms, traj.state, opts);
  double sum = 0.0;
  long active = 0;
  for (Index t = 1; t < trace.frames(); ++t) {
    if (trace.mask(t)) {
      sum += std::abs(trace.residual(t));
      ++active;
    }
  }
  const double mean = active > 0 ? sum / static_cast<double>(active) : 1.0;
  return {drift < 1e-6 && mean < 1e-3 && active > 0,
          fmt("energy drift %.3g, mean |r_E| %.3g over %ld unmasked frames", drift, mean, active)};
}

// 5 and 6 -------------------------------------------------------------------------

struct TrainingRuns {
  std::vector<oracle::LabeledSequence> data;
  training::TrainingResult main;
  training::TrainingResult control;
};

std::optional<TrainingRuns> g_runs;

RunConfig efficacy_config() {
  RunConfig cfg;
  cfg.epochs = 100;
  cfg.warmup_start = 20;
  cfg.warmup_ramp = 4;
  cfg.lambda_ec = 0.1;
  cfg.seed = 505;
  return cfg;
}

Outcome training_efficacy() {
  const auto cfg = efficacy_config();
  TrainingRuns runs;
  runs.data = oracle::generate_labeled_dataset(cfg.dataset, cfg.seed);
  runs.main = training::train(cfg, runs.data);
  auto control_cfg = cfg;
  control_cfg.lambda_ec = 0.0;
  runs.control = training::train(control_cfg, runs.data);

  const auto& log = runs.main.log;
  const double torque_ratio = log.back().l_torque / log.front().l_torque;
  const double pre_warmup = log[static_cast<std::size_t>(cfg.warmup_start - 1)].mean_abs_residual;
  const double residual_ratio = log.back().mean_abs_residual / pre_warmup;
  const double held_main = runs.main.holdout.mean_abs_residual;
  const double held_control = runs.control.holdout.mean_abs_residual;
  g_runs = std::move(runs);

  const bool torque_ok = torque_ratio < 0.1;
  const bool residual_ok = residual_ratio < 0.2;
  const bool control_ok = held_control > held_main;
  return {torque_ok && residual_ok && control_ok,
          fmt("torque MSE %.3g of epoch 0 [%s]; mean |r_E| %.3g of pre-warmup [%s]; holdout mean |r_E| "
              "lambda=0 %.4g vs lambda=0.1 %.4g [%s]",
              torque_ratio, torque_ok ? "ok" : "miss", residual_ratio, residual_ok ? "ok" : "miss", held_control,
              held_main, control_ok ? "ok" : "miss")};
}

struct RecallTally {
  double hits = 0.0;
  double truths = 0.0;
  double recall() const { return truths > 0 ? hits / truths : 1.0; }
};

void tally(RecallTally& r, const RowMat& tau, const GeneralizedState& state, const oracle::LabeledSequence& seq) {
  const auto gates = signals::salient_signals(tau, state.qdot);
  const auto found =
      signals::detect_boundaries(gates.stage0, signals::BoundarySignal::TorqueChange, signals::Polarity::Peak);
  std::vector<Index> frames;
  for (const auto& b : found) {
    frames.push_back(b.frame);
  }
  const auto truth = static_cast<double>(seq.boundaries.size());
  r.hits += eval::boundary_recall(frames, seq.boundaries, 5) * truth;
  r.truths += truth;
}

Outcome boundary_detection() {
  if (!g_runs) {
    return {false, "needs the trained model from the previous criterion"};
  }
  const auto& runs = *g_runs;
  const auto cfg = efficacy_config();
  const auto options = training::objective_options(cfg);
  RecallTally oracle_recall;
  for (const auto& seq : runs.data) {
    const auto state = finite_differences(seq.q, BoundaryPadding::Zero);
    tally(oracle_recall, seq.tau, state, seq);
  }
  RecallTally learned_recall;
  for (auto i : runs.main.holdout_indices) {
    const auto& seq = runs.data[i];
    const auto state = finite_differences(seq.q, BoundaryPadding::Zero);
    const auto ev = training::evaluate(runs.main.bundle, state, options);
    tally(learned_recall, ev.terms.tau, state, seq);
  }
  return {oracle_recall.recall() >= 0.9 && learned_recall.recall() >= 0.75,
          fmt("recall within 5 frames: oracle %.3f (%d sequences), learned %.3f (%zu held-out sequences)",
              oracle_recall.recall(), static_cast<int>(runs.data.size()), learned_recall.recall(),
              runs.main.holdout_indices.size())};
}

// 7 ---------------------------------------------------------------------------

std::vector<std::vector<int>> segment_strings(int max_len, int classes) {
  std::vector<std::vector<int>> out, frontier;
  for (int c = 0; c < classes; ++c) {
    frontier.push_back({c});
  }
  for (int len = 1; len <= max_len; ++len) {
    out.insert(out.end(), frontier.begin(), frontier.end());
    std::vector<std::vector<int>> next;
    for (const auto& s : frontier) {
      for (int c = 0; c < classes; ++c) {
        if (c != s.back()) {
          auto e = s;
          e.push_back(c);
          next.push_back(std::move(e));
        }
      }
    }
    frontier = std::move(next);
  }
  return out;
}

std::vector<int> expand(const std::vector<int>& segs, std::size_t salt) {
  std::vector<int> frames;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    frames.insert(frames.end(), 1 + (i * 5 + salt) % 4, segs[i]);
  }
  return frames;
}

Outcome metric_oracles() {
  const auto strings = segment_strings(5, 3);
  long edit_mismatch = 0, pairs = 0;
  for (std::size_t i = 0; i < strings.size(); ++i) {
    for (std::size_t j = 0; j < strings.size(); ++j) {
      const auto& a = strings[i];
      const auto& b = strings[j];
      const double expected = 100.0 * (1.0 - static_cast<double>(ref::levenshtein_table(a, b)) /
                                                 static_cast<double>(std::max(a.size(), b.size())));
      edit_mismatch += eval::segmental_edit(expand(a, i), expand(b, j)) == expected ? 0 : 1;
      ++pairs;
    }
  }

  ref::Rng rng(707);
  long monotone_violations = 0, identical_misses = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int frames = rng.integer(10, 300);
    const auto gt = ref::random_labels(rng, frames, 5, 1, 40);
    const auto pred = ref::random_labels(rng, frames, 5, 1, 40);
    const auto ps = eval::segments_from_labels(pred), gs = eval::segments_from_labels(gt);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 100; ++k) {
      const double f = eval::f1_at_k(ps, gs, k / 100.0);
      monotone_violations += f <= prev ? 0 : 1;
      prev = f;
    }
    const auto same = eval::score_segmentation(gt, gt);
    identical_misses += (same.accuracy == 100.0 && same.edit == 100.0 && same.f1_10 == 100.0 &&
                         same.f1_25 == 100.0 && same.f1_50 == 100.0)
                            ? 0
                            : 1;
  }
  return {edit_mismatch == 0 && monotone_violations == 0 && identical_misses == 0,
          fmt("edit mismatches %ld of %ld string pairs; F1 monotonicity violations %ld over 1000 pairs; "
              "identical-input misses %ld",
              edit_mismatch, pairs, monotone_violations, identical_misses)};
}

// 8 ---------------------------------------------------------------------------

Outcome warmup_schedule() {
  const long z = 20, zw = 4;
  const double lambda = 0.1;
  struct Case {
    long epoch;
    double expected;
  };
  const std::vector<Case> cases{
      {z - 1, 0.0},
      {z, lambda * static_cast<double>(0) / static_cast<double>(zw)},
      {z + zw / 2, lambda * static_cast<double>(zw / 2) / static_cast<double>(zw)},
      {z + zw, lambda},
      {10 * z, lambda},
  };
  std::ostringstream detail;
  bool ok = true;
  for (const auto& c : cases) {
    const double got = warmup_weight(c.epoch, z, zw, lambda);
    ok = ok && got == c.expected;
    detail << "e=" << c.epoch << ":" << got << " ";
  }
  // The worked example with a later warmup.
  const double example = warmup_weight(51, 50, 4, 0.1);
  ok = ok && example == 0.025;
  detail << "| (50,4,0.1) e=51:" << example;
  return {ok, detail.str()};
}

// 9 ---------------------------------------------------------------------------

Outcome scale_invariance() {
  ref::Rng rng(909);
  const double eps = std::numeric_limits<double>::epsilon();
  long bad_scale = 0, bad_bound = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double de = rng.uniform(-1, 1) * std::exp(rng.uniform(-8, 8));
    const double w = rng.uniform(-1, 1) * std::exp(rng.uniform(-8, 8));
    const double c = std::exp(rng.uniform(-10, 10));
    const double r = energy::relative_residual(de, w, 0.0);
    const double rc = energy::relative_residual(c * de, c * w, 0.0);
    const double diff = std::abs(rc - r);
    worst = std::max(worst, diff);
    // Both sides round the same quotient; a few ulp of slack covers the scaled products.
    bad_scale += diff <= 4.0 * eps * std::max(1.0, std::abs(r)) ? 0 : 1;
    bad_bound += std::abs(r) <= 1.0 && std::abs(rc) <= 1.0 ? 0 : 1;
  }
  return {bad_scale == 0 && bad_bound == 0,
          fmt("1000 pairs: max |r(cx) - r(x)| %.3g, scale violations %ld, |r| > 1 count %ld", worst, bad_scale,
              bad_bound)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "SPD inertia by construction", 10, spd_by_construction},
      {2, "exact passivity", 5, exact_passivity},
      {3, "gradient fidelity", 30, gradient_fidelity},
      {4, "work-energy on the oracle", 20, oracle_work_energy},
      {5, "training efficacy", 1200, training_efficacy},
      {6, "boundary detection", 120, boundary_detection},
      {7, "metric oracles", 30, metric_oracles},
      {8, "warmup schedule", 0, warmup_schedule},
      {9, "scale invariance", 0, scale_invariance},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_seconds <= 0 || seconds < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s  %d  %-28s %8.2fs%s  %s\n", pass ? "PASS" : "FAIL", c.id, c.name, seconds,
                in_time ? "" : " (over budget)", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

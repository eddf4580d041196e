#include <benchmark/benchmark.h>

#include <random>

#include "lagdyn/dynamics.hpp"
#include "lagdyn/energy.hpp"
#include "lagdyn/eval.hpp"
#include "lagdyn/oracle.hpp"
#include "lagdyn/parameters.hpp"
#include "lagdyn/signals.hpp"

using namespace lagdyn;

namespace {

GeneralizedState random_state(Index frames, Index dof, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.1);
  RowMat q(frames, dof);
  double walk = 0.0;
  for (Index t = 0; t < frames; ++t) {
    for (Index j = 0; j < dof; ++j) {
      walk += n(rng);
      q(t, j) = 0.3 * std::sin(0.05 * static_cast<double>(t) + static_cast<double>(j)) + 0.01 * walk;
    }
  }
  return finite_differences(q);
}

std::vector<int> random_labels(std::mt19937_64& rng, Index frames) {
  std::uniform_int_distribution<int> run(5, 60), cls(0, 9);
  std::vector<int> out;
  while (static_cast<Index>(out.size()) < frames) {
    out.insert(out.end(), static_cast<std::size_t>(run(rng)), cls(rng));
  }
  out.resize(static_cast<std::size_t>(frames));
  return out;
}

}  // namespace

static void BM_BuildInertia(benchmark::State& st) {
  const Index dof = st.range(0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> raw(static_cast<std::size_t>(dynamics::lower_packed_size(dof)));
  for (auto& r : raw) {
    r = u(rng);
  }
  for (auto _ : st) {
    benchmark::DoNotOptimize(dynamics::build_inertia(raw, dof));
  }
}
BENCHMARK(BM_BuildInertia)->Arg(2)->Arg(8)->Arg(24);

static void BM_EstimateDynamicTerms(benchmark::State& st) {
  const Index dof = st.range(0);
  BundleShape shape;
  shape.dof = dof;
  shape.hidden_width = 64;
  const auto bundle = ParameterBundle::initialize(shape, 2);
  const auto state = random_state(500, dof, 3);
  for (auto _ : st) {
    auto terms = dynamics::estimate_dynamic_terms(bundle, state);
    dynamics::synthesize_tau(terms, state);
    benchmark::DoNotOptimize(terms.tau.data());
  }
  st.SetItemsProcessed(st.iterations() * state.frames());
}
BENCHMARK(BM_EstimateDynamicTerms)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_EnergyTrace(benchmark::State& st) {
  BundleShape shape;
  shape.dof = 8;
  shape.hidden_width = 32;
  const auto bundle = ParameterBundle::initialize(shape, 4);
  const auto state = random_state(2000, 8, 5);
  auto terms = dynamics::estimate_dynamic_terms(bundle, state);
  dynamics::synthesize_tau(terms, state);
  for (auto _ : st) {
    benchmark::DoNotOptimize(energy::energy_trace(terms, state).residual.data());
  }
  st.SetItemsProcessed(st.iterations() * state.frames());
}
BENCHMARK(BM_EnergyTrace)->Unit(benchmark::kMicrosecond);

static void BM_BoundaryDetection(benchmark::State& st) {
  const auto state = random_state(2000, 6, 6);
  BundleShape shape;
  shape.dof = 6;
  shape.hidden_width = 32;
  const auto bundle = ParameterBundle::initialize(shape, 7);
  auto terms = dynamics::estimate_dynamic_terms(bundle, state);
  dynamics::synthesize_tau(terms, state);
  for (auto _ : st) {
    const auto g = signals::salient_signals(terms.tau, state.qdot);
    benchmark::DoNotOptimize(
        signals::detect_boundaries(g.stage0, signals::BoundarySignal::TorqueChange, signals::Polarity::Peak));
  }
}
BENCHMARK(BM_BoundaryDetection)->Unit(benchmark::kMicrosecond);

static void BM_ScoreSegmentation(benchmark::State& st) {
  std::mt19937_64 rng(8);
  const Index frames = st.range(0);
  const auto gt = random_labels(rng, frames);
  const auto pred = random_labels(rng, frames);
  for (auto _ : st) {
    benchmark::DoNotOptimize(eval::score_segmentation(pred, gt));
  }
}
BENCHMARK(BM_ScoreSegmentation)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

static void BM_SimulateChain(benchmark::State& st) {
  const auto chain = oracle::LinkChain::uniform(st.range(0), 1.0, 0.5, 0.01);
  const Vec q0 = Vec::Constant(chain.links(), 0.2);
  const Vec v0 = Vec::Zero(chain.links());
  oracle::SimulationOptions opts;
  opts.dt = 1e-3;
  opts.steps = 1000;
  const auto torque = [&](double, Index) { return Vec::Zero(chain.links()).eval(); };
  for (auto _ : st) {
    benchmark::DoNotOptimize(oracle::simulate_trajectory(chain, q0, v0, torque, opts).state.q.data());
  }
  st.SetItemsProcessed(st.iterations() * opts.steps);
}
BENCHMARK(BM_SimulateChain)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();

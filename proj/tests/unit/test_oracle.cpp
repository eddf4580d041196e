#include <bit>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "lagdyn/oracle.hpp"
#include "reference.hpp"

using namespace lagdyn;
using namespace lagdyn::oracle;
using std::numbers::pi;

namespace {

LinkChain random_chain(ref::Rng& rng, Index n) {
  LinkChain c;
  for (Index i = 0; i < n; ++i) {
    c.masses.push_back(rng.uniform(0.2, 2.0));
    c.lengths.push_back(rng.uniform(0.3, 1.5));
    c.friction.push_back(rng.uniform(0.0, 0.3));
  }
  return c;
}

Mat inertia_rate(const LinkChain& chain, const Vec& q, const Vec& qdot) {
  Mat r = Mat::Zero(q.size(), q.size());
  for (Index k = 0; k < q.size(); ++k) {
    r += inertia_partial(chain, q, k) * qdot(k);
  }
  return r;
}

bool bitwise_equal(const RowMat& a, const RowMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return false;
  }
  for (Index i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.data()[i]) != std::bit_cast<std::uint64_t>(b.data()[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("single pendulum") {
  const auto chain = LinkChain::uniform(1, 1.0, 1.0);
  ref::Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Vec q = rng.vec(1, -pi, pi), v = rng.vec(1, -3, 3);
    const auto t = analytic_terms(chain, q, v);
    CHECK(t.M(0, 0) == 1.0);
    CHECK(t.C(0, 0) == 0.0);
    CHECK(t.G(0) == doctest::Approx(9.81 * std::sin(q(0))).epsilon(1e-15));
  }
  CHECK(gravity_vector(chain, Vec::Zero(1))(0) == 0.0);
  CHECK(inverse_dynamics(chain, Vec::Constant(1, pi / 2), Vec::Zero(1), Vec::Zero(1))(0) ==
        doctest::Approx(9.81).epsilon(1e-15));
}

TEST_CASE("two links against the textbook double pendulum") {
  ref::Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    LinkChain chain = random_chain(rng, 2);
    chain.gravity = rng.uniform(1.0, 12.0);
    const ref::DoublePendulum dp{chain.masses[0], chain.masses[1], chain.lengths[0], chain.lengths[1], chain.gravity};
    const Eigen::Vector2d q(rng.uniform(-pi, pi), rng.uniform(-pi, pi));
    const Eigen::Vector2d v(rng.uniform(-3, 3), rng.uniform(-3, 3));
    const auto t = analytic_terms(chain, q, v);
    CHECK((t.M - dp.inertia(q)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((t.C - dp.coriolis(q, v)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((t.G - dp.gravity(q)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("energies match Cartesian point-mass bookkeeping") {
  ref::Rng rng(3);
  for (Index n = 1; n <= 6; ++n) {
    for (int i = 0; i < 30; ++i) {
      const auto chain = random_chain(rng, n);
      const Vec q = rng.vec(n, -pi, pi), v = rng.vec(n, -2, 2);
      CHECK(kinetic_energy(chain, q, v) ==
            doctest::Approx(ref::cartesian_kinetic(chain.masses, chain.lengths, q, v)).epsilon(1e-12));
      CHECK(potential_energy(chain, q) ==
            doctest::Approx(ref::cartesian_potential(chain.masses, chain.lengths, chain.gravity, q)).epsilon(1e-12));
      const Vec g = gravity_vector(chain, q);
      for (Index k = 0; k < n; ++k) {
        Vec qp = q, qm = q;
        qp(k) += 1e-6;
        qm(k) -= 1e-6;
        const double num = (potential_energy(chain, qp) - potential_energy(chain, qm)) / 2e-6;
        CHECK(std::abs(g(k) - num) < 1e-6 * (1.0 + std::abs(num)));
      }
      const Eigen::SelfAdjointEigenSolver<Mat> eig(inertia_matrix(chain, q));
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("closed-form partials and Christoffel terms") {
  ref::Rng rng(4);
  for (Index n = 2; n <= 5; ++n) {
    for (int i = 0; i < 30; ++i) {
      const auto chain = random_chain(rng, n);
      const Vec q = rng.vec(n, -pi, pi), v = rng.vec(n, -2, 2);
      for (Index k = 0; k < n; ++k) {
        Vec qp = q, qm = q;
        qp(k) += 1e-6;
        qm(k) -= 1e-6;
        const Mat num = (inertia_matrix(chain, qp) - inertia_matrix(chain, qm)) / 2e-6;
        CHECK((inertia_partial(chain, q, k) - num).cwiseAbs().maxCoeff() < 1e-8);
      }
      const auto closed = analytic_terms(chain, q, v);
      const auto numeric = analytic_terms(chain, q, v, ChristoffelMethod::CentralDifference);
      CHECK((closed.C - numeric.C).cwiseAbs().maxCoeff() < 1e-7);

      const Mat skew_closed = inertia_rate(chain, q, v) - 2.0 * closed.C;
      CHECK((skew_closed + skew_closed.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Mat mdot_num = Mat::Zero(n, n);
      for (Index k = 0; k < n; ++k) {
        Vec qp = q, qm = q;
        qp(k) += 1e-6;
        qm(k) -= 1e-6;
        mdot_num += (inertia_matrix(chain, qp) - inertia_matrix(chain, qm)) / 2e-6 * v(k);
      }
      const Mat skew_num = mdot_num - 2.0 * numeric.C;
      CHECK((skew_num + skew_num.transpose()).cwiseAbs().maxCoeff() < 1e-6);
      for (int k = 0; k < 10; ++k) {
        const Vec x = rng.vec(n, -3, 3);
        CHECK(std::abs(x.dot(skew_closed * x)) < 1e-9);
      }
    }
  }
}

TEST_CASE("inverse and forward dynamics") {
  const auto still = LinkChain::uniform(3, 1.0, 1.0);
  CHECK(inverse_dynamics(still, Vec::Zero(3), Vec::Zero(3), Vec::Zero(3)).norm() == 0.0);

  ref::Rng rng(5);
  for (Index n = 1; n <= 5; ++n) {
    for (int i = 0; i < 40; ++i) {
      const auto chain = random_chain(rng, n);
      const Vec q = rng.vec(n, -pi, pi), v = rng.vec(n, -2, 2), tau = rng.vec(n, -5, 5);
      const Vec a = forward_dynamics(chain, q, v, tau);
      CHECK((inverse_dynamics(chain, q, v, a) - tau).cwiseAbs().maxCoeff() < 1e-9);
      const auto t = analytic_terms(chain, q, v);
      Vec fr(n);
      for (Index k = 0; k < n; ++k) {
        fr(k) = chain.friction_at(k) * v(k);
      }
      const Vec expected = inertia_matrix(chain, q).inverse() * (tau - t.C * v - t.G - fr);
      CHECK((a - expected).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + expected.cwiseAbs().maxCoeff()));
    }
  }
  CHECK_THROWS_AS(inverse_dynamics(still, Vec::Zero(2), Vec::Zero(2), Vec::Zero(2)), ShapeMismatch);
}

TEST_CASE("equilibrium stays at rest") {
  const auto chain = LinkChain::uniform(3, 1.0, 0.5);
  SimulationOptions opts;
  opts.steps = 500;
  const auto traj = simulate_trajectory(chain, Vec::Zero(3), Vec::Zero(3), [](double, Index) { return Vec(Vec::Zero(3)); },
                                        opts);
  CHECK(traj.state.q.rows() == 501);
  CHECK(traj.state.q.norm() == 0.0);
  CHECK(traj.state.qdot.norm() == 0.0);
}

TEST_CASE("unforced swing conserves energy") {
  const auto chain = LinkChain::uniform(2, 1.0, 1.0);
  SimulationOptions opts;
  opts.dt = 1e-3;
  opts.steps = 4000;
  const auto traj = simulate_trajectory(chain, Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d::Zero(),
                                        [](double, Index) { return Vec(Vec::Zero(2)); }, opts);
  auto total = [&](Index t) {
    const Vec q = traj.state.q.row(t).transpose(), v = traj.state.qdot.row(t).transpose();
    return kinetic_energy(chain, q, v) + potential_energy(chain, q);
  };
  const double e0 = total(0);
  double worst = 0.0;
  for (Index t = 0; t < traj.state.frames(); ++t) {
    worst = std::max(worst, std::abs(total(t) - e0) / std::abs(e0));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("fourth-order convergence") {
  LinkChain chain = LinkChain::uniform(2, 1.0, 1.0, 0.1);
  const double horizon = 2.0;
  auto endpoint = [&](Index steps) {
    SimulationOptions opts;
    opts.dt = horizon / static_cast<double>(steps);
    opts.steps = steps;
    const auto traj = simulate_trajectory(
        chain, Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d::Zero(),
        [](double t, Index) { return Vec(Eigen::Vector2d(std::sin(3.0 * t), 0.5 * std::cos(t))); }, opts);
    Vec out(4);
    out << traj.state.q.bottomRows(1).transpose(), traj.state.qdot.bottomRows(1).transpose();
    return out;
  };
  const Vec coarse = endpoint(100), fine = endpoint(200), reference = endpoint(6400);
  const double ratio = (coarse - reference).norm() / (fine - reference).norm();
  INFO("ratio ", ratio);
  CHECK(ratio >= 8.0);
  CHECK(ratio <= 32.0);
}

TEST_CASE("sampling modes and blowup") {
  const auto chain = LinkChain::uniform(2, 0.5, 0.8);
  SimulationOptions opts;
  opts.dt = 0.05;
  opts.steps = 40;
  opts.substeps = 4;
  auto constant = [](double, Index) { return Vec(Eigen::Vector2d(0.3, -0.2)); };
  const auto a = simulate_trajectory(chain, Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d::Zero(), constant, opts);
  opts.sampling = TorqueSampling::ZeroOrderHold;
  const auto b = simulate_trajectory(chain, Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d::Zero(), constant, opts);
  CHECK(bitwise_equal(a.state.q, b.state.q));

  // Held torque is sampled at the frame start only.
  int calls_per_frame = 0;
  Index last = -1;
  auto counting = [&](double, Index frame) {
    if (frame == last) {
      ++calls_per_frame;
    }
    last = frame;
    return Vec(Eigen::Vector2d::Zero());
  };
  simulate_trajectory(chain, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), counting, opts);
  CHECK(calls_per_frame == 0);

  SimulationOptions wild;
  wild.dt = 0.1;
  wild.steps = 200;
  wild.blowup_bound = 50.0;
  CHECK_THROWS_AS(simulate_trajectory(chain, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(),
                                      [](double, Index) { return Vec(Eigen::Vector2d(100.0, -100.0)); }, wild),
                  NumericalBlowup);

  SimulationOptions bad;
  bad.dt = 0.0;
  CHECK_THROWS_AS(simulate_trajectory(chain, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), constant, bad),
                  ConfigInvalid);
}

TEST_CASE("chain validation") {
  CHECK_NOTHROW(LinkChain::uniform(2, 1, 1).validate());
  CHECK_THROWS_AS((LinkChain{{1.0}, {}, 9.81, {}}).validate(), ConfigInvalid);
  CHECK_THROWS_AS((LinkChain{{1.0, -1.0}, {1.0, 1.0}, 9.81, {}}).validate(), ConfigInvalid);
  CHECK_THROWS_AS((LinkChain{{1.0}, {1.0}, 9.81, {0.1, 0.2}}).validate(), ConfigInvalid);
}

TEST_CASE("labeled sequences") {
  const auto chain = LinkChain::uniform(2, 0.01, 1.0, 0.01);
  Regime hold{100, {TorqueLawKind::Hold, Eigen::Vector2d(0.05, -0.02), Vec(), 0.0, 0.0}, 0};
  Regime free{100, {}, 2};
  const auto one = generate_sequence(chain, {hold}, Eigen::Vector2d(0.1, 0.0), {}, 1);
  CHECK(one.boundaries.empty());
  CHECK(one.frames() == 100);

  const auto two = generate_sequence(chain, {hold, free}, Eigen::Vector2d(0.1, 0.0), {}, 1);
  CHECK(two.boundaries == std::vector<Index>{100});
  CHECK(two.frames() == 200);
  for (Index t = 0; t < 200; ++t) {
    CHECK(two.labels[static_cast<std::size_t>(t)] == (t < 100 ? 0 : 2));
  }
  SequenceOptions quiet;
  quiet.drive_noise_std = 0.0;
  const auto clean = generate_sequence(chain, {hold, free}, Eigen::Vector2d(0.1, 0.0), quiet, 1);
  CHECK(clean.tau(50, 0) == 0.05);
  CHECK(clean.tau(150, 1) == 0.0);
  CHECK(clean.q.row(0) == Eigen::RowVector2d(0.1, 0.0));

  SequenceOptions jitter;
  jitter.position_noise_std = 0.01;
  const auto noisy = generate_sequence(chain, {hold, free}, Eigen::Vector2d(0.1, 0.0), jitter, 1);
  CHECK(bitwise_equal(noisy.tau, two.tau));
  CHECK_FALSE(bitwise_equal(noisy.q, two.q));
  CHECK((noisy.q - two.q).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("generated datasets") {
  DatasetOptions opts;
  opts.sequences = 4;
  opts.frames = 360;
  opts.min_regime_frames = 100;
  const auto a = generate_labeled_dataset(opts, 7);
  const auto b = generate_labeled_dataset(opts, 7);
  const auto c = generate_labeled_dataset(opts, 8);
  REQUIRE(a.size() == 4);
  for (std::size_t s = 0; s < a.size(); ++s) {
    CHECK(bitwise_equal(a[s].q, b[s].q));
    CHECK(bitwise_equal(a[s].tau, b[s].tau));
    CHECK(a[s].labels == b[s].labels);
    CHECK(a[s].boundaries == b[s].boundaries);
  }
  CHECK_FALSE(bitwise_equal(a[0].q, c[0].q));

  // Sequence k depends only on (seed, k).
  opts.sequences = 2;
  const auto prefix = generate_labeled_dataset(opts, 7);
  CHECK(bitwise_equal(prefix[1].q, a[1].q));

  const double min_step = std::max(opts.step_ratio * opts.sequence.drive_noise_std, opts.min_step);
  for (const auto& seq : a) {
    CHECK(seq.frames() == 360);
    REQUIRE(seq.boundaries.size() == 2);
    Index prev = 0;
    for (Index b0 : seq.boundaries) {
      CHECK(b0 - prev >= 100);
      const auto k = static_cast<std::size_t>(b0);
      CHECK(seq.labels[k] != seq.labels[k - 1]);
      // The law step clears min_step; drive noise moves each side by a few σ.
      CHECK((seq.tau.row(b0) - seq.tau.row(b0 - 1)).norm() >= min_step - 10.0 * opts.sequence.drive_noise_std);
      prev = b0;
    }
    CHECK(360 - prev >= 100);
    for (Index t = 1; t < seq.frames(); ++t) {
      const bool is_boundary =
          std::find(seq.boundaries.begin(), seq.boundaries.end(), t) != seq.boundaries.end();
      if (!is_boundary) {
        CHECK(seq.labels[static_cast<std::size_t>(t)] == seq.labels[static_cast<std::size_t>(t - 1)]);
      }
    }
    CHECK(seq.q.cwiseAbs().maxCoeff() < 3.0);
  }

  DatasetOptions tight;
  tight.frames = 250;
  tight.regimes = 3;
  tight.min_regime_frames = 100;
  CHECK_THROWS_AS(generate_labeled_dataset(tight, 1), ConfigInvalid);
}

#include "lagdyn/oracle.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace lagdyn::oracle {

namespace {

// μ_k = Σ_{i >= k} m_i.
Vec tail_masses(const LinkChain& chain) {
  const Index n = chain.links();
  Vec mu(n);
  double acc = 0.0;
  for (Index k = n - 1; k >= 0; --k) {
    acc += chain.masses[static_cast<std::size_t>(k)];
    mu(k) = acc;
  }
  return mu;
}

Vec friction_torque(const LinkChain& chain, const Vec& qdot) {
  Vec f(qdot.size());
  for (Index i = 0; i < qdot.size(); ++i) {
    f(i) = chain.friction_at(i) * qdot(i);
  }
  return f;
}

Mat coriolis_from_partials(const std::vector<Mat>& dm, const Vec& qdot) {
  const Index n = qdot.size();
  Mat c = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Index k = 0; k < n; ++k) {
        const auto& dk = dm[static_cast<std::size_t>(k)];
        const auto& dj = dm[static_cast<std::size_t>(j)];
        const auto& di = dm[static_cast<std::size_t>(i)];
        s += 0.5 * (dk(i, j) + dj(i, k) - di(j, k)) * qdot(k);
      }
      c(i, j) = s;
    }
  }
  return c;
}

void check_state(const LinkChain& chain, const Vec& a, const Vec& b) {
  if (a.size() != chain.links() || b.size() != chain.links()) {
    throw ShapeMismatch("state size does not match the link count");
  }
}

}  // namespace

void LinkChain::validate() const {
  if (masses.empty() || masses.size() != lengths.size()) {
    throw ConfigInvalid("chain needs matching, nonempty masses and lengths");
  }
  if (!friction.empty() && friction.size() != masses.size()) {
    throw ConfigInvalid("chain friction must be empty or one value per link");
  }
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i] > 0.0) || !(lengths[i] > 0.0)) {
      throw ConfigInvalid("chain masses and lengths must be positive");
    }
  }
  if (!std::isfinite(gravity)) {
    throw ConfigInvalid("gravity must be finite");
  }
}

LinkChain LinkChain::uniform(Index links, double mass, double length, double friction) {
  const auto n = static_cast<std::size_t>(links);
  return {std::vector<double>(n, mass), std::vector<double>(n, length), 9.81, std::vector<double>(n, friction)};
}

Mat inertia_matrix(const LinkChain& chain, const Vec& q) {
  const Index n = chain.links();
  const Vec mu = tail_masses(chain);
  Mat m(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k <= j; ++k) {
      const double v = chain.lengths[static_cast<std::size_t>(j)] * chain.lengths[static_cast<std::size_t>(k)] *
                       std::cos(q(j) - q(k)) * mu(j);
      m(j, k) = v;
      m(k, j) = v;
    }
  }
  return m;
}

Mat inertia_partial(const LinkChain& chain, const Vec& q, Index i) {
  const Index n = chain.links();
  const Vec mu = tail_masses(chain);
  Mat d = Mat::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < n; ++k) {
      const double sel = (j == i ? 1.0 : 0.0) - (k == i ? 1.0 : 0.0);
      if (sel == 0.0) {
        continue;
      }
      const double a = chain.lengths[static_cast<std::size_t>(j)] * chain.lengths[static_cast<std::size_t>(k)] *
                       mu(std::max(j, k));
      d(j, k) = -a * std::sin(q(j) - q(k)) * sel;
    }
  }
  return d;
}

Vec gravity_vector(const LinkChain& chain, const Vec& q) {
  const Vec mu = tail_masses(chain);
  Vec g(chain.links());
  for (Index k = 0; k < chain.links(); ++k) {
    g(k) = chain.gravity * mu(k) * chain.lengths[static_cast<std::size_t>(k)] * std::sin(q(k));
  }
  return g;
}

AnalyticTerms analytic_terms(const LinkChain& chain, const Vec& q, const Vec& qdot, ChristoffelMethod method,
                             double step) {
  check_state(chain, q, qdot);
  const Index n = chain.links();
  std::vector<Mat> dm;
  dm.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    if (method == ChristoffelMethod::ClosedForm) {
      dm.push_back(inertia_partial(chain, q, i));
    } else {
      Vec qp = q;
      Vec qm = q;
      qp(i) += step;
      qm(i) -= step;
      dm.push_back((inertia_matrix(chain, qp) - inertia_matrix(chain, qm)) / (2.0 * step));
    }
  }
  return {inertia_matrix(chain, q), coriolis_from_partials(dm, qdot), gravity_vector(chain, q)};
}

Vec inverse_dynamics(const LinkChain& chain, const Vec& q, const Vec& qdot, const Vec& qddot) {
  const auto t = analytic_terms(chain, q, qdot);
  return t.M * qddot + t.C * qdot + t.G + friction_torque(chain, qdot);
}

Vec forward_dynamics(const LinkChain& chain, const Vec& q, const Vec& qdot, const Vec& tau) {
  const auto t = analytic_terms(chain, q, qdot);
  return t.M.ldlt().solve(tau - t.C * qdot - t.G - friction_torque(chain, qdot));
}

double kinetic_energy(const LinkChain& chain, const Vec& q, const Vec& qdot) {
  return 0.5 * qdot.dot(inertia_matrix(chain, q) * qdot);
}

double potential_energy(const LinkChain& chain, const Vec& q) {
  const Vec mu = tail_masses(chain);
  double e = 0.0;
  for (Index k = 0; k < chain.links(); ++k) {
    e -= chain.gravity * mu(k) * chain.lengths[static_cast<std::size_t>(k)] * std::cos(q(k));
  }
  return e;
}

Trajectory simulate_trajectory(const LinkChain& chain, const Vec& q0, const Vec& qdot0, const TorqueProfile& torque,
                               const SimulationOptions& options) {
  chain.validate();
  check_state(chain, q0, qdot0);
  if (!(options.dt > 0.0) || options.steps < 0 || options.substeps < 1) {
    throw ConfigInvalid("simulation needs dt > 0, steps >= 0 and substeps >= 1");
  }
  const Index n = chain.links();
  const Index frames = options.steps + 1;
  const double h = options.dt / static_cast<double>(options.substeps);

  Trajectory traj;
  traj.dt = options.dt;
  traj.state.q.resize(frames, n);
  traj.state.qdot.resize(frames, n);
  traj.state.qddot.resize(frames, n);
  traj.tau.resize(frames, n);

  Vec q = q0;
  Vec v = qdot0;
  auto check = [&](Index frame) {
    const double mag = std::max(q.cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff());
    if (!std::isfinite(mag) || mag > options.blowup_bound) {
      std::ostringstream msg;
      msg << "state magnitude " << mag << " exceeds the bound at frame " << frame;
      throw NumericalBlowup(msg.str());
    }
  };

  for (Index k = 0; k < frames; ++k) {
    const double t0 = static_cast<double>(k) * options.dt;
    const Vec held = torque(t0, k);
    traj.state.q.row(k) = q.transpose();
    traj.state.qdot.row(k) = v.transpose();
    traj.tau.row(k) = held.transpose();
    traj.state.qddot.row(k) = forward_dynamics(chain, q, v, held).transpose();
    if (k + 1 == frames) {
      break;
    }
    auto tau_at = [&](double t) {
      return options.sampling == TorqueSampling::ZeroOrderHold ? held : torque(t, k);
    };
    for (Index s = 0; s < options.substeps; ++s) {
      const double t = t0 + static_cast<double>(s) * h;
      const Vec k1v = forward_dynamics(chain, q, v, tau_at(t));
      const Vec k1q = v;
      const Vec k2v = forward_dynamics(chain, q + 0.5 * h * k1q, v + 0.5 * h * k1v, tau_at(t + 0.5 * h));
      const Vec k2q = v + 0.5 * h * k1v;
      const Vec k3v = forward_dynamics(chain, q + 0.5 * h * k2q, v + 0.5 * h * k2v, tau_at(t + 0.5 * h));
      const Vec k3q = v + 0.5 * h * k2v;
      const Vec k4v = forward_dynamics(chain, q + h * k3q, v + h * k3v, tau_at(t + h));
      const Vec k4q = v + h * k3v;
      q += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
      v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    check(k + 1);
  }
  return traj;
}

dynamics::DynamicTerms trajectory_terms(const LinkChain& chain, const Trajectory& trajectory) {
  const Index n = chain.links();
  const Index frames = trajectory.state.frames();
  dynamics::DynamicTerms terms;
  terms.dof = n;
  terms.inertia.resize(frames, n * n);
  terms.coriolis.resize(frames, n * n);
  terms.gravity.resize(frames, n);
  terms.friction.resize(frames, n);
  terms.tau = trajectory.tau;
  for (Index t = 0; t < frames; ++t) {
    const Vec q = trajectory.state.q.row(t).transpose();
    const Vec v = trajectory.state.qdot.row(t).transpose();
    const auto a = analytic_terms(chain, q, v);
    SquareMap(terms.inertia.row(t).data(), n, n) = a.M;
    SquareMap(terms.coriolis.row(t).data(), n, n) = a.C;
    terms.gravity.row(t) = a.G.transpose();
    terms.friction.row(t) = friction_torque(chain, v).transpose();
  }
  return terms;
}

Vec TorqueLaw::evaluate(double t, Index dof) const {
  switch (kind) {
    case TorqueLawKind::Free:
      return Vec::Zero(dof);
    case TorqueLawKind::Hold:
      return offset;
    case TorqueLawKind::Drive:
      break;
  }
  const double s = std::sin(2.0 * std::numbers::pi * frequency * t + phase);
  return offset + amplitude * s;
}

LabeledSequence generate_sequence(const LinkChain& chain, const std::vector<Regime>& regimes, const Vec& q0,
                                  const SequenceOptions& options, std::uint64_t seed) {
  const Index n = chain.links();
  std::vector<Index> starts;
  Index frames = 0;
  for (const auto& r : regimes) {
    if (r.frames < 1) {
      throw ConfigInvalid("every regime needs at least one frame");
    }
    starts.push_back(frames);
    frames += r.frames;
  }
  if (frames == 0) {
    throw ConfigInvalid("a sequence needs at least one regime");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  // Noise is drawn up front so the torque profile stays a pure function.
  RowMat drive_noise = RowMat::Zero(frames, n);
  if (options.drive_noise_std > 0.0) {
    for (Index k = 0; k < frames; ++k) {
      for (Index i = 0; i < n; ++i) {
        drive_noise(k, i) = options.drive_noise_std * unit(rng);
      }
    }
  }

  std::vector<std::size_t> regime_of(static_cast<std::size_t>(frames));
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    for (Index k = 0; k < regimes[r].frames; ++k) {
      regime_of[static_cast<std::size_t>(starts[r] + k)] = r;
    }
  }

  auto profile = [&](double, Index frame) -> Vec {
    const auto r = regime_of[static_cast<std::size_t>(frame)];
    const double local = static_cast<double>(frame - starts[r]) * options.dt;
    return regimes[r].law.evaluate(local, n) + drive_noise.row(frame).transpose();
  };

  SimulationOptions sim;
  sim.dt = options.dt;
  sim.steps = frames - 1;
  sim.substeps = options.substeps;
  sim.sampling = TorqueSampling::ZeroOrderHold;
  const auto traj = simulate_trajectory(chain, q0, Vec::Zero(n), profile, sim);

  LabeledSequence seq;
  seq.chain = chain;
  seq.dt = options.dt;
  seq.q = traj.state.q;
  seq.tau = traj.tau;
  if (options.position_noise_std > 0.0) {
    for (Index k = 0; k < frames; ++k) {
      for (Index i = 0; i < n; ++i) {
        seq.q(k, i) += options.position_noise_std * unit(rng);
      }
    }
  }
  seq.labels.resize(static_cast<std::size_t>(frames));
  for (Index k = 0; k < frames; ++k) {
    seq.labels[static_cast<std::size_t>(k)] = regimes[regime_of[static_cast<std::size_t>(k)]].label;
  }
  seq.boundaries.assign(starts.begin() + 1, starts.end());
  return seq;
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

TorqueLaw sample_law(int label, const Vec& scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto signed_between = [&](double lo, double hi) {
    const double mag = lo + (hi - lo) * u(rng);
    return u(rng) < 0.5 ? -mag : mag;
  };
  const Index n = scale.size();
  TorqueLaw law;
  law.offset = Vec::Zero(n);
  law.amplitude = Vec::Zero(n);
  switch (label) {
    case 0:
      law.kind = TorqueLawKind::Hold;
      for (Index i = 0; i < n; ++i) {
        law.offset(i) = signed_between(0.3, 0.6) * scale(i);
      }
      break;
    case 1:
      law.kind = TorqueLawKind::Drive;
      for (Index i = 0; i < n; ++i) {
        law.offset(i) = signed_between(0.0, 0.3) * scale(i);
        law.amplitude(i) = (0.1 + 0.2 * u(rng)) * scale(i);
      }
      law.frequency = 0.05 + 0.1 * u(rng);
      law.phase = 2.0 * std::numbers::pi * u(rng);
      break;
    default:
      law.kind = TorqueLawKind::Free;
      break;
  }
  return law;
}

}  // namespace

std::vector<LabeledSequence> generate_labeled_dataset(const DatasetOptions& options, std::uint64_t seed) {
  options.chain.validate();
  if (options.regimes < 1 || options.frames < options.regimes * options.min_regime_frames) {
    throw ConfigInvalid("sequence too short for the requested regimes");
  }
  const Index n = options.chain.links();
  Vec scale(n);
  {
    double mu = 0.0;
    for (Index k = n - 1; k >= 0; --k) {
      mu += options.chain.masses[static_cast<std::size_t>(k)];
      scale(k) = options.chain.gravity * mu * options.chain.lengths[static_cast<std::size_t>(k)];
    }
  }
  const double min_step =
      std::max(options.step_ratio * options.sequence.drive_noise_std, options.min_step);

  std::vector<LabeledSequence> out;
  out.reserve(static_cast<std::size_t>(options.sequences));
  for (Index s = 0; s < options.sequences; ++s) {
    std::mt19937_64 rng(sub_seed(seed, static_cast<std::uint64_t>(s)));
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // Durations: minimum each, the slack split at sorted uniform cut points.
    const Index slack = options.frames - options.regimes * options.min_regime_frames;
    std::vector<Index> cuts{0, slack};
    for (Index r = 1; r < options.regimes; ++r) {
      cuts.push_back(static_cast<Index>(std::floor(u(rng) * static_cast<double>(slack + 1))) % (slack + 1));
    }
    std::sort(cuts.begin(), cuts.end());

    // Whole schedules are redrawn until every regime change clears min_step.
    std::vector<Regime> regimes;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) {
        throw ConfigInvalid("cannot sample regime changes above the minimum step");
      }
      regimes.clear();
      int label = static_cast<int>(rng() % 3);
      bool ok = true;
      for (Index r = 0; r < options.regimes && ok; ++r) {
        Regime reg;
        reg.frames =
            options.min_regime_frames + cuts[static_cast<std::size_t>(r + 1)] - cuts[static_cast<std::size_t>(r)];
        if (r > 0) {
          label = (label + 1 + static_cast<int>(rng() % 2)) % 3;
        }
        reg.label = label;
        reg.law = sample_law(label, scale, rng);
        if (r > 0) {
          const auto& prev = regimes.back();
          const double prev_end = static_cast<double>(prev.frames - 1) * options.sequence.dt;
          ok = (reg.law.evaluate(0.0, n) - prev.law.evaluate(prev_end, n)).norm() >= min_step;
        }
        regimes.push_back(std::move(reg));
      }
      if (ok) {
        break;
      }
    }

    Vec q0(n);
    for (Index i = 0; i < n; ++i) {
      q0(i) = options.initial_angle * (2.0 * u(rng) - 1.0);
    }
    out.push_back(generate_sequence(options.chain, regimes, q0, options.sequence, rng()));
  }
  return out;
}

}  // namespace lagdyn::oracle

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lagdyn/dynamics.hpp"
#include "lagdyn/types.hpp"

namespace lagdyn::oracle {

/// Planar chain of n point masses, each at the distal end of its link.
/// Angles are absolute, measured from the downward vertical.
struct LinkChain {
  std::vector<double> masses;    ///< kg
  std::vector<double> lengths;   ///< m
  double gravity = 9.81;         ///< m/s²
  std::vector<double> friction;  ///< viscous, N·m·s/rad; empty means zero

  Index links() const { return static_cast<Index>(masses.size()); }
  double friction_at(Index i) const { return friction.empty() ? 0.0 : friction[static_cast<std::size_t>(i)]; }

  /// Throws ConfigInvalid on nonpositive mass/length or mismatched sizes.
  void validate() const;

  static LinkChain uniform(Index links, double mass, double length, double friction = 0.0);
};

enum class ChristoffelMethod { ClosedForm, CentralDifference };

struct AnalyticTerms {
  Mat M;
  Mat C;
  Vec G;
};

/// M_jk = l_j l_k cos(q_j - q_k) Σ_{i >= max(j,k)} m_i.
Mat inertia_matrix(const LinkChain& chain, const Vec& q);

/// ∂M/∂q_i.
Mat inertia_partial(const LinkChain& chain, const Vec& q, Index i);

/// G = ∂E_P/∂q with E_P = -g Σ_k μ_k l_k cos q_k.
Vec gravity_vector(const LinkChain& chain, const Vec& q);

/// C_ij = Σ_k Γ_ijk q̇_k, Γ_ijk = ½(∂_k M_ij + ∂_j M_ik - ∂_i M_jk). The
/// central-difference path differentiates M numerically with `step`.
AnalyticTerms analytic_terms(const LinkChain& chain, const Vec& q, const Vec& qdot,
                             ChristoffelMethod method = ChristoffelMethod::ClosedForm, double step = 1e-6);

/// τ = M q̈ + C q̇ + G + f ⊙ q̇.
Vec inverse_dynamics(const LinkChain& chain, const Vec& q, const Vec& qdot, const Vec& qddot);

/// q̈ = M⁻¹(τ - C q̇ - G - f ⊙ q̇).
Vec forward_dynamics(const LinkChain& chain, const Vec& q, const Vec& qdot, const Vec& tau);

double kinetic_energy(const LinkChain& chain, const Vec& q, const Vec& qdot);
double potential_energy(const LinkChain& chain, const Vec& q);

/// Torque as a function of time (s) and frame index.
using TorqueProfile = std::function<Vec(double time, Index frame)>;

enum class TorqueSampling {
  Continuous,     ///< evaluated at every Runge-Kutta stage
  ZeroOrderHold,  ///< sampled at the frame start and held for the frame
};

struct SimulationOptions {
  double dt = 1e-3;
  Index steps = 1000;
  Index substeps = 1;  ///< RK4 steps per recorded frame
  TorqueSampling sampling = TorqueSampling::Continuous;
  double blowup_bound = 1e6;
};

/// steps + 1 frames starting at the initial state, in physical units.
struct Trajectory {
  GeneralizedState state;
  RowMat tau;
  double dt = 0.0;
};

/// Classic RK4 on (q, q̇). Throws NumericalBlowup when any state entry is
/// non-finite or exceeds the bound.
Trajectory simulate_trajectory(const LinkChain& chain, const Vec& q0, const Vec& qdot0, const TorqueProfile& torque,
                               const SimulationOptions& options);

/// Oracle M, C, G, F and τ along a trajectory, packed like learned terms.
/// Ṁ and N are left empty.
dynamics::DynamicTerms trajectory_terms(const LinkChain& chain, const Trajectory& trajectory);

// Labeled synthetic sequences ------------------------------------------------------

enum class TorqueLawKind { Hold, Drive, Free };

/// Hold: τ = offset. Drive: τ = offset + amplitude ⊙ sin(2π f t + phase).
/// Free: τ = 0. Time t is measured from the regime start.
struct TorqueLaw {
  TorqueLawKind kind = TorqueLawKind::Free;
  Vec offset;
  Vec amplitude;
  double frequency = 0.0;
  double phase = 0.0;

  Vec evaluate(double t, Index dof) const;
};

struct Regime {
  Index frames = 0;
  TorqueLaw law;
  int label = 0;
};

struct LabeledSequence {
  LinkChain chain;
  double dt = 0.0;
  RowMat q;    ///< sampled angles, optionally jittered
  RowMat tau;  ///< applied torque per frame
  std::vector<int> labels;
  std::vector<Index> boundaries;

  Index frames() const { return q.rows(); }
};

struct SequenceOptions {
  double dt = 0.1;
  Index substeps = 10;
  double drive_noise_std = 0.002;   ///< Gaussian torque noise per frame
  double position_noise_std = 0.0;  ///< Gaussian jitter on recorded q
};

/// Concatenates the regimes under zero-order-hold torque starting from rest
/// at q0. Boundaries are the first frame of every regime after the first.
LabeledSequence generate_sequence(const LinkChain& chain, const std::vector<Regime>& regimes, const Vec& q0,
                                  const SequenceOptions& options, std::uint64_t seed);

struct DatasetOptions {
  LinkChain chain = LinkChain::uniform(2, 0.01, 1.0, 0.01);
  Index sequences = 200;
  Index frames = 500;
  Index regimes = 3;
  Index min_regime_frames = 100;
  SequenceOptions sequence;
  /// Every regime change must move τ by at least max(step_ratio · noise std,
  /// min_step) in norm.
  double step_ratio = 10.0;
  double min_step = 0.03;
  double initial_angle = 0.2;  ///< q0 drawn uniformly in ±initial_angle
};

/// Random regime schedules (classes 0 hold, 1 drive, 2 free; neighbours
/// differ). Sequence k uses a sub-seed derived from (seed, k) only.
std::vector<LabeledSequence> generate_labeled_dataset(const DatasetOptions& options, std::uint64_t seed);

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace lagdyn::oracle

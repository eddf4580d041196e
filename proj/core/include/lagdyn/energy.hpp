#pragma once

#include <cmath>

#include "lagdyn/dynamics.hpp"

namespace lagdyn::energy {

struct EnergyOptions {
  double delta = 0.1;            ///< denominator stabilizer δ
  double mask_threshold = 1e-3;  ///< frames with |ΔE_K| + |W| < η are masked
  double huber_knee = 1.0;       ///< κ_H
};

/// Work-energy bookkeeping of one sequence. Entries at t = 0 of the
/// interval quantities (ΔE_K, W, r_E) are zero and the frame is masked.
struct EnergyTrace {
  Vec kinetic;         ///< E_K
  Vec kinetic_change;  ///< ΔE_K(t) = E_K(t) - E_K(t-1)
  Vec power;           ///< P
  Vec work;            ///< W(t) = ½(P(t) + P(t-1))
  Vec residual;        ///< r_E
  Eigen::Array<bool, Eigen::Dynamic, 1> mask;

  Index frames() const { return kinetic.size(); }
  /// Mean |r_E| over t ∈ [1, T-1], masked frames counted as zero.
  double mean_abs_residual() const;
};

/// E_K(t) = ½ q̇(t)ᵀ M(t) q̇(t).
Vec kinetic_energy(const RowMat& inertia, const RowMat& qdot);

struct PowerWork {
  Vec power;
  Vec work;
};

/// P(t) = Σᵢ (τᵢ - Gᵢ - Fᵢ) q̇ᵢ and trapezoidal W(t) for t >= 1 (W(0) = 0).
PowerWork power_and_work(const RowMat& tau, const RowMat& gravity, const RowMat& friction, const RowMat& qdot);

/// (ΔE - W) / (|ΔE| + |W| + δ), unmasked.
inline double relative_residual(double kinetic_change, double work, double delta) {
  return (kinetic_change - work) / (std::abs(kinetic_change) + std::abs(work) + delta);
}

double huber(double r, double knee);
double huber_grad(double r, double knee);

/// Full trace from synthesized terms (terms.tau must be populated).
EnergyTrace energy_trace(const dynamics::DynamicTerms& terms, const GeneralizedState& state,
                         const EnergyOptions& options = {});

/// Mean over t ∈ [1, T-1] of Huber(r_E(t)). Throws DegenerateLength if T < 2.
double energy_consistency_loss(const dynamics::DynamicTerms& terms, const GeneralizedState& state,
                               const EnergyOptions& options = {});

/// As above, and adds scale · ∂loss/∂(M, τ, G, F) into `grads`.
double energy_consistency_loss(const dynamics::DynamicTerms& terms, const GeneralizedState& state,
                               const EnergyOptions& options, dynamics::TermGradients& grads, double scale,
                               EnergyTrace* trace = nullptr);

}  // namespace lagdyn::energy

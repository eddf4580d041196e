#pragma once

#include <span>

#include "lagdyn/parameters.hpp"
#include "lagdyn/types.hpp"

namespace lagdyn::dynamics {

inline constexpr double kDefaultInertiaFloor = 1e-5;

/// D(D+1)/2: packed lower triangle, row-major over (i >= j).
inline Index lower_packed_size(Index dof) { return dof * (dof + 1) / 2; }
/// D(D-1)/2: packed strict upper triangle, row-major over (i < j).
inline Index strict_upper_packed_size(Index dof) { return dof * (dof - 1) / 2; }

/// Lower-triangular factor L and M = L Lᵀ for one frame.
struct InertiaFactor {
  RowMat lower;
  RowMat inertia;
};

/// L from packed raw entries with L_ii = softplus(raw_ii) + floor, then
/// M = L Lᵀ accumulated so that M is bitwise symmetric.
InertiaFactor build_inertia(std::span<const double> raw, Index dof, double floor = kDefaultInertiaFloor);

/// Ṁ, N and C per frame, each T × D² (row-major D × D per row).
struct CoriolisTerms {
  RowMat inertia_rate;
  RowMat skew;
  RowMat coriolis;
};

/// N = N_up - N_upᵀ from packed raw entries; Ṁ(t) = M(t) - M(t-1) with
/// Ṁ(0) = 0; C = ½(Ṁ - N). Ṁ - 2C equals N exactly.
CoriolisTerms build_coriolis(const RowMat& inertia, const RowMat& raw_skew, Index dof);

/// Per-frame Lagrangian terms of one sequence. Square quantities are T × D²;
/// vectors are T × D.
struct DynamicTerms {
  Index dof = 0;
  RowMat lower;         ///< L
  RowMat inertia;       ///< M
  RowMat inertia_rate;  ///< Ṁ
  RowMat skew;          ///< N
  RowMat coriolis;      ///< C
  RowMat gravity;       ///< G
  RowMat friction;      ///< F
  RowMat tau;           ///< τ, empty until synthesize_tau

  Index frames() const { return inertia.rows(); }
  ConstSquareMap square(const RowMat& m, Index t) const { return {m.row(t).data(), dof, dof}; }
  ConstSquareMap M(Index t) const { return square(inertia, t); }
  ConstSquareMap C(Index t) const { return square(coriolis, t); }
};

/// Forward-pass record for backprop through the four estimators.
struct DynamicsTape {
  net::EstimatorTape inertia;
  net::EstimatorTape coriolis;
  net::EstimatorTape gravity;
  net::EstimatorTape friction;
  RowMat raw_inertia;

  bool empty() const { return inertia.empty(); }
};

/// Applies the four estimators over all frames (batched) and builds M, Ṁ,
/// N, C, G, F. τ is left empty. Records into `tape` when given.
DynamicTerms estimate_dynamic_terms(const ParameterBundle& bundle, const GeneralizedState& state,
                                    double floor = kDefaultInertiaFloor, DynamicsTape* tape = nullptr);

/// τ(t) = M(t) q̈(t) + C(t) q̇(t) + G(t) + F(t).
void synthesize_tau(DynamicTerms& terms, const GeneralizedState& state);

/// Loss gradients with respect to the terms of one sequence.
struct TermGradients {
  RowMat inertia;   ///< T × D²
  RowMat coriolis;  ///< T × D²
  RowMat gravity;   ///< T × D
  RowMat friction;  ///< T × D
  RowMat tau;       ///< T × D

  static TermGradients zeros(Index frames, Index dof);
};

/// Pushes grads.tau through τ = Mq̈ + Cq̇ + G + F into the other slots.
void backprop_tau(const DynamicTerms& terms, const GeneralizedState& state, TermGradients& grads);

/// Pushes term gradients through C = ½(Ṁ - N), Ṁ, M = L Lᵀ and the softplus
/// diagonal into the estimator gradient slots of `bundle`.
/// Throws TapeMissing if `tape` is empty.
void backprop_dynamic_terms(ParameterBundle& bundle, const DynamicsTape& tape, const DynamicTerms& terms,
                            const TermGradients& grads);

/// Row-wise concat(q, q̇).
RowMat state_features(const GeneralizedState& state);

}  // namespace lagdyn::dynamics

#include "lagdyn/dynamics.hpp"

#include <sstream>

namespace lagdyn::dynamics {

namespace {

void fill_lower(const double* raw, Index dof, double floor, double* lower) {
  Index k = 0;
  for (Index i = 0; i < dof; ++i) {
    for (Index j = 0; j < dof; ++j) {
      lower[i * dof + j] = 0.0;
    }
    for (Index j = 0; j <= i; ++j, ++k) {
      lower[i * dof + j] = (i == j) ? net::softplus(raw[k]) + floor : raw[k];
    }
  }
}

// M = L Lᵀ, each (i, j) accumulated once and mirrored.
void lower_gram(const double* lower, Index dof, double* m) {
  for (Index i = 0; i < dof; ++i) {
    for (Index j = 0; j <= i; ++j) {
      double s = 0.0;
      for (Index k = 0; k <= j; ++k) {
        s += lower[i * dof + k] * lower[j * dof + k];
      }
      m[i * dof + j] = s;
      m[j * dof + i] = s;
    }
  }
}

void check_state(const GeneralizedState& state, Index dof) {
  if (state.dof() != dof || state.qdot.cols() != dof || state.qddot.cols() != dof ||
      state.qdot.rows() != state.frames() || state.qddot.rows() != state.frames()) {
    std::ostringstream msg;
    msg << "state has " << state.dof() << " degrees of freedom, model expects " << dof;
    throw ShapeMismatch(msg.str());
  }
}

}  // namespace

InertiaFactor build_inertia(std::span<const double> raw, Index dof, double floor) {
  if (static_cast<Index>(raw.size()) != lower_packed_size(dof)) {
    throw ShapeMismatch("inertia raw vector must have D(D+1)/2 entries");
  }
  InertiaFactor f;
  f.lower.resize(dof, dof);
  f.inertia.resize(dof, dof);
  fill_lower(raw.data(), dof, floor, f.lower.data());
  lower_gram(f.lower.data(), dof, f.inertia.data());
  return f;
}

CoriolisTerms build_coriolis(const RowMat& inertia, const RowMat& raw_skew, Index dof) {
  const Index frames = inertia.rows();
  if (inertia.cols() != dof * dof || raw_skew.rows() != frames ||
      raw_skew.cols() != strict_upper_packed_size(dof)) {
    throw ShapeMismatch("coriolis inputs do not match the degrees of freedom");
  }
  CoriolisTerms out;
  out.inertia_rate = RowMat::Zero(frames, dof * dof);
  out.skew = RowMat::Zero(frames, dof * dof);
  out.coriolis.resize(frames, dof * dof);
  for (Index t = 0; t < frames; ++t) {
    if (t > 0) {
      out.inertia_rate.row(t) = inertia.row(t) - inertia.row(t - 1);
    }
    double* n = out.skew.row(t).data();
    Index k = 0;
    for (Index i = 0; i < dof; ++i) {
      for (Index j = i + 1; j < dof; ++j, ++k) {
        const double a = raw_skew(t, k);
        n[i * dof + j] = a;
        n[j * dof + i] = -a;
      }
    }
    out.coriolis.row(t) = 0.5 * (out.inertia_rate.row(t) - out.skew.row(t));
  }
  return out;
}

RowMat state_features(const GeneralizedState& state) {
  RowMat x(state.frames(), 2 * state.dof());
  x.leftCols(state.dof()) = state.q;
  x.rightCols(state.dof()) = state.qdot;
  return x;
}

DynamicTerms estimate_dynamic_terms(const ParameterBundle& bundle, const GeneralizedState& state,
                                    double floor, DynamicsTape* tape) {
  const Index dof = bundle.shape.dof;
  check_state(state, dof);
  const Index frames = state.frames();
  const RowMat features = state_features(state);

  RowMat raw_inertia;
  RowMat raw_skew;
  DynamicTerms terms;
  terms.dof = dof;
  if (tape != nullptr) {
    raw_inertia = bundle.inertia.forward(state.q, tape->inertia);
    raw_skew = bundle.coriolis.forward(features, tape->coriolis);
    terms.gravity = bundle.gravity.forward(state.q, tape->gravity);
    terms.friction = bundle.friction.forward(features, tape->friction);
  } else {
    raw_inertia = bundle.inertia.apply(state.q);
    raw_skew = bundle.coriolis.apply(features);
    terms.gravity = bundle.gravity.apply(state.q);
    terms.friction = bundle.friction.apply(features);
  }

  terms.lower.resize(frames, dof * dof);
  terms.inertia.resize(frames, dof * dof);
  for (Index t = 0; t < frames; ++t) {
    fill_lower(raw_inertia.row(t).data(), dof, floor, terms.lower.row(t).data());
    lower_gram(terms.lower.row(t).data(), dof, terms.inertia.row(t).data());
  }
  auto cor = build_coriolis(terms.inertia, raw_skew, dof);
  terms.inertia_rate = std::move(cor.inertia_rate);
  terms.skew = std::move(cor.skew);
  terms.coriolis = std::move(cor.coriolis);
  if (tape != nullptr) {
    tape->raw_inertia = std::move(raw_inertia);
  }
  return terms;
}

void synthesize_tau(DynamicTerms& terms, const GeneralizedState& state) {
  const Index dof = terms.dof;
  check_state(state, dof);
  if (state.frames() != terms.frames()) {
    throw ShapeMismatch("terms and state differ in frame count");
  }
  terms.tau.resize(terms.frames(), dof);
  for (Index t = 0; t < terms.frames(); ++t) {
    terms.tau.row(t) = (terms.M(t) * state.qddot.row(t).transpose() +
                        terms.C(t) * state.qdot.row(t).transpose())
                           .transpose() +
                       terms.gravity.row(t) + terms.friction.row(t);
  }
}

TermGradients TermGradients::zeros(Index frames, Index dof) {
  return {RowMat::Zero(frames, dof * dof), RowMat::Zero(frames, dof * dof), RowMat::Zero(frames, dof),
          RowMat::Zero(frames, dof), RowMat::Zero(frames, dof)};
}

void backprop_tau(const DynamicTerms& terms, const GeneralizedState& state, TermGradients& grads) {
  const Index dof = terms.dof;
  for (Index t = 0; t < terms.frames(); ++t) {
    const auto g = grads.tau.row(t).transpose();
    SquareMap dm(grads.inertia.row(t).data(), dof, dof);
    SquareMap dc(grads.coriolis.row(t).data(), dof, dof);
    dm.noalias() += g * state.qddot.row(t);
    dc.noalias() += g * state.qdot.row(t);
  }
  grads.gravity += grads.tau;
  grads.friction += grads.tau;
}

void backprop_dynamic_terms(ParameterBundle& bundle, const DynamicsTape& tape, const DynamicTerms& terms,
                            const TermGradients& grads) {
  if (tape.empty()) {
    throw TapeMissing("dynamics backward called without a recorded forward pass");
  }
  const Index dof = terms.dof;
  const Index frames = terms.frames();

  // C = ½(Ṁ - N): dṀ = ½ dC, dN = -½ dC. Ṁ(t) = M(t) - M(t-1) for t >= 1.
  RowMat d_inertia = grads.inertia;
  for (Index t = 1; t < frames; ++t) {
    d_inertia.row(t) += 0.5 * grads.coriolis.row(t);
    d_inertia.row(t - 1) -= 0.5 * grads.coriolis.row(t);
  }

  RowMat d_raw_skew(frames, strict_upper_packed_size(dof));
  RowMat d_raw_inertia(frames, lower_packed_size(dof));
  for (Index t = 0; t < frames; ++t) {
    const double* dc = grads.coriolis.row(t).data();
    Index k = 0;
    for (Index i = 0; i < dof; ++i) {
      for (Index j = i + 1; j < dof; ++j, ++k) {
        // N_ij = a, N_ji = -a and dN = -½ dC.
        d_raw_skew(t, k) = -0.5 * (dc[i * dof + j] - dc[j * dof + i]);
      }
    }

    // M = L Lᵀ: dL = (dM + dMᵀ) L, lower triangle only.
    ConstSquareMap dm(d_inertia.row(t).data(), dof, dof);
    ConstSquareMap lower(terms.lower.row(t).data(), dof, dof);
    const RowMat dl = (dm + dm.transpose()) * lower;
    k = 0;
    for (Index i = 0; i < dof; ++i) {
      for (Index j = 0; j <= i; ++j, ++k) {
        d_raw_inertia(t, k) =
            (i == j) ? dl(i, j) * net::softplus_grad(tape.raw_inertia(t, k)) : dl(i, j);
      }
    }
  }

  bundle.inertia.backward(tape.inertia, d_raw_inertia);
  bundle.coriolis.backward(tape.coriolis, d_raw_skew);
  bundle.gravity.backward(tape.gravity, grads.gravity);
  bundle.friction.backward(tape.friction, grads.friction);
}

}  // namespace lagdyn::dynamics

#pragma once

#include <Eigen/Core>

namespace lagdyn {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Row-major dynamic matrix. Per-frame quantities are stored one frame per
/// row so that a frame is a contiguous slice.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using SquareMap = Eigen::Map<RowMat>;
using ConstSquareMap = Eigen::Map<const RowMat>;

/// Per-frame q, q̇, q̈ over D degrees of freedom, each T × D.
///
/// q̇(t) = q(t) - q(t-1) and q̈(t) = q̇(t) - q̇(t-1), with Δt = 1 frame.
struct GeneralizedState {
  RowMat q;
  RowMat qdot;
  RowMat qddot;

  Index frames() const { return q.rows(); }
  Index dof() const { return q.cols(); }
};

/// Padding used for the first backward difference.
enum class BoundaryPadding {
  Zero,       ///< q(-1) = 0 and q̇(-1) = 0.
  Replicate,  ///< q(-1) = q(0), so q̇(0) = 0.
};

/// Backward finite differences over the rows of `q`.
GeneralizedState finite_differences(const RowMat& q, BoundaryPadding padding = BoundaryPadding::Zero);

}  // namespace lagdyn

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lagdyn/error.hpp"
#include "lagdyn/types.hpp"

namespace lagdyn::kinematics {

/// Norm below which a bone or frame axis counts as degenerate.
inline constexpr double kDegenerateTolerance = 1e-8;

/// Tree-structured skeleton (open kinematic chain).
///
/// The rotation set holds every joint of kinematic depth >= 2, in ascending
/// joint order; those are the joints with both a parent and a grandparent.
class SkeletonTopology {
 public:
  /// Indices into the joint list for (root, spine-mid, right-hip, left-hip).
  using FrameJoints = std::array<int, 4>;

  /// Validates the parent array and derives depths and the rotation set.
  /// Throws InvalidTopology.
  static SkeletonTopology build(std::vector<std::string> names, std::vector<int> parents,
                                FrameJoints frame_joints, int spatial_dim);

  int joint_count() const { return static_cast<int>(parents_.size()); }
  int spatial_dim() const { return spatial_dim_; }
  int root() const { return root_; }
  int parent(int joint) const { return parents_[static_cast<std::size_t>(joint)]; }
  int depth(int joint) const { return depths_[static_cast<std::size_t>(joint)]; }
  const FrameJoints& frame_joints() const { return frame_joints_; }
  const std::vector<int>& rotation_set() const { return rotation_set_; }
  const std::vector<std::string>& names() const { return names_; }

  /// Generalized coordinate count: 3 + 3|V'| in 3D, 1 + |V'| in 2D.
  int dof() const;

 private:
  std::vector<std::string> names_;
  std::vector<int> parents_;
  std::vector<int> depths_;
  std::vector<int> rotation_set_;
  FrameJoints frame_joints_{};
  int root_ = 0;
  int spatial_dim_ = 3;
};

/// T frames of V joint positions. Row t holds joint v at columns
/// [v*dim, (v+1)*dim).
struct PoseSequence {
  RowMat positions;
  int joints = 0;
  int dim = 3;

  Index frames() const { return positions.rows(); }
  Eigen::Map<const Eigen::VectorXd> joint(Index t, int v) const {
    return {positions.row(t).data() + static_cast<Index>(v) * dim, dim};
  }
};

/// Orthonormal body frame [x | y | z] from the four frame-joint positions.
/// Throws DegenerateFrame on collinear or zero-length spine/hip geometry.
Mat3 root_frame(const Vec3& root, const Vec3& spine_mid, const Vec3& right_hip,
                const Vec3& left_hip);

/// Axis-angle vector of the root frame. Throws DegenerateFrame.
Vec3 compute_root_orientation(const Vec3& root, const Vec3& spine_mid, const Vec3& right_hip,
                              const Vec3& left_hip);

/// Log map SO(3) -> axis-angle, θ ∈ [0, π].
Vec3 axis_angle_from_matrix(const Mat3& rotation);

/// Axis-angle that turns the direction of `parent_bone` onto `child_bone`.
/// Parallel or antiparallel bones yield the zero vector. Throws ZeroBone.
Vec3 bone_rotation(const Vec3& parent_bone, const Vec3& child_bone);

/// Signed planar angle from `parent_bone` to `child_bone`, in (-π, π].
/// Throws ZeroBone.
double signed_angle(const Eigen::Vector2d& parent_bone, const Eigen::Vector2d& child_bone);

/// Planar root angle: signed angle from world +y to the spine vector.
/// Throws DegenerateFrame.
double root_angle_2d(const Eigen::Vector2d& root, const Eigen::Vector2d& spine_mid);

/// Local rotations of one frame, concatenated in rotation-set order:
/// 3 values per joint in 3D, 1 in 2D.
Vec compute_local_rotations(const PoseSequence& pose, Index frame, const SkeletonTopology& topology);

struct StateOptions {
  BoundaryPadding padding = BoundaryPadding::Zero;
  /// When set, DegenerateFrame and ZeroBone propagate immediately instead of
  /// reusing the previous frame's coordinates.
  bool strict = false;
};

/// Generalized coordinates for every frame followed by backward differences.
GeneralizedState assemble_state(const PoseSequence& pose, const SkeletonTopology& topology,
                                const StateOptions& options = {});

/// Coordinates only (no differences); exposed for callers that pad differently.
RowMat generalized_coordinates(const PoseSequence& pose, const SkeletonTopology& topology,
                               bool strict = false);

}  // namespace lagdyn::kinematics

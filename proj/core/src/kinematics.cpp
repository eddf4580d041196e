#include "lagdyn/kinematics.hpp"
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lagdyn {

GeneralizedState finite_differences(const RowMat& q, BoundaryPadding padding) {
  GeneralizedState state;
  state.q = q;
  state.qdot.resizeLike(q);
  state.qddot.resizeLike(q);
  const Index frames = q.rows();
  for (Index t = 0; t < frames; ++t) {
    if (t == 0) {
      if (padding == BoundaryPadding::Zero) {
        state.qdot.row(0) = q.row(0);
      } else {
        state.qdot.row(0).setZero();
      }
      state.qddot.row(0) = state.qdot.row(0);
    } else {
      state.qdot.row(t) = q.row(t) - q.row(t - 1);
      state.qddot.row(t) = state.qdot.row(t) - state.qdot.row(t - 1);
    }
  }
  return state;
}

namespace kinematics {

namespace {

std::string joint_label(const std::vector<std::string>& names, int j) {
  if (j >= 0 && static_cast<std::size_t>(j) < names.size() && !names[static_cast<std::size_t>(j)].empty()) {
    return names[static_cast<std::size_t>(j)];
  }
  return "#" + std::to_string(j);
}

}  // namespace

SkeletonTopology SkeletonTopology::build(std::vector<std::string> names, std::vector<int> parents,
                                         FrameJoints frame_joints, int spatial_dim) {
  const int count = static_cast<int>(parents.size());
  if (count == 0) {
    throw InvalidTopology("topology has no joints");
  }
  if (!names.empty() && static_cast<int>(names.size()) != count) {
    throw InvalidTopology("joint names and parents differ in length");
  }
  if (spatial_dim != 2 && spatial_dim != 3) {
    throw InvalidTopology("spatial dimension must be 2 or 3");
  }

  int root = -1;
  for (int j = 0; j < count; ++j) {
    const int p = parents[static_cast<std::size_t>(j)];
    if (p < 0) {
      if (root >= 0) {
        throw InvalidTopology("more than one root joint: " + joint_label(names, root) + ", " +
                              joint_label(names, j));
      }
      root = j;
    } else if (p >= count || p == j) {
      throw InvalidTopology("joint " + joint_label(names, j) + " has invalid parent " +
                            std::to_string(p));
    }
  }
  if (root < 0) {
    throw InvalidTopology("no root joint (parent -1)");
  }

  // Depth by walking to the root; a walk longer than the joint count is a cycle.
  std::vector<int> depths(static_cast<std::size_t>(count), 0);
  for (int j = 0; j < count; ++j) {
    int d = 0;
    int cur = j;
    while (parents[static_cast<std::size_t>(cur)] >= 0) {
      cur = parents[static_cast<std::size_t>(cur)];
      if (++d > count) {
        throw InvalidTopology("parent array contains a cycle through joint " + joint_label(names, j));
      }
    }
    depths[static_cast<std::size_t>(j)] = d;
  }

  for (int f : frame_joints) {
    if (f < 0 || f >= count) {
      throw InvalidTopology("frame joint index out of range: " + std::to_string(f));
    }
  }
  if (frame_joints[0] != root) {
    throw InvalidTopology("first frame joint must be the root");
  }

  SkeletonTopology topo;
  topo.names_ = std::move(names);
  topo.parents_ = std::move(parents);
  topo.depths_ = std::move(depths);
  topo.frame_joints_ = frame_joints;
  topo.root_ = root;
  topo.spatial_dim_ = spatial_dim;
  for (int j = 0; j < count; ++j) {
    if (topo.depths_[static_cast<std::size_t>(j)] >= 2) {
      topo.rotation_set_.push_back(j);
    }
  }
  return topo;
}

int SkeletonTopology::dof() const {
  const int rotations = static_cast<int>(rotation_set_.size());
  return spatial_dim_ == 3 ? 3 + 3 * rotations : 1 + rotations;
}

Mat3 root_frame(const Vec3& root, const Vec3& spine_mid, const Vec3& right_hip,
                const Vec3& left_hip) {
  const Vec3 v_y = spine_mid - root;
  const Vec3 v_x_raw = right_hip - left_hip;
  const double ny = v_y.norm();
  if (!(ny >= kDegenerateTolerance)) {
    throw DegenerateFrame("spine vector has near-zero length");
  }
  const Vec3 y_axis = v_y / ny;
  const Vec3 z_raw = v_x_raw.cross(y_axis);
  const double nz = z_raw.norm();
  if (!(nz >= kDegenerateTolerance)) {
    throw DegenerateFrame("hip axis is collinear with the spine");
  }
  const Vec3 z_axis = z_raw / nz;
  const Vec3 x_axis = y_axis.cross(z_axis).normalized();
  Mat3 r;
  r.col(0) = x_axis;
  r.col(1) = y_axis;
  r.col(2) = z_axis;
  return r;
}

Vec3 compute_root_orientation(const Vec3& root, const Vec3& spine_mid, const Vec3& right_hip,
                              const Vec3& left_hip) {
  return axis_angle_from_matrix(root_frame(root, spine_mid, right_hip, left_hip));
}

Vec3 axis_angle_from_matrix(const Mat3& r) {
  const double cos_theta = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  // 2 sin(θ) a
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));

  if (theta < 1e-6) {
    // First order: R ≈ I + [θa]x.
    return 0.5 * w;
  }
  if (std::numbers::pi - theta > 1e-3) {
    return (theta / (2.0 * std::sin(theta))) * w;
  }

  // Near π the antisymmetric part vanishes; recover the axis from the
  // symmetric part, (R + Rᵀ)/2 - cos(θ) I = (1 - cos θ) a aᵀ.
  const Mat3 s = (0.5 * (r + r.transpose()) - cos_theta * Mat3::Identity()) / (1.0 - cos_theta);
  Index k = 0;
  s.diagonal().maxCoeff(&k);
  Vec3 axis = s.col(k) / std::sqrt(std::max(s(k, k), 0.0));
  axis.normalize();
  if (axis.dot(w) < 0.0) {
    axis = -axis;
  }
  return theta * axis;
}

Vec3 bone_rotation(const Vec3& parent_bone, const Vec3& child_bone) {
  const double np = parent_bone.norm();
  const double nc = child_bone.norm();
  if (!(np >= kDegenerateTolerance) || !(nc >= kDegenerateTolerance)) {
    throw ZeroBone("bone vector has near-zero length");
  }
  const Vec3 u = parent_bone / np;
  const Vec3 v = child_bone / nc;
  const double theta = std::acos(std::clamp(u.dot(v), -1.0, 1.0));
  const Vec3 c = u.cross(v);
  const double nc_axis = c.norm();
  if (nc_axis <= 1e-8) {
    return Vec3::Zero();
  }
  return theta * (c / nc_axis);
}

double signed_angle(const Eigen::Vector2d& parent_bone, const Eigen::Vector2d& child_bone) {
  if (!(parent_bone.norm() >= kDegenerateTolerance) || !(child_bone.norm() >= kDegenerateTolerance)) {
    throw ZeroBone("bone vector has near-zero length");
  }
  const double cross = parent_bone.x() * child_bone.y() - parent_bone.y() * child_bone.x();
  const double dot = parent_bone.dot(child_bone);
  const double angle = std::atan2(cross, dot);
  // atan2 may return -π for a signed-zero cross term; the range is (-π, π].
  return angle <= -std::numbers::pi ? std::numbers::pi : angle;
}

double root_angle_2d(const Eigen::Vector2d& root, const Eigen::Vector2d& spine_mid) {
  const Eigen::Vector2d spine = spine_mid - root;
  if (!(spine.norm() >= kDegenerateTolerance)) {
    throw DegenerateFrame("spine vector has near-zero length");
  }
  return signed_angle(Eigen::Vector2d(0.0, 1.0), spine);
}

namespace {

void check_pose(const PoseSequence& pose, const SkeletonTopology& topology) {
  if (pose.joints != topology.joint_count() || pose.dim != topology.spatial_dim() ||
      pose.positions.cols() != static_cast<Index>(pose.joints) * pose.dim) {
    std::ostringstream msg;
    msg << "pose has " << pose.joints << " joints of dim " << pose.dim << ", topology expects "
        << topology.joint_count() << " of dim " << topology.spatial_dim();
    throw ShapeMismatch(msg.str());
  }
}

Vec3 joint3(const PoseSequence& pose, Index t, int v) { return pose.joint(t, v).head<3>(); }
Eigen::Vector2d joint2(const PoseSequence& pose, Index t, int v) { return pose.joint(t, v).head<2>(); }

}  // namespace

Vec compute_local_rotations(const PoseSequence& pose, Index frame, const SkeletonTopology& topology) {
  check_pose(pose, topology);
  const auto& set = topology.rotation_set();
  const int width = topology.spatial_dim() == 3 ? 3 : 1;
  Vec out(static_cast<Index>(set.size()) * width);
  for (std::size_t k = 0; k < set.size(); ++k) {
    const int j = set[k];
    const int p = topology.parent(j);
    const int gp = topology.parent(p);
    if (width == 3) {
      out.segment<3>(static_cast<Index>(k) * 3) =
          bone_rotation(joint3(pose, frame, p) - joint3(pose, frame, gp),
                        joint3(pose, frame, j) - joint3(pose, frame, p));
    } else {
      out(static_cast<Index>(k)) = signed_angle(joint2(pose, frame, p) - joint2(pose, frame, gp),
                                                joint2(pose, frame, j) - joint2(pose, frame, p));
    }
  }
  return out;
}

RowMat generalized_coordinates(const PoseSequence& pose, const SkeletonTopology& topology, bool strict) {
  check_pose(pose, topology);
  const Index frames = pose.frames();
  const int dim = topology.spatial_dim();
  const int root_width = dim == 3 ? 3 : 1;
  const int rot_width = root_width;
  const auto& fj = topology.frame_joints();
  const auto& set = topology.rotation_set();

  RowMat q(frames, topology.dof());
  for (Index t = 0; t < frames; ++t) {
    // Root orientation; on a degenerate frame reuse the previous one.
    try {
      if (dim == 3) {
        q.row(t).head<3>() = compute_root_orientation(joint3(pose, t, fj[0]), joint3(pose, t, fj[1]),
                                                      joint3(pose, t, fj[2]), joint3(pose, t, fj[3]))
                                 .transpose();
      } else {
        q(t, 0) = root_angle_2d(joint2(pose, t, fj[0]), joint2(pose, t, fj[1]));
      }
    } catch (const DegenerateFrame& e) {
      if (strict) {
        throw DegenerateFrame("frame " + std::to_string(t) + ": " + e.what());
      }
      if (t == 0) {
        q.row(0).head(root_width).setZero();
      } else {
        q.row(t).head(root_width) = q.row(t - 1).head(root_width);
      }
    }

    for (std::size_t k = 0; k < set.size(); ++k) {
      const int j = set[k];
      const int p = topology.parent(j);
      const int gp = topology.parent(p);
      const Index col = root_width + static_cast<Index>(k) * rot_width;
      try {
        if (dim == 3) {
          q.row(t).segment<3>(col) = bone_rotation(joint3(pose, t, p) - joint3(pose, t, gp),
                                                   joint3(pose, t, j) - joint3(pose, t, p))
                                         .transpose();
        } else {
          q(t, col) = signed_angle(joint2(pose, t, p) - joint2(pose, t, gp),
                                   joint2(pose, t, j) - joint2(pose, t, p));
        }
      } catch (const ZeroBone& e) {
        // No earlier frame to fall back on at t = 0.
        if (strict || t == 0) {
          throw ZeroBone("frame " + std::to_string(t) + ", joint " + std::to_string(j) + ": " + e.what());
        }
        q.row(t).segment(col, rot_width) = q.row(t - 1).segment(col, rot_width);
      }
    }
  }
  return q;
}

GeneralizedState assemble_state(const PoseSequence& pose, const SkeletonTopology& topology,
                                const StateOptions& options) {
  if (pose.frames() < 1) {
    throw ShapeMismatch("pose sequence has no frames");
  }
  return finite_differences(generalized_coordinates(pose, topology, options.strict), options.padding);
}

}  // namespace kinematics
}  // namespace lagdyn

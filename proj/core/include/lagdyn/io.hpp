#pragma once

#include <filesystem>
#include <vector>

#include "lagdyn/kinematics.hpp"
#include "lagdyn/oracle.hpp"

namespace lagdyn::io {

/// {"joints": [names], "parents": [ints, -1 for root], "frame_joints": [4
/// names], "dim": 2 | 3}. Throws DataUnreadable or InvalidTopology.
kinematics::SkeletonTopology read_topology(const std::filesystem::path& path);
void write_topology(const kinematics::SkeletonTopology& topology, const std::filesystem::path& path);

/// JSON Lines, one frame per line: {"t": int, "xyz": [[x, y, z], ...]}.
/// Frames must appear with strictly increasing t and V entries of dim each.
kinematics::PoseSequence read_poses(const std::filesystem::path& path, int joints, int dim);
void write_poses(const kinematics::PoseSequence& pose, const std::filesystem::path& path);

/// CSV "frame,label" with frames 0..T-1 in order; a header line is optional.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<int>& labels, const std::filesystem::path& path);

/// JSON Lines, one sequence per line: {"chain": {...}, "dt", "q": T×n,
/// "tau": T×n, "labels": T, "boundaries": [...]}.
std::vector<oracle::LabeledSequence> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::vector<oracle::LabeledSequence>& data, const std::filesystem::path& path);

}  // namespace lagdyn::io

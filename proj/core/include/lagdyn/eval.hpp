#pragma once

#include <span>
#include <vector>

#include "lagdyn/types.hpp"

namespace lagdyn::eval {

/// Maximal run of one class, [start, end).
struct Segment {
  int label = 0;
  Index start = 0;
  Index end = 0;

  Index length() const { return end - start; }
};

std::vector<Segment> segments_from_labels(std::span<const int> labels);

/// Percentage of frames with equal labels. Throws LengthMismatch.
double frame_accuracy(std::span<const int> pred, std::span<const int> gt);

/// Edit distance between two class strings (unit insert/delete/substitute).
Index levenshtein(std::span<const int> a, std::span<const int> b);

/// 100 · (1 - lev / max(#segments)) over segment class strings.
/// Throws EmptySequence if either input is empty.
double segmental_edit(std::span<const int> pred, std::span<const int> gt);

/// |a ∩ b| / |a ∪ b| of two frame intervals.
double interval_iou(const Segment& a, const Segment& b);

/// Segment F1 at IoU threshold k, in percent. Candidate (pred, gt) pairs of
/// the same class with IoU > k are matched one-to-one in decreasing IoU,
/// ties by earlier gt start then earlier pred start.
double f1_at_k(const std::vector<Segment>& pred, const std::vector<Segment>& gt, double k);
double f1_at_k(std::span<const int> pred, std::span<const int> gt, double k);

struct SegmentationScores {
  double accuracy = 0.0;
  double edit = 0.0;
  double f1_10 = 0.0;
  double f1_25 = 0.0;
  double f1_50 = 0.0;
};

SegmentationScores score_segmentation(std::span<const int> pred, std::span<const int> gt);

/// Labels that switch to a new class at every boundary, for scoring
/// proposed boundaries against ground truth on segment structure alone.
std::vector<int> labels_from_boundaries(std::span<const Index> boundaries, Index frames);

/// Fraction of true boundaries with a proposal within ±tolerance frames,
/// each proposal matched at most once (nearest first).
double boundary_recall(std::span<const Index> proposed, std::span<const Index> truth, Index tolerance);

}  // namespace lagdyn::eval

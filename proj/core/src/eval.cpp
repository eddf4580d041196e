#include "lagdyn/eval.hpp"

#include <algorithm>
#include <cstdlib>
#include <tuple>

#include "lagdyn/error.hpp"

namespace lagdyn::eval {

std::vector<Segment> segments_from_labels(std::span<const int> labels) {
  std::vector<Segment> out;
  const auto n = static_cast<Index>(labels.size());
  for (Index t = 0; t < n; ++t) {
    const int c = labels[static_cast<std::size_t>(t)];
    if (out.empty() || out.back().label != c) {
      out.push_back({c, t, t + 1});
    } else {
      out.back().end = t + 1;
    }
  }
  return out;
}

double frame_accuracy(std::span<const int> pred, std::span<const int> gt) {
  if (pred.size() != gt.size()) {
    throw LengthMismatch("prediction and ground truth differ in length");
  }
  if (gt.empty()) {
    throw EmptySequence("accuracy of an empty sequence");
  }
  std::size_t hits = 0;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    hits += pred[t] == gt[t] ? 1 : 0;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(gt.size());
}

Index levenshtein(std::span<const int> a, std::span<const int> b) {
  std::vector<Index> prev(b.size() + 1);
  std::vector<Index> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) {
    prev[j] = static_cast<Index>(j);
  }
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<Index>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const Index sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double segmental_edit(std::span<const int> pred, std::span<const int> gt) {
  if (pred.empty() || gt.empty()) {
    throw EmptySequence("segmental edit needs nonempty label sequences");
  }
  std::vector<int> ps;
  std::vector<int> gs;
  for (const auto& s : segments_from_labels(pred)) {
    ps.push_back(s.label);
  }
  for (const auto& s : segments_from_labels(gt)) {
    gs.push_back(s.label);
  }
  const auto lev = static_cast<double>(levenshtein(ps, gs));
  return 100.0 * (1.0 - lev / static_cast<double>(std::max(ps.size(), gs.size())));
}

double interval_iou(const Segment& a, const Segment& b) {
  const Index inter = std::max<Index>(0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const Index uni = std::max(a.end, b.end) - std::min(a.start, b.start);
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double f1_at_k(const std::vector<Segment>& pred, const std::vector<Segment>& gt, double k) {
  struct Candidate {
    double iou;
    std::size_t p;
    std::size_t g;
  };
  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (pred[p].label != gt[g].label) {
        continue;
      }
      const double iou = interval_iou(pred[p], gt[g]);
      if (iou > k) {
        candidates.push_back({iou, p, g});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    return std::make_tuple(-a.iou, gt[a.g].start, pred[a.p].start) <
           std::make_tuple(-b.iou, gt[b.g].start, pred[b.p].start);
  });
  std::vector<bool> pred_used(pred.size(), false);
  std::vector<bool> gt_used(gt.size(), false);
  double tp = 0.0;
  for (const auto& c : candidates) {
    if (!pred_used[c.p] && !gt_used[c.g]) {
      pred_used[c.p] = true;
      gt_used[c.g] = true;
      tp += 1.0;
    }
  }
  const double fp = static_cast<double>(pred.size()) - tp;
  const double fn = static_cast<double>(gt.size()) - tp;
  if (tp == 0.0) {
    return 0.0;
  }
  const double precision = tp / (tp + fp);
  const double recall = tp / (tp + fn);
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double f1_at_k(std::span<const int> pred, std::span<const int> gt, double k) {
  return f1_at_k(segments_from_labels(pred), segments_from_labels(gt), k);
}

SegmentationScores score_segmentation(std::span<const int> pred, std::span<const int> gt) {
  SegmentationScores s;
  s.accuracy = frame_accuracy(pred, gt);
  s.edit = segmental_edit(pred, gt);
  const auto ps = segments_from_labels(pred);
  const auto gs = segments_from_labels(gt);
  s.f1_10 = f1_at_k(ps, gs, 0.10);
  s.f1_25 = f1_at_k(ps, gs, 0.25);
  s.f1_50 = f1_at_k(ps, gs, 0.50);
  return s;
}

std::vector<int> labels_from_boundaries(std::span<const Index> boundaries, Index frames) {
  std::vector<int> labels(static_cast<std::size_t>(std::max<Index>(frames, 0)), 0);
  int current = 0;
  std::size_t b = 0;
  for (Index t = 0; t < frames; ++t) {
    while (b < boundaries.size() && boundaries[b] <= t) {
      if (boundaries[b] == t && t > 0) {
        ++current;
      }
      ++b;
    }
    labels[static_cast<std::size_t>(t)] = current;
  }
  return labels;
}

double boundary_recall(std::span<const Index> proposed, std::span<const Index> truth, Index tolerance) {
  if (truth.empty()) {
    return 1.0;
  }
  struct Pair {
    Index distance;
    std::size_t p;
    std::size_t g;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < proposed.size(); ++p) {
    for (std::size_t g = 0; g < truth.size(); ++g) {
      const Index d = std::abs(proposed[p] - truth[g]);
      if (d <= tolerance) {
        pairs.push_back({d, p, g});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.distance, a.g, a.p) < std::tie(b.distance, b.g, b.p);
  });
  std::vector<bool> p_used(proposed.size(), false);
  std::vector<bool> g_used(truth.size(), false);
  std::size_t hits = 0;
  for (const auto& pr : pairs) {
    if (!p_used[pr.p] && !g_used[pr.g]) {
      p_used[pr.p] = true;
      g_used[pr.g] = true;
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace lagdyn::eval

#pragma once

#include <string>
#include <vector>

#include "arctext/detection.hpp"

namespace arctext {

struct GroundTruthSet {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<Polygon> instances;
  /// Don't-care flags, parallel to instances.
  std::vector<bool> ignore;

  void validate() const;
  bool operator==(const GroundTruthSet&) const = default;
};

struct Match {
  std::size_t gt = 0;
  std::size_t det = 0;
  double iou = 0.0;

  bool operator==(const Match&) const = default;
};

/// Result of matching one image.
struct ImageMatching {
  std::string image_id;
  /// Matches against cared-for ground truth (the true positives).
  std::vector<Match> matches;
  /// Detections excluded from the count because they cover a don't-care
  /// region.
  std::vector<std::size_t> ignored_detections;
  std::size_t gt_count = 0;   // cared-for ground truth
  std::size_t det_count = 0;  // detections minus ignored ones
};

struct ImageReport {
  std::string image_id;
  std::size_t true_positives = 0;
  std::size_t gt_count = 0;
  std::size_t det_count = 0;
  double recall = 0.0;
  double precision = 0.0;
  double f_measure = 0.0;
};

struct EvalReport {
  double recall = 0.0;
  double precision = 0.0;
  double f_measure = 0.0;
  std::size_t true_positives = 0;
  std::size_t gt_count = 0;
  std::size_t det_count = 0;
  /// Set when the corresponding denominator was zero and the metric was
  /// reported as 0.
  bool recall_undefined = false;
  bool precision_undefined = false;
  std::vector<std::pair<std::string, Match>> matched_pairs;
  std::vector<ImageReport> per_image;
};

/// IoU matrix [gt][det] between ground-truth polygons and detection outlines.
std::vector<std::vector<double>> iou_matrix(const GroundTruthSet& gt,
                                            const DetectionSet& det);

/// Greedy one-to-one matching on pairs with IoU >= threshold, taken in
/// descending IoU order (ties: lower gt index, then lower det index).
/// Detections paired with a don't-care region, or overlapping one at the
/// threshold, leave both counts.
ImageMatching match_detections(const GroundTruthSet& gt, const DetectionSet& det,
                               double iou_threshold = 0.5);

/// Recall, precision and F-measure from counts. Zero denominators give 0
/// and set the matching flag.
EvalReport compute_metrics(std::size_t true_positives, std::size_t gt_count,
                           std::size_t det_count);

/// Micro-averaged report over images.
EvalReport evaluate(const std::vector<ImageMatching>& images);

}  // namespace arctext

#pragma once

#include <span>
#include <vector>

#include "arctext/detection.hpp"

namespace arctext {

struct FusionConfig {
  double iou_threshold = 0.8;
  double decay = 0.5;
  IouMode iou_mode = IouMode::kMask;

  void validate() const;
};

/// Pixelwise AND of two or more equally sized masks.
BitMask overlap_mask(std::span<const BitMask> masks);

/// Coordinate-wise mean of the boxes.
AxisBox soft_box(std::span<const AxisBox> boxes);

enum class MatchKind { kTriple, kPairB, kPairC, kDropped };

struct FusionOutcome {
  std::vector<PseudoLabel> labels;
  /// One entry per anchor detection, in processing order.
  std::vector<MatchKind> kinds;
  std::size_t triples = 0;
  std::size_t pairs_b = 0;
  std::size_t pairs_c = 0;
  std::size_t dropped = 0;
};

/// Three-model ensemble fusion. Anchors from `a` are visited by descending
/// score (ties by index). Each anchor takes the unused detection of `b` and
/// of `c` with the highest IoU above the threshold (ties: higher score, then
/// lower index). Both found: overlap of three masks, mean of three boxes,
/// weight s_a * s_b * s_c. One found: the pair, weight s_a * s_x * decay.
/// Neither: the anchor is dropped. Matched detections are consumed.
FusionOutcome fuse_detections(std::span<const ScoredDetection> a,
                              std::span<const ScoredDetection> b,
                              std::span<const ScoredDetection> c, const FusionConfig& config);

std::vector<PseudoLabel> generate_pseudo_labels(std::span<const ScoredDetection> a,
                                                std::span<const ScoredDetection> b,
                                                std::span<const ScoredDetection> c,
                                                const FusionConfig& config);

}  // namespace arctext

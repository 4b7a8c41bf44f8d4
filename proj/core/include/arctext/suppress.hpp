#pragma once

#include <span>
#include <vector>

#include "arctext/detection.hpp"

namespace arctext {

enum class SuppressMode { kHard, kSoftLinear, kSoftGaussian };

struct SuppressConfig {
  SuppressMode mode = SuppressMode::kSoftLinear;
  double iou_threshold = 0.5;
  double sigma = 0.5;
  double score_floor = 0.001;
  IouMode iou_mode = IouMode::kMask;

  void validate() const;
};

/// Greedy NMS: keep the best remaining detection, discard the rest with
/// IoU above the threshold. Ties in score go to the lower input index.
std::vector<ScoredDetection> nms(std::span<const ScoredDetection> dets,
                                 const SuppressConfig& config);

/// Soft-NMS. After each selection the remaining scores decay by (1 - iou)
/// when iou exceeds the threshold (linear) or by exp(-iou^2 / sigma)
/// (Gaussian); detections falling below the score floor are dropped.
/// Output is sorted by final score.
std::vector<ScoredDetection> soft_nms(std::span<const ScoredDetection> dets,
                                      const SuppressConfig& config);

/// Dispatches on config.mode.
std::vector<ScoredDetection> suppress(std::span<const ScoredDetection> dets,
                                      const SuppressConfig& config);

/// Maps a set into original-image coordinates: boxes and outlines divided
/// by the scale factor, masks resampled nearest-neighbour onto a
/// round(width / scale) x round(height / scale) canvas.
DetectionSet rescale_to_original(const DetectionSet& set);

/// Concatenates sets of one image (already in original coordinates) and
/// suppresses the union.
DetectionSet multi_scale_aggregate(std::span<const DetectionSet> sets,
                                   const SuppressConfig& config);

/// Concatenation of several models' sets followed by Soft-NMS.
DetectionSet model_ensemble(std::span<const DetectionSet> sets, const SuppressConfig& config);

}  // namespace arctext

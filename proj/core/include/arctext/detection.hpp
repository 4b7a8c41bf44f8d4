#pragma once

#include <optional>
#include <string>
#include <vector>

#include "arctext/geometry.hpp"

namespace arctext {

enum class IouMode { kMask, kBox };

/// One detected text instance: mask, enclosing box and confidence. The
/// outline is the source polygon when the detection came from one.
struct ScoredDetection {
  BitMask mask;
  AxisBox box;
  double score = 0.0;
  std::optional<Polygon> outline;

  /// Score in [0, 1]; box valid; box covers the mask foreground within one
  /// pixel.
  void validate() const;

  bool operator==(const ScoredDetection&) const = default;
};

/// Fused training target: mask, box and loss weight.
struct PseudoLabel {
  BitMask mask;
  AxisBox box;
  double weight = 0.0;

  bool operator==(const PseudoLabel&) const = default;
};

/// Detections of one source (model or test scale) on one image. Coordinates
/// are in a frame of width x height pixels that is scale_factor times the
/// original image.
struct DetectionSet {
  std::string image_id;
  std::string source_tag;
  int width = 0;
  int height = 0;
  double scale_factor = 1.0;
  std::vector<ScoredDetection> detections;

  bool operator==(const DetectionSet&) const = default;
};

struct LabelSet {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<PseudoLabel> labels;

  bool operator==(const LabelSet&) const = default;
};

double detection_iou(const ScoredDetection& a, const ScoredDetection& b, IouMode mode);

/// Builds a detection from a polygon: rasterized mask, polygon bounding box.
ScoredDetection detection_from_polygon(const Polygon& polygon, double score, int width,
                                       int height);

/// Polygon used for polygon IoU: the outline when present, otherwise the
/// largest outer contour of the mask.
std::optional<Polygon> detection_outline(const ScoredDetection& det);

}  // namespace arctext

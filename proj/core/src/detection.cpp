#include "arctext/detection.hpp"

#include <cmath>

namespace arctext {

void ScoredDetection::validate() const {
  require(std::isfinite(score) && score >= 0.0 && score <= 1.0, ErrorCode::kInvalidArgument,
          "detection score must lie in [0, 1]");
  box.validate();
  if (const auto fg = mask.bounds()) {
    require(box.xmin <= fg->xmin + 1.0 && box.ymin <= fg->ymin + 1.0 &&
                box.xmax >= fg->xmax - 1.0 && box.ymax >= fg->ymax - 1.0,
            ErrorCode::kInvalidArgument, "detection box does not enclose its mask");
  }
}

double detection_iou(const ScoredDetection& a, const ScoredDetection& b, IouMode mode) {
  return mode == IouMode::kMask ? iou_mask(a.mask, b.mask) : iou_box(a.box, b.box);
}

ScoredDetection detection_from_polygon(const Polygon& polygon, double score, int width,
                                       int height) {
  return {polygon_to_mask(polygon, width, height), bounding_box(polygon), score, polygon};
}

std::optional<Polygon> detection_outline(const ScoredDetection& det) {
  if (det.outline) return det.outline;
  std::optional<Polygon> best;
  for (auto& p : mask_to_polygons(det.mask))
    if (!best || p.area() > best->area()) best = std::move(p);
  return best;
}

}  // namespace arctext

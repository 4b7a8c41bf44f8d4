#include "arctext/suppress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace arctext {

void SuppressConfig::validate() const {
  require(iou_threshold > 0.0 && iou_threshold < 1.0, ErrorCode::kInvalidArgument,
          "suppression IoU threshold must lie in (0, 1)");
  require(sigma > 0.0, ErrorCode::kInvalidArgument, "Gaussian sigma must be positive");
  require(score_floor >= 0.0, ErrorCode::kInvalidArgument, "score floor must be non-negative");
}

namespace {

std::vector<std::size_t> by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return scores[l] > scores[r]; });
  return order;
}

}  // namespace

std::vector<ScoredDetection> nms(std::span<const ScoredDetection> dets,
                                 const SuppressConfig& config) {
  config.validate();
  std::vector<double> scores;
  for (const auto& d : dets) scores.push_back(d.score);
  const auto order = by_score(scores);
  std::vector<bool> removed(dets.size());
  std::vector<ScoredDetection> kept;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (removed[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (!removed[j] && detection_iou(dets[i], dets[j], config.iou_mode) > config.iou_threshold)
        removed[j] = true;
    }
  }
  return kept;
}

std::vector<ScoredDetection> soft_nms(std::span<const ScoredDetection> dets,
                                      const SuppressConfig& config) {
  config.validate();
  std::vector<double> scores;
  for (const auto& d : dets) scores.push_back(d.score);
  std::vector<bool> active(dets.size(), true);
  std::vector<std::size_t> picked;
  for (std::size_t round = 0; round < dets.size(); ++round) {
    std::size_t best = dets.size();
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (active[i] && (best == dets.size() || scores[i] > scores[best])) best = i;
    if (best == dets.size()) break;
    active[best] = false;
    picked.push_back(best);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (!active[i]) continue;
      const double iou = detection_iou(dets[best], dets[i], config.iou_mode);
      if (config.mode == SuppressMode::kSoftGaussian) {
        scores[i] *= std::exp(-(iou * iou) / config.sigma);
      } else if (iou > config.iou_threshold) {
        scores[i] *= 1.0 - iou;
      }
      if (scores[i] < config.score_floor) active[i] = false;
    }
  }
  std::vector<double> final_scores;
  for (std::size_t i : picked) final_scores.push_back(scores[i]);
  std::vector<ScoredDetection> out;
  for (std::size_t r : by_score(final_scores)) {
    ScoredDetection d = dets[picked[r]];
    d.score = final_scores[r];
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<ScoredDetection> suppress(std::span<const ScoredDetection> dets,
                                      const SuppressConfig& config) {
  return config.mode == SuppressMode::kHard ? nms(dets, config) : soft_nms(dets, config);
}

DetectionSet rescale_to_original(const DetectionSet& set) {
  require(set.scale_factor > 0.0 && std::isfinite(set.scale_factor),
          ErrorCode::kInvalidArgument, "scale factor must be positive");
  if (set.scale_factor == 1.0) return set;
  const double s = set.scale_factor;
  DetectionSet out = set;
  out.scale_factor = 1.0;
  out.width = std::max(1, static_cast<int>(std::lround(set.width / s)));
  out.height = std::max(1, static_cast<int>(std::lround(set.height / s)));
  for (auto& d : out.detections) {
    BitMask mask(out.width, out.height);
    if (d.mask.width() > 0 && d.mask.height() > 0) {
      for (int y = 0; y < out.height; ++y) {
        const int sy = std::min(d.mask.height() - 1, static_cast<int>((y + 0.5) * s));
        for (int x = 0; x < out.width; ++x) {
          const int sx = std::min(d.mask.width() - 1, static_cast<int>((x + 0.5) * s));
          if (d.mask.get(sx, sy)) mask.set(x, y);
        }
      }
    }
    d.mask = std::move(mask);
    d.box = {d.box.xmin / s, d.box.ymin / s, d.box.xmax / s, d.box.ymax / s};
    if (d.outline) d.outline = d.outline->scaled(1.0 / s);
  }
  return out;
}

namespace {

DetectionSet concatenate(std::span<const DetectionSet> sets, const std::string& tag) {
  require(!sets.empty(), ErrorCode::kInvalidArgument, "no detection sets to aggregate");
  DetectionSet out;
  out.image_id = sets[0].image_id;
  out.source_tag = tag;
  out.width = sets[0].width;
  out.height = sets[0].height;
  for (const auto& s : sets) {
    require(s.image_id == out.image_id, ErrorCode::kIdMismatch,
            "image id '" + s.image_id + "' does not match '" + out.image_id + "'");
    require(s.scale_factor == 1.0, ErrorCode::kInvalidArgument,
            "detection set '" + s.source_tag + "' is not in original image coordinates");
    require(s.width == out.width && s.height == out.height, ErrorCode::kShapeMismatch,
            "detection sets of image '" + out.image_id + "' disagree on the image size");
    out.detections.insert(out.detections.end(), s.detections.begin(), s.detections.end());
  }
  return out;
}

}  // namespace

DetectionSet multi_scale_aggregate(std::span<const DetectionSet> sets,
                                   const SuppressConfig& config) {
  DetectionSet out = concatenate(sets, "multi-scale");
  out.detections = suppress(out.detections, config);
  return out;
}

DetectionSet model_ensemble(std::span<const DetectionSet> sets, const SuppressConfig& config) {
  require(config.mode != SuppressMode::kHard, ErrorCode::kInvalidArgument,
          "model ensemble uses Soft-NMS");
  DetectionSet out = concatenate(sets, "ensemble");
  out.detections = soft_nms(out.detections, config);
  return out;
}

}  // namespace arctext

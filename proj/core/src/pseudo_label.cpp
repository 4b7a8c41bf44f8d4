#include "arctext/pseudo_label.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <numeric>

namespace arctext {

void FusionConfig::validate() const {
  require(iou_threshold > 0.0 && iou_threshold < 1.0, ErrorCode::kInvalidArgument,
          "fusion IoU threshold must lie in (0, 1)");
  require(decay > 0.0 && decay <= 1.0, ErrorCode::kInvalidArgument,
          "fusion decay must lie in (0, 1]");
}

BitMask overlap_mask(std::span<const BitMask> masks) {
  require(!masks.empty(), ErrorCode::kInvalidArgument, "overlap_mask of no masks");
  BitMask out = masks[0];
  for (std::size_t i = 1; i < masks.size(); ++i) {
    require(masks[i].width() == out.width() && masks[i].height() == out.height(),
            ErrorCode::kShapeMismatch, "overlap_mask: mask dimensions differ");
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        if (!masks[i].get(x, y)) out.set(x, y, false);
  }
  return out;
}

AxisBox soft_box(std::span<const AxisBox> boxes) {
  require(!boxes.empty(), ErrorCode::kInvalidArgument, "soft_box of no boxes");
  AxisBox sum{0.0, 0.0, 0.0, 0.0};
  for (const auto& b : boxes) {
    sum.xmin += b.xmin;
    sum.ymin += b.ymin;
    sum.xmax += b.xmax;
    sum.ymax += b.ymax;
  }
  const double n = static_cast<double>(boxes.size());
  return {sum.xmin / n, sum.ymin / n, sum.xmax / n, sum.ymax / n};
}

namespace {

void check_same_canvas(std::span<const ScoredDetection> a, std::span<const ScoredDetection> b,
                       std::span<const ScoredDetection> c) {
  const ScoredDetection* ref = nullptr;
  for (auto set : {a, b, c})
    for (const auto& d : set) {
      if (!ref) ref = &d;
      require(d.mask.width() == ref->mask.width() && d.mask.height() == ref->mask.height(),
              ErrorCode::kShapeMismatch, "detection masks have different image dimensions");
    }
}

// Best unused candidate with IoU strictly above the threshold.
std::optional<std::size_t> best_match(const ScoredDetection& anchor,
                                      std::span<const ScoredDetection> pool,
                                      const std::vector<bool>& used, const FusionConfig& cfg) {
  std::optional<std::size_t> best;
  double best_iou = 0.0;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (used[j]) continue;
    const double iou = detection_iou(anchor, pool[j], cfg.iou_mode);
    if (!(iou > cfg.iou_threshold)) continue;
    if (!best || iou > best_iou || (iou == best_iou && pool[j].score > pool[*best].score)) {
      best = j;
      best_iou = iou;
    }
  }
  return best;
}

}  // namespace

FusionOutcome fuse_detections(std::span<const ScoredDetection> a,
                              std::span<const ScoredDetection> b,
                              std::span<const ScoredDetection> c, const FusionConfig& config) {
  config.validate();
  check_same_canvas(a, b, c);
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return a[l].score > a[r].score; });

  FusionOutcome out;
  std::vector<bool> used_b(b.size()), used_c(c.size());
  for (std::size_t i : order) {
    const auto& anchor = a[i];
    const auto j = best_match(anchor, b, used_b, config);
    const auto k = best_match(anchor, c, used_c, config);
    if (j && k) {
      const std::array masks{anchor.mask, b[*j].mask, c[*k].mask};
      const std::array boxes{anchor.box, b[*j].box, c[*k].box};
      out.labels.push_back(
          {overlap_mask(masks), soft_box(boxes), anchor.score * b[*j].score * c[*k].score});
      used_b[*j] = used_c[*k] = true;
      out.kinds.push_back(MatchKind::kTriple);
      ++out.triples;
    } else if (j || k) {
      const auto& other = j ? b[*j] : c[*k];
      const std::array masks{anchor.mask, other.mask};
      const std::array boxes{anchor.box, other.box};
      out.labels.push_back(
          {overlap_mask(masks), soft_box(boxes), anchor.score * other.score * config.decay});
      if (j) {
        used_b[*j] = true;
        out.kinds.push_back(MatchKind::kPairB);
        ++out.pairs_b;
      } else {
        used_c[*k] = true;
        out.kinds.push_back(MatchKind::kPairC);
        ++out.pairs_c;
      }
    } else {
      out.kinds.push_back(MatchKind::kDropped);
      ++out.dropped;
    }
  }
  return out;
}

std::vector<PseudoLabel> generate_pseudo_labels(std::span<const ScoredDetection> a,
                                                std::span<const ScoredDetection> b,
                                                std::span<const ScoredDetection> c,
                                                const FusionConfig& config) {
  return fuse_detections(a, b, c, config).labels;
}

}  // namespace arctext

#include "arctext/evaluation.hpp"

#include <algorithm>
#include <tuple>

namespace arctext {

void GroundTruthSet::validate() const {
  require(instances.size() == ignore.size(), ErrorCode::kInvalidArgument,
          "ground truth ignore flags must parallel the instances");
}

std::vector<std::vector<double>> iou_matrix(const GroundTruthSet& gt, const DetectionSet& det) {
  std::vector<std::optional<Polygon>> outlines;
  outlines.reserve(det.detections.size());
  for (const auto& d : det.detections) outlines.push_back(detection_outline(d));
  std::vector<std::vector<double>> iou(gt.instances.size(),
                                       std::vector<double>(det.detections.size(), 0.0));
  for (std::size_t g = 0; g < gt.instances.size(); ++g)
    for (std::size_t d = 0; d < outlines.size(); ++d)
      if (outlines[d]) iou[g][d] = iou_polygon(gt.instances[g], *outlines[d]);
  return iou;
}

ImageMatching match_detections(const GroundTruthSet& gt, const DetectionSet& det,
                               double iou_threshold) {
  gt.validate();
  require(gt.image_id == det.image_id, ErrorCode::kIdMismatch,
          "ground truth '" + gt.image_id + "' vs detections '" + det.image_id + "'");
  require(iou_threshold > 0.0 && iou_threshold <= 1.0, ErrorCode::kInvalidArgument,
          "evaluation IoU threshold must lie in (0, 1]");
  const auto iou = iou_matrix(gt, det);
  const std::size_t ng = gt.instances.size(), nd = det.detections.size();

  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t d = 0; d < nd; ++d)
      if (iou[g][d] >= iou_threshold) candidates.emplace_back(iou[g][d], g, d);
  std::sort(candidates.begin(), candidates.end(), [](const auto& l, const auto& r) {
    if (std::get<0>(l) != std::get<0>(r)) return std::get<0>(l) > std::get<0>(r);
    return std::tie(std::get<1>(l), std::get<2>(l)) < std::tie(std::get<1>(r), std::get<2>(r));
  });

  ImageMatching out;
  out.image_id = gt.image_id;
  std::vector<bool> gt_used(ng), det_used(nd), det_ignored(nd);
  for (const auto& [v, g, d] : candidates) {
    if (gt_used[g] || det_used[d]) continue;
    gt_used[g] = det_used[d] = true;
    if (gt.ignore[g]) {
      det_ignored[d] = true;
    } else {
      out.matches.push_back({g, d, v});
    }
  }
  for (std::size_t d = 0; d < nd; ++d) {
    if (det_used[d]) continue;
    for (std::size_t g = 0; g < ng; ++g)
      if (gt.ignore[g] && iou[g][d] >= iou_threshold) det_ignored[d] = true;
  }
  for (std::size_t d = 0; d < nd; ++d)
    if (det_ignored[d]) out.ignored_detections.push_back(d);
  out.gt_count = static_cast<std::size_t>(std::count(gt.ignore.begin(), gt.ignore.end(), false));
  out.det_count = nd - out.ignored_detections.size();
  return out;
}

EvalReport compute_metrics(std::size_t true_positives, std::size_t gt_count,
                           std::size_t det_count) {
  require(true_positives <= gt_count && true_positives <= det_count,
          ErrorCode::kInvalidArgument, "true positives exceed ground truth or detections");
  EvalReport r;
  r.true_positives = true_positives;
  r.gt_count = gt_count;
  r.det_count = det_count;
  r.recall_undefined = gt_count == 0;
  r.precision_undefined = det_count == 0;
  const double tp = static_cast<double>(true_positives);
  r.recall = gt_count ? tp / static_cast<double>(gt_count) : 0.0;
  r.precision = det_count ? tp / static_cast<double>(det_count) : 0.0;
  const double denom = r.precision + r.recall;
  r.f_measure = denom > 0.0 ? 2.0 * r.precision * r.recall / denom : 0.0;
  return r;
}

EvalReport evaluate(const std::vector<ImageMatching>& images) {
  std::size_t tp = 0, gt = 0, det = 0;
  for (const auto& im : images) {
    tp += im.matches.size();
    gt += im.gt_count;
    det += im.det_count;
  }
  EvalReport report = compute_metrics(tp, gt, det);
  for (const auto& im : images) {
    const EvalReport one = compute_metrics(im.matches.size(), im.gt_count, im.det_count);
    report.per_image.push_back({im.image_id, one.true_positives, one.gt_count, one.det_count,
                                one.recall, one.precision, one.f_measure});
    for (const auto& m : im.matches) report.matched_pairs.emplace_back(im.image_id, m);
  }
  return report;
}

}  // namespace arctext

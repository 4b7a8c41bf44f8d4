#include <doctest.h>

#include <algorithm>
#include <set>

#include "arctext/evaluation.hpp"
#include "oracle.hpp"

using namespace arctext;

namespace {

Polygon rect(double x0, double y0, double x1, double y1) {
  return Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

GroundTruthSet truth(std::vector<Polygon> polys, std::vector<bool> ignore = {}) {
  if (ignore.empty()) ignore.assign(polys.size(), false);
  return {"img", 64, 64, std::move(polys), std::move(ignore)};
}

DetectionSet dets(const std::vector<Polygon>& polys) {
  DetectionSet s{"img", "test", 64, 64, 1.0, {}};
  for (const auto& p : polys) s.detections.push_back(detection_from_polygon(p, 0.9, 64, 64));
  return s;
}

}  // namespace

TEST_CASE("two ground truths, one correct detection") {
  const auto gt = truth({rect(0, 0, 10, 10), rect(20, 20, 30, 30)});
  const auto m = match_detections(gt, dets({rect(0, 0, 10, 10)}));
  const auto r = evaluate({m});
  CHECK(r.recall == 0.5);
  CHECK(r.precision == 1.0);
  CHECK(std::abs(r.f_measure - 2.0 / 3.0) <= 1e-9);
  REQUIRE(r.matched_pairs.size() == 1);
  CHECK(r.matched_pairs[0].second == Match{0, 0, 1.0});
}

TEST_CASE("perfect detection") {
  const std::vector polys{rect(0, 0, 10, 10), rect(20, 20, 30, 28), rect(40, 5, 60, 12)};
  const auto r = evaluate({match_detections(truth(polys), dets(polys))});
  CHECK(r.recall == 1.0);
  CHECK(r.precision == 1.0);
  CHECK(r.f_measure == 1.0);
}

TEST_CASE("empty inputs are flagged") {
  auto r = evaluate({match_detections(truth({rect(0, 0, 4, 4)}), dets({}))});
  CHECK(r.recall == 0.0);
  CHECK(r.precision == 0.0);
  CHECK(r.f_measure == 0.0);
  CHECK(r.precision_undefined);
  CHECK(!r.recall_undefined);

  r = evaluate({match_detections(truth({}), dets({}))});
  CHECK(r.precision_undefined);
  CHECK(r.recall_undefined);
  CHECK(r.f_measure == 0.0);

  CHECK_THROWS_AS(compute_metrics(3, 2, 5), Error);
}

TEST_CASE("threshold is inclusive") {
  // Detection covers half of a 10x10 ground truth and nothing else: IoU 0.5.
  const auto gt = truth({rect(0, 0, 10, 10)});
  const auto m = match_detections(gt, dets({rect(0, 0, 5, 10)}), 0.5);
  REQUIRE(m.matches.size() == 1);
  CHECK(m.matches[0].iou == 0.5);
  CHECK(match_detections(gt, dets({rect(0, 0, 5, 10)}), 0.51).matches.empty());
}

TEST_CASE("don't-care regions leave the counts") {
  const auto gt = truth({rect(0, 0, 10, 10), rect(20, 0, 30, 10)}, {false, true});
  // Second detection matches the ignored region, third overlaps it below
  // one-to-one but above threshold, fourth is a false positive.
  const auto d = dets({rect(0, 0, 10, 10), rect(20, 0, 30, 10), rect(20, 0, 30, 9),
                       rect(40, 40, 50, 50)});
  const auto m = match_detections(gt, d);
  CHECK(m.gt_count == 1);
  CHECK(m.matches.size() == 1);
  CHECK(m.ignored_detections == std::vector<std::size_t>{1, 2});
  CHECK(m.det_count == 2);
  const auto r = evaluate({m});
  CHECK(r.recall == 1.0);
  CHECK(r.precision == 0.5);
}

TEST_CASE("micro average over images") {
  auto a = match_detections(truth({rect(0, 0, 10, 10)}), dets({rect(0, 0, 10, 10)}));
  auto gt_b = truth({rect(0, 0, 10, 10), rect(20, 20, 30, 30), rect(40, 40, 50, 50)});
  gt_b.image_id = "img2";
  auto det_b = dets({rect(40, 40, 50, 50), rect(0, 30, 5, 35)});
  det_b.image_id = "img2";
  const auto r = evaluate({a, match_detections(gt_b, det_b)});
  CHECK(r.true_positives == 2);
  CHECK(r.gt_count == 4);
  CHECK(r.det_count == 3);
  CHECK(r.recall == 0.5);
  CHECK(r.precision == 2.0 / 3.0);
  REQUIRE(r.per_image.size() == 2);
  CHECK(r.per_image[1].recall == 1.0 / 3.0);
  CHECK(r.per_image[0].f_measure == 1.0);
}

TEST_CASE("image ids must agree") {
  auto d = dets({});
  d.image_id = "elsewhere";
  try {
    match_detections(truth({}), d);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIdMismatch);
  }
}

TEST_CASE("mask-only detections are outlined from their mask") {
  DetectionSet s{"img", "mask", 64, 64, 1.0, {}};
  auto d = detection_from_polygon(rect(2, 2, 12, 8), 0.5, 64, 64);
  d.outline.reset();
  s.detections.push_back(d);
  const auto m = match_detections(truth({rect(2, 2, 12, 8)}), s);
  REQUIRE(m.matches.size() == 1);
  CHECK(m.matches[0].iou == 1.0);
}

TEST_CASE("greedy matching equals the assignment oracle") {
  Rng rng(51);
  int checked = 0;
  while (checked < 60) {
    const std::size_t ng = rng.integer(1, 8), nd = rng.integer(1, 8);
    std::vector<Polygon> gp, dp;
    auto random_rect = [&] {
      const double x = rng.integer(0, 16), y = rng.integer(0, 16);
      return rect(x, y, x + rng.integer(3, 10), y + rng.integer(3, 10));
    };
    for (std::size_t i = 0; i < ng; ++i) gp.push_back(random_rect());
    for (std::size_t i = 0; i < nd; ++i) dp.push_back(random_rect());
    const auto gt = truth(gp);
    const auto ds = dets(dp);
    const double threshold = 0.2;
    const auto iou = iou_matrix(gt, ds);
    std::set<double> seen;
    bool distinct = true;
    for (const auto& row : iou)
      for (double v : row)
        if (v >= threshold && !seen.insert(v).second) distinct = false;
    if (!distinct) continue;

    auto got = match_detections(gt, ds, threshold).matches;
    auto want = oracle::lexmax_assignment(iou, threshold);
    auto by_gt = [](const Match& l, const Match& r) { return l.gt < r.gt; };
    std::sort(got.begin(), got.end(), by_gt);
    std::sort(want.begin(), want.end(), by_gt);
    CHECK(got == want);
    ++checked;
  }
}

TEST_CASE("greedy matching is optimal on well separated scenes") {
  Rng rng(52);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Polygon> gp, dp;
    for (int i = 0; i < 6; ++i) {
      const double x = 10.0 * i, y = rng.integer(0, 50);
      gp.push_back(rect(x, y, x + 8, y + 6));
      if (rng.coin(0.7)) {
        const double dx = rng.integer(-2, 2), dy = rng.integer(-2, 2);
        dp.push_back(rect(x + dx + 1, y + dy, x + dx + 8, y + dy + 6));
      }
    }
    const auto gt = truth(gp);
    const auto ds = dets(dp);
    const auto m = match_detections(gt, ds);
    double sum = 0;
    for (const auto& x : m.matches) sum += x.iou;
    CHECK(std::abs(sum - oracle::max_weight_assignment(iou_matrix(gt, ds), 0.5)) <= 1e-12);
  }
}

#include <doctest.h>

#include <cmath>

#include "arctext/suppress.hpp"
#include "oracle.hpp"

using namespace arctext;

namespace {

ScoredDetection rect_det(int x0, int y0, int x1, int y1, double score, int w = 32, int h = 32) {
  ScoredDetection d;
  d.mask = BitMask(w, h);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) d.mask.set(x, y);
  d.box = {double(x0), double(y0), double(x1), double(y1)};
  d.score = score;
  return d;
}

SuppressConfig mode(SuppressMode m) {
  SuppressConfig c;
  c.mode = m;
  return c;
}

}  // namespace

TEST_CASE("full overlap under linear decay annihilates the weaker detection") {
  const std::vector dets{rect_det(0, 0, 8, 8, 0.6), rect_det(0, 0, 8, 8, 0.9)};
  const auto out = soft_nms(dets, mode(SuppressMode::kSoftLinear));
  REQUIRE(out.size() == 1);
  CHECK(out[0].score == 0.9);
  CHECK(out[0].mask == dets[1].mask);
}

TEST_CASE("Gaussian decay frozen value") {
  const std::vector dets{rect_det(0, 0, 8, 8, 0.9), rect_det(0, 0, 8, 8, 0.6)};
  const auto out = soft_nms(dets, mode(SuppressMode::kSoftGaussian));
  REQUIRE(out.size() == 2);
  CHECK(out[1].score == 0.6 * std::exp(-1.0 / 0.5));
}

TEST_CASE("linear decay only above the threshold") {
  // IoU 1/3: untouched at N_t = 0.5, decayed by 2/3 at N_t = 0.3.
  const std::vector dets{rect_det(0, 0, 4, 1, 0.9), rect_det(2, 0, 6, 1, 0.6)};
  auto out = soft_nms(dets, mode(SuppressMode::kSoftLinear));
  REQUIRE(out.size() == 2);
  CHECK(out[1].score == 0.6);
  auto cfg = mode(SuppressMode::kSoftLinear);
  cfg.iou_threshold = 0.3;
  out = soft_nms(dets, cfg);
  CHECK(out[1].score == 0.6 * (1.0 - 1.0 / 3.0));
}

TEST_CASE("disjoint detections pass unchanged") {
  const std::vector dets{rect_det(0, 0, 4, 4, 0.5), rect_det(10, 10, 14, 14, 0.7),
                         rect_det(20, 0, 24, 4, 0.6)};
  for (auto m : {SuppressMode::kHard, SuppressMode::kSoftLinear, SuppressMode::kSoftGaussian}) {
    const auto out = suppress(dets, mode(m));
    REQUIRE(out.size() == 3);
    CHECK(out[0] == dets[1]);
    CHECK(out[1] == dets[2]);
    CHECK(out[2] == dets[0]);
  }
}

TEST_CASE("hard NMS removes duplicates") {
  std::vector dets{rect_det(0, 0, 8, 8, 0.8), rect_det(10, 0, 18, 8, 0.7)};
  auto doubled = dets;
  doubled.insert(doubled.end(), dets.begin(), dets.end());
  const auto out = nms(doubled, mode(SuppressMode::kHard));
  REQUIRE(out.size() == 2);
  CHECK(out[0] == dets[0]);
  CHECK(out[1] == dets[1]);
}

TEST_CASE("score floor drops weak survivors") {
  auto cfg = mode(SuppressMode::kSoftGaussian);
  cfg.sigma = 0.01;
  const std::vector dets{rect_det(0, 0, 8, 8, 0.9), rect_det(0, 0, 8, 7, 0.8)};
  CHECK(soft_nms(dets, cfg).size() == 1);
}

TEST_CASE("matches the sequential recomputation oracle") {
  Rng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const auto objects = oracle::random_objects(rng, 48, 48, rng.integer(1, 8));
    auto dets = oracle::random_detections(rng, 48, 48, objects, 25);
    const auto extra = oracle::random_detections(rng, 48, 48, objects, 25);
    dets.insert(dets.end(), extra.begin(), extra.end());
    const bool gaussian = trial % 2 == 1;
    auto cfg = mode(gaussian ? SuppressMode::kSoftGaussian : SuppressMode::kSoftLinear);
    cfg.iou_threshold = 0.3;
    const auto out = soft_nms(dets, cfg);
    const auto ref = oracle::soft_nms(dets, gaussian ? oracle::Decay::kGaussian : oracle::Decay::kLinear,
                                      cfg.iou_threshold, cfg.sigma, cfg.score_floor);
    REQUIRE(out.size() == ref.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(std::abs(out[i].score - ref[i].second) <= 1e-12);
      CHECK(out[i].mask == dets[ref[i].first].mask);
      if (i > 0) CHECK(out[i - 1].score >= out[i].score);
    }
  }
}

TEST_CASE("configuration checks") {
  auto cfg = mode(SuppressMode::kSoftLinear);
  cfg.iou_threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = mode(SuppressMode::kSoftGaussian);
  cfg.sigma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("rescaling to the original frame") {
  DetectionSet set;
  set.image_id = "img";
  set.width = 64;
  set.height = 32;
  set.scale_factor = 2.0;
  auto d = rect_det(8, 4, 24, 12, 0.7, 64, 32);
  d.outline = Polygon({{8, 4}, {24, 4}, {24, 12}, {8, 12}});
  set.detections.push_back(d);
  const auto out = rescale_to_original(set);
  CHECK(out.width == 32);
  CHECK(out.height == 16);
  CHECK(out.scale_factor == 1.0);
  REQUIRE(out.detections.size() == 1);
  CHECK(out.detections[0].box == AxisBox{4, 2, 12, 6});
  CHECK(out.detections[0].mask == rect_det(4, 2, 12, 6, 0, 32, 16).mask);
  CHECK(*out.detections[0].outline == Polygon({{4, 2}, {12, 2}, {12, 6}, {4, 6}}));
  CHECK(out.detections[0].score == 0.7);
}

TEST_CASE("aggregation and ensembles") {
  DetectionSet s1{"img", "a", 32, 32, 1.0, {rect_det(0, 0, 8, 8, 0.9)}};
  DetectionSet s2{"img", "b", 32, 32, 1.0, {rect_det(0, 0, 8, 8, 0.8), rect_det(20, 20, 24, 24, 0.4)}};
  const std::vector sets{s1, s2};
  const auto merged = multi_scale_aggregate(sets, mode(SuppressMode::kSoftLinear));
  CHECK(merged.image_id == "img");
  REQUIRE(merged.detections.size() == 2);
  CHECK(merged.detections[0].score == 0.9);
  CHECK(merged.detections[1].score == 0.4);
  CHECK(model_ensemble(sets, mode(SuppressMode::kSoftGaussian)).detections.size() == 3);
  CHECK_THROWS_AS(model_ensemble(sets, mode(SuppressMode::kHard)), Error);

  auto expect = [](ErrorCode code, auto&& call) {
    try {
      call();
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  DetectionSet other = s2;
  other.image_id = "other";
  expect(ErrorCode::kIdMismatch,
         [&] { multi_scale_aggregate(std::vector{s1, other}, mode(SuppressMode::kHard)); });
  DetectionSet scaled = s2;
  scaled.scale_factor = 2.0;
  expect(ErrorCode::kInvalidArgument,
         [&] { multi_scale_aggregate(std::vector{s1, scaled}, mode(SuppressMode::kHard)); });
  DetectionSet wide = s2;
  wide.width = 40;
  expect(ErrorCode::kShapeMismatch,
         [&] { multi_scale_aggregate(std::vector{s1, wide}, mode(SuppressMode::kHard)); });
}

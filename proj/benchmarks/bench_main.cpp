#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "arctext/inter.hpp"
#include "arctext/intra.hpp"
#include "arctext/pseudo_label.hpp"
#include "arctext/random.hpp"
#include "arctext/suppress.hpp"

using namespace arctext;

namespace {

Tensor noise(const Tensor::Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1, 1);
  return t;
}

std::vector<ScoredDetection> boxes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ScoredDetection> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.integer(0, 100), y = rng.integer(0, 100);
    const Polygon p({{x, y}, {x + 20, y}, {x + 20, y + 8}, {x, y + 8}});
    out.push_back(detection_from_polygon(p, rng.uniform(0.05, 1.0), 128, 128));
  }
  return out;
}

}  // namespace

static void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = noise({c, 32, 32}, 1);
  const Conv2dKernel k(noise({c, c, 3, 3}, 2), noise({c}, 3));
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k));
}
BENCHMARK(BM_Conv2d)->Arg(8)->Arg(32);

static void BM_IntraForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto module = intra::Module::random(intra::Config::standard(c), 4);
  const Tensor x = noise({c, 28, 28}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(intra::forward(x, module));
}
BENCHMARK(BM_IntraForward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_InterForward(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  static const auto module = inter::Module::random(inter::Config{}, 6);
  const Tensor rois = noise({m, 256, 14, 14}, 7);
  std::vector<Tensor> pyramid;
  for (std::size_t l = 0; l < 4; ++l) pyramid.push_back(noise({256, std::size_t(32 >> l), std::size_t(32 >> l)}, 8 + l));
  for (auto _ : state) benchmark::DoNotOptimize(inter::forward(rois, pyramid, module));
}
BENCHMARK(BM_InterForward)->Arg(2)->Arg(9)->Unit(benchmark::kMillisecond);

static void BM_PolygonIoU(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  std::vector<Point> a, b;
  for (int i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * i / n;
    const double r = i % 2 ? 5.0 : 3.0;
    a.push_back({10 + r * std::cos(t), 10 + r * std::sin(t)});
    b.push_back({12 + r * std::cos(t + 0.3), 11 + r * std::sin(t + 0.3)});
  }
  const Polygon pa(a), pb(b);
  for (auto _ : state) benchmark::DoNotOptimize(iou_polygon(pa, pb));
}
BENCHMARK(BM_PolygonIoU)->Arg(4)->Arg(16)->Arg(64);

static void BM_SoftNms(benchmark::State& state) {
  const auto dets = boxes(static_cast<std::size_t>(state.range(0)), 9);
  for (auto _ : state) benchmark::DoNotOptimize(soft_nms(dets, SuppressConfig{}));
}
BENCHMARK(BM_SoftNms)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_Fusion(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = boxes(n, 10), b = boxes(n, 11), c = boxes(n, 12);
  for (auto _ : state) benchmark::DoNotOptimize(generate_pseudo_labels(a, b, c, FusionConfig{}));
}
BENCHMARK(BM_Fusion)->Arg(20)->Arg(60)->Unit(benchmark::kMillisecond);

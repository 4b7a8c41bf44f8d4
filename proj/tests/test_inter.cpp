#include <doctest.h>

#include <numeric>

#include "arctext/inter.hpp"
#include "oracle.hpp"

using namespace arctext;

namespace {

inter::Config small() {
  inter::Config c;
  c.channels = 6;
  c.reduced_channels = 4;
  c.roi_h = c.roi_w = 6;
  c.pooled_h = c.pooled_w = 2;
  c.layers = 2;
  c.heads = 4;
  c.pyramid_channels = {5, 3};
  return c;
}

std::vector<Tensor> pyramid_for(const inter::Config& c, Rng& rng) {
  std::vector<Tensor> levels;
  std::size_t side = 8;
  for (std::size_t ch : c.pyramid_channels) {
    levels.push_back(oracle::random_tensor({ch, side, side}, rng));
    side = std::max<std::size_t>(1, side / 2);
  }
  return levels;
}

// Counts parameters field by field from a constructed module.
std::size_t enumerate(const inter::Module& m) {
  std::size_t n = m.reduce.parameter_count() + m.recover.parameter_count();
  for (const auto& k : m.context) n += k.parameter_count();
  for (const auto& l : m.layers)
    for (const Tensor* t : {&l.query_w, &l.query_b, &l.key_w, &l.key_b, &l.value_w, &l.value_b,
                            &l.out_w, &l.out_b, &l.norm1_gamma, &l.norm1_beta, &l.ffn1_w,
                            &l.ffn1_b, &l.ffn2_w, &l.ffn2_b, &l.norm2_gamma, &l.norm2_beta})
      n += t->size();
  return n;
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < perm.size(); ++i) out.set_slice(i, x.slice(perm[i]));
  return out;
}

}  // namespace

TEST_CASE("default configuration") {
  const inter::Config c;
  CHECK(c.d_model() == 288);
  CHECK(c.hidden() == 1152);
  CHECK(c.head_dim() == 72);
  CHECK(inter::parameter_count(c) == 3277056);
  CHECK(inter::parameter_count(c) == enumerate(inter::Module::zeros(c)));
  CHECK(inter::Module::zeros(c).parameter_count() == 3277056);
}

TEST_CASE("config validation") {
  auto c = small();
  c.heads = 3;  // 16 is not divisible by 3
  CHECK_THROWS_AS(c.validate(), Error);
  c = small();
  c.pooled_h = 7;  // larger than the RoI
  CHECK_THROWS_AS(c.validate(), Error);
  c = small();
  c.pyramid_channels.clear();
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("default forward shape for nine instances") {
  const inter::Config c;
  const auto m = inter::Module::random(c, 1);
  Rng rng(1);
  const Tensor rois = oracle::random_tensor({9, 256, 14, 14}, rng);
  std::vector<Tensor> pyramid;
  for (std::size_t l = 0; l < 4; ++l) pyramid.push_back(oracle::random_tensor({256, 4, 4}, rng));
  const Tensor y = inter::forward(rois, pyramid, m);
  CHECK(y.shape() == Tensor::Shape{9, 256, 14, 14});
}

TEST_CASE("zero module passes RoI features through") {
  const auto c = small();
  Rng rng(2);
  const Tensor rois = oracle::random_tensor({3, 6, 6, 6}, rng);
  CHECK(inter::forward(rois, pyramid_for(c, rng), inter::Module::zeros(c)) == rois);
}

TEST_CASE("global context frozen value") {
  const std::vector<Tensor> pyramid{Tensor({1, 2, 2}, std::vector<double>{1, 2, 3, 4}),
                                    Tensor({1, 1, 1}, std::vector<double>{10})};
  const std::vector<Conv2dKernel> convs{
      Conv2dKernel(Tensor({2, 1, 1, 1}, std::vector<double>{2, -1}), Tensor({2}, 1.0)),
      Conv2dKernel(Tensor({2, 1, 1, 1}, std::vector<double>{0.5, 0}), Tensor({2}, 0.0))};
  // Level 0: (2 * 2.5 + 1, -2.5 + 1); level 1: (5, 0).
  CHECK(inter::global_context(pyramid, convs) == Tensor({2}, std::vector<double>{11, -1.5}));
}

TEST_CASE("token path shapes") {
  const auto c = small();
  const auto m = inter::Module::random(c, 3);
  Rng rng(3);
  const Tensor rois = oracle::random_tensor({5, 6, 6, 6}, rng);
  const auto tokens = inter::roi_to_tokens(rois, m);
  CHECK(tokens.count() == 5);
  CHECK(tokens.width() == 16);
  const auto encoded = inter::transformer_encoder(tokens, m);
  CHECK(encoded.tokens.shape() == tokens.tokens.shape());
  CHECK(inter::tokens_to_roi(encoded, m).shape() == rois.shape());
}

TEST_CASE("permutation equivariance and attention normalisation") {
  const auto c = small();
  for (std::size_t count : {2u, 5u, 9u}) {
    const auto m = inter::Module::random(c, count);
    Rng rng(count);
    const Tensor rois = oracle::random_tensor({count, 6, 6, 6}, rng);
    const auto pyramid = pyramid_for(c, rng);
    inter::EncoderTrace trace;
    const Tensor y = inter::forward(rois, pyramid, m, &trace);

    std::vector<std::size_t> perm(count);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = count - 1; i > 0; --i) std::swap(perm[i], perm[rng.integer(0, i)]);
    const Tensor yp = inter::forward(permute_rows(rois, perm), pyramid, m);
    CHECK(oracle::max_abs_diff(yp, permute_rows(y, perm)) <= 1e-9);

    REQUIRE(trace.attention.size() == c.layers);
    for (const auto& layer : trace.attention) {
      REQUIRE(layer.size() == c.heads);
      for (const auto& a : layer) {
        CHECK(a.shape() == Tensor::Shape{count, count});
        for (std::size_t r = 0; r < count; ++r) {
          double s = 0;
          for (std::size_t q = 0; q < count; ++q) s += a(r, q);
          CHECK(std::abs(s - 1.0) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("single instance and empty sets") {
  const auto c = small();
  const auto m = inter::Module::random(c, 4);
  Rng rng(4);
  const Tensor one = oracle::random_tensor({1, 6, 6, 6}, rng);
  CHECK(inter::forward(one, pyramid_for(c, rng), m).shape() == one.shape());

  std::vector<Tensor> none;
  try {
    inter::stack_instances(none);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyProposalSet);
  }
  const std::vector<Tensor> parts{Tensor({6, 6, 6}, 1.0), Tensor({6, 6, 6}, 2.0)};
  const Tensor stacked = inter::stack_instances(parts);
  CHECK(stacked.shape() == Tensor::Shape{2, 6, 6, 6});
  CHECK(stacked.slice(1) == parts[1]);
}

TEST_CASE("shape mismatches") {
  const auto c = small();
  const auto m = inter::Module::random(c, 5);
  Rng rng(5);
  auto pyramid = pyramid_for(c, rng);
  auto expect_shape_error = [](auto&& call) {
    try {
      call();
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kShapeMismatch);
    }
  };
  expect_shape_error([&] { inter::forward(Tensor({2, 5, 6, 6}), pyramid, m); });
  expect_shape_error([&] { inter::forward(Tensor({2, 6, 7, 6}), pyramid, m); });
  pyramid.pop_back();
  expect_shape_error([&] { inter::forward(Tensor({2, 6, 6, 6}), pyramid, m); });
}

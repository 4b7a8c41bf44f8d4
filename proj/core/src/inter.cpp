#include "arctext/inter.hpp"

#include <cmath>

#include "arctext/random.hpp"

namespace arctext::inter {
namespace {

void expect_shape(const Tensor& t, const Tensor::Shape& shape, const std::string& name) {
  require(t.shape() == shape, ErrorCode::kShapeMismatch,
          name + " has shape " + shape_string(t.shape()) + ", expected " + shape_string(shape));
}

void expect_kernel(const Conv2dKernel& k, std::size_t out, std::size_t in,
                   const std::string& name) {
  expect_shape(k.weights, {out, in, 1, 1}, name + ".weight");
  expect_shape(k.bias, {out}, name + ".bias");
}

void fill_uniform(Rng& rng, Tensor& t, double bound) {
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
}

Conv2dKernel random_pointwise(Rng& rng, std::size_t out, std::size_t in) {
  Conv2dKernel k = Conv2dKernel::zeros(out, in, 1, 1);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  fill_uniform(rng, k.weights, bound);
  fill_uniform(rng, k.bias, bound);
  return k;
}

EncoderLayer zero_layer(const Config& cfg) {
  const std::size_t d = cfg.d_model(), hid = cfg.hidden();
  EncoderLayer l;
  l.query_w = l.key_w = l.value_w = l.out_w = Tensor::zeros({d, d});
  l.query_b = l.key_b = l.value_b = l.out_b = Tensor::zeros({d});
  l.norm1_gamma = l.norm2_gamma = Tensor::filled({d}, 1.0);
  l.norm1_beta = l.norm2_beta = Tensor::zeros({d});
  l.ffn1_w = Tensor::zeros({d, hid});
  l.ffn1_b = Tensor::zeros({hid});
  l.ffn2_w = Tensor::zeros({hid, d});
  l.ffn2_b = Tensor::zeros({d});
  return l;
}

}  // namespace

void Config::validate() const {
  require(channels >= 1 && reduced_channels >= 1, ErrorCode::kInvalidConfig,
          "inter channels must be positive");
  require(roi_h >= 1 && roi_w >= 1 && pooled_h >= 1 && pooled_w >= 1,
          ErrorCode::kInvalidConfig, "inter spatial sizes must be positive");
  require(pooled_h <= roi_h && pooled_w <= roi_w, ErrorCode::kInvalidConfig,
          "inter pooled size exceeds RoI size");
  require(layers >= 1, ErrorCode::kInvalidConfig, "inter encoder needs at least one layer");
  require(heads >= 1 && d_model() % heads == 0, ErrorCode::kInvalidConfig,
          "d_model " + std::to_string(d_model()) + " is not divisible by " +
              std::to_string(heads) + " heads");
  require(!pyramid_channels.empty(), ErrorCode::kInvalidConfig,
          "inter global context needs at least one pyramid level");
  for (auto c : pyramid_channels)
    require(c >= 1, ErrorCode::kInvalidConfig, "pyramid channels must be positive");
}

Module Module::zeros(const Config& config) {
  config.validate();
  Module m;
  m.config = config;
  m.reduce = Conv2dKernel::zeros(config.reduced_channels, config.channels, 1, 1);
  m.layers.assign(config.layers, zero_layer(config));
  m.recover = Conv2dKernel::zeros(config.channels, config.reduced_channels, 1, 1);
  for (auto c : config.pyramid_channels)
    m.context.push_back(Conv2dKernel::zeros(config.channels, c, 1, 1));
  return m;
}

Module Module::random(const Config& config, std::uint64_t seed) {
  Module m = zeros(config);
  Rng rng(seed);
  const double d = static_cast<double>(config.d_model());
  const double hid = static_cast<double>(config.hidden());
  m.reduce = random_pointwise(rng, config.reduced_channels, config.channels);
  for (auto& l : m.layers) {
    for (Tensor* t : {&l.query_w, &l.query_b, &l.key_w, &l.key_b, &l.value_w, &l.value_b,
                      &l.out_w, &l.out_b, &l.ffn1_w, &l.ffn1_b})
      fill_uniform(rng, *t, 1.0 / std::sqrt(d));
    fill_uniform(rng, l.ffn2_w, 1.0 / std::sqrt(hid));
    fill_uniform(rng, l.ffn2_b, 1.0 / std::sqrt(hid));
  }
  m.recover = random_pointwise(rng, config.channels, config.reduced_channels);
  for (std::size_t i = 0; i < m.context.size(); ++i)
    m.context[i] = random_pointwise(rng, config.channels, config.pyramid_channels[i]);
  return m;
}

void Module::validate() const {
  config.validate();
  const std::size_t d = config.d_model(), hid = config.hidden();
  expect_kernel(reduce, config.reduced_channels, config.channels, "reduce");
  expect_kernel(recover, config.channels, config.reduced_channels, "recover");
  require(layers.size() == config.layers, ErrorCode::kShapeMismatch,
          "expected " + std::to_string(config.layers) + " encoder layers, got " +
              std::to_string(layers.size()));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string p = "layers." + std::to_string(i) + ".";
    for (const auto& [t, n] : {std::pair{&l.query_w, "query.weight"}, {&l.key_w, "key.weight"},
                               {&l.value_w, "value.weight"}, {&l.out_w, "out.weight"}})
      expect_shape(*t, {d, d}, p + n);
    for (const auto& [t, n] :
         {std::pair{&l.query_b, "query.bias"}, {&l.key_b, "key.bias"}, {&l.value_b, "value.bias"},
          {&l.out_b, "out.bias"}, {&l.norm1_gamma, "norm1.gamma"}, {&l.norm1_beta, "norm1.beta"},
          {&l.ffn2_b, "ffn2.bias"}, {&l.norm2_gamma, "norm2.gamma"},
          {&l.norm2_beta, "norm2.beta"}})
      expect_shape(*t, {d}, p + n);
    expect_shape(l.ffn1_w, {d, hid}, p + "ffn1.weight");
    expect_shape(l.ffn1_b, {hid}, p + "ffn1.bias");
    expect_shape(l.ffn2_w, {hid, d}, p + "ffn2.weight");
  }
  require(context.size() == config.pyramid_channels.size(), ErrorCode::kShapeMismatch,
          "expected one context conv per pyramid level");
  for (std::size_t i = 0; i < context.size(); ++i)
    expect_kernel(context[i], config.channels, config.pyramid_channels[i],
                  "context." + std::to_string(i));
}

std::size_t Module::parameter_count() const {
  std::size_t total = reduce.parameter_count() + recover.parameter_count();
  for (const auto& l : layers) {
    for (const Tensor* t :
         {&l.query_w, &l.query_b, &l.key_w, &l.key_b, &l.value_w, &l.value_b, &l.out_w,
          &l.out_b, &l.norm1_gamma, &l.norm1_beta, &l.ffn1_w, &l.ffn1_b, &l.ffn2_w, &l.ffn2_b,
          &l.norm2_gamma, &l.norm2_beta})
      total += t->size();
  }
  for (const auto& k : context) total += k.parameter_count();
  return total;
}

std::size_t parameter_count(const Config& config) {
  config.validate();
  const std::size_t c = config.channels, c0 = config.reduced_channels;
  const std::size_t d = config.d_model(), hid = config.hidden();
  const std::size_t per_layer = 4 * (d * d + d) + 2 * d + (d * hid + hid) + (hid * d + d) + 2 * d;
  std::size_t total = (c0 * c + c0) + (c * c0 + c) + config.layers * per_layer;
  for (auto cl : config.pyramid_channels) total += c * cl + c;
  return total;
}

Tensor stack_instances(std::span<const Tensor> instances) {
  require(!instances.empty(), ErrorCode::kEmptyProposalSet, "no positive proposals");
  Tensor::Shape shape{instances.size()};
  shape.insert(shape.end(), instances[0].shape().begin(), instances[0].shape().end());
  Tensor out(shape);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    require(instances[i].shape() == instances[0].shape(), ErrorCode::kShapeMismatch,
            "instance " + std::to_string(i) + " has shape " +
                shape_string(instances[i].shape()));
    out.set_slice(i, instances[i]);
  }
  return out;
}

TokenSequence roi_to_tokens(const Tensor& rois, const Module& module) {
  const auto& cfg = module.config;
  require(rois.rank() == 4, ErrorCode::kShapeMismatch,
          "RoI features must be [M, C, H, W], got " + shape_string(rois.shape()));
  require(rois.dim(1) == cfg.channels && rois.dim(2) == cfg.roi_h && rois.dim(3) == cfg.roi_w,
          ErrorCode::kShapeMismatch,
          "RoI features " + shape_string(rois.shape()) + " do not match config [M," +
              std::to_string(cfg.channels) + "," + std::to_string(cfg.roi_h) + "," +
              std::to_string(cfg.roi_w) + "]");
  const std::size_t m = rois.dim(0), d = cfg.d_model();
  Tensor tokens({m, d});
  for (std::size_t i = 0; i < m; ++i) {
    const Tensor reduced = conv2d(rois.slice(i), module.reduce);
    const Tensor pooled = adaptive_max_pool(reduced, cfg.pooled_h, cfg.pooled_w);
    tokens.set_slice(i, pooled);
  }
  return {std::move(tokens)};
}

Tensor self_attention(const Tensor& tokens, const EncoderLayer& layer, std::size_t heads,
                      std::vector<Tensor>* attention) {
  const std::size_t m = tokens.dim(0), d = tokens.dim(1);
  require(heads >= 1 && d % heads == 0, ErrorCode::kInvalidConfig,
          "token width not divisible by head count");
  const std::size_t hd = d / heads;
  const Tensor q = linear(tokens, layer.query_w, layer.query_b);
  const Tensor k = linear(tokens, layer.key_w, layer.key_b);
  const Tensor v = linear(tokens, layer.value_w, layer.value_b);
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Tensor mixed({m, d});
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t base = h * hd;
    Tensor scores({m, m});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double dot = 0.0;
        for (std::size_t e = 0; e < hd; ++e) dot += q(i, base + e) * k(j, base + e);
        scores(i, j) = dot * inv_scale;
      }
    const Tensor weights = softmax(scores);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t e = 0; e < hd; ++e) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += weights(i, j) * v(j, base + e);
        mixed(i, base + e) = acc;
      }
    if (attention) attention->push_back(weights);
  }
  return linear(mixed, layer.out_w, layer.out_b);
}

Tensor encoder_layer_forward(const Tensor& tokens, const EncoderLayer& layer,
                             std::size_t heads, std::vector<Tensor>* attention) {
  const Tensor attended = self_attention(tokens, layer, heads, attention);
  const Tensor x = layer_norm(add(tokens, attended), layer.norm1_gamma, layer.norm1_beta);
  const Tensor hidden = relu(linear(x, layer.ffn1_w, layer.ffn1_b));
  const Tensor ffn = linear(hidden, layer.ffn2_w, layer.ffn2_b);
  return layer_norm(add(x, ffn), layer.norm2_gamma, layer.norm2_beta);
}

TokenSequence transformer_encoder(const TokenSequence& tokens, const Module& module,
                                  EncoderTrace* trace) {
  const auto& cfg = module.config;
  require(tokens.tokens.rank() == 2 && tokens.width() == cfg.d_model(),
          ErrorCode::kShapeMismatch,
          "token width " + std::to_string(tokens.tokens.shape().back()) +
              " does not match d_model " + std::to_string(cfg.d_model()));
  Tensor x = tokens.tokens;
  for (const auto& layer : module.layers) {
    std::vector<Tensor>* maps = nullptr;
    if (trace) maps = &trace->attention.emplace_back();
    x = encoder_layer_forward(x, layer, cfg.heads, maps);
  }
  return {std::move(x)};
}

Tensor tokens_to_roi(const TokenSequence& tokens, const Module& module) {
  const auto& cfg = module.config;
  require(tokens.tokens.rank() == 2 && tokens.width() == cfg.d_model(),
          ErrorCode::kShapeMismatch,
          "token width does not equal h*w*C0 = " + std::to_string(cfg.d_model()));
  const std::size_t m = tokens.count();
  Tensor out({m, cfg.channels, cfg.roi_h, cfg.roi_w});
  for (std::size_t i = 0; i < m; ++i) {
    const Tensor grid =
        tokens.tokens.slice(i).reshaped({cfg.reduced_channels, cfg.pooled_h, cfg.pooled_w});
    const Tensor up = bilinear_upsample(grid, cfg.roi_h, cfg.roi_w);
    out.set_slice(i, conv2d(up, module.recover));
  }
  return out;
}

Tensor global_context(std::span<const Tensor> pyramid, std::span<const Conv2dKernel> convs) {
  require(!pyramid.empty(), ErrorCode::kInvalidArgument, "global context of an empty pyramid");
  require(pyramid.size() == convs.size(), ErrorCode::kShapeMismatch,
          "one 1x1 conv per pyramid level required");
  Tensor total;
  for (std::size_t l = 0; l < pyramid.size(); ++l) {
    const Tensor pooled = global_average_pool(conv2d(pyramid[l], convs[l]));
    if (l == 0) {
      total = pooled;
    } else {
      require(pooled.shape() == total.shape(), ErrorCode::kShapeMismatch,
              "pyramid level " + std::to_string(l) + " context has " +
                  std::to_string(pooled.dim(0)) + " channels, expected " +
                  std::to_string(total.dim(0)));
      total = add(total, pooled);
    }
  }
  return total;
}

Tensor fuse_features(const Tensor& rois, const Tensor& enhanced, const Tensor& context) {
  require(rois.rank() == 4 && rois.shape() == enhanced.shape(), ErrorCode::kShapeMismatch,
          "fuse_features: " + shape_string(rois.shape()) + " vs " +
              shape_string(enhanced.shape()));
  const std::size_t m = rois.dim(0), c = rois.dim(1), hw = rois.dim(2) * rois.dim(3);
  require(context.rank() == 1 && context.dim(0) == c, ErrorCode::kShapeMismatch,
          "global context length " + std::to_string(context.size()) + " does not match " +
              std::to_string(c) + " channels");
  Tensor out(rois.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < hw; ++p) {
        const std::size_t idx = (i * c + ch) * hw + p;
        out[idx] = rois[idx] + enhanced[idx] + context[ch];
      }
  return out;
}

Tensor forward(const Tensor& rois, std::span<const Tensor> pyramid, const Module& module,
               EncoderTrace* trace) {
  module.validate();
  require(rois.rank() == 4, ErrorCode::kShapeMismatch,
          "RoI features must be [M, C, H, W], got " + shape_string(rois.shape()));
  const TokenSequence tokens = roi_to_tokens(rois, module);
  const TokenSequence encoded = transformer_encoder(tokens, module, trace);
  const Tensor enhanced = tokens_to_roi(encoded, module);
  const Tensor context = global_context(pyramid, module.context);
  return fuse_features(rois, enhanced, context);
}

}  // namespace arctext::inter

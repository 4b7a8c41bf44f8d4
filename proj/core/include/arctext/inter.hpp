#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "arctext/tensor.hpp"

/// Instance-level context for the mask branch.
///
/// Each RoI feature is reduced to a token (1x1 conv, adaptive max pool,
/// flatten), the M tokens of an image pass through a post-norm transformer
/// encoder without positional encoding, and the result is recovered to RoI
/// resolution (reshape, bilinear upsample, 1x1 conv). A global context
/// vector pooled from every pyramid level is added together with the
/// original RoI features.
namespace arctext::inter {

struct Config {
  std::size_t channels = 256;
  std::size_t reduced_channels = 32;
  std::size_t roi_h = 14;
  std::size_t roi_w = 14;
  std::size_t pooled_h = 3;
  std::size_t pooled_w = 3;
  std::size_t layers = 3;
  std::size_t heads = 4;
  /// 0 selects 4 * d_model.
  std::size_t ffn_hidden = 0;
  /// Input channels of each pyramid level seen by the global context branch.
  std::vector<std::size_t> pyramid_channels{256, 256, 256, 256};

  std::size_t d_model() const { return pooled_h * pooled_w * reduced_channels; }
  std::size_t hidden() const { return ffn_hidden == 0 ? 4 * d_model() : ffn_hidden; }
  std::size_t head_dim() const { return d_model() / heads; }

  void validate() const;
  bool operator==(const Config&) const = default;
};

struct EncoderLayer {
  // Projections are [d_in, d_out] for use with arctext::linear.
  Tensor query_w, query_b;
  Tensor key_w, key_b;
  Tensor value_w, value_b;
  Tensor out_w, out_b;
  Tensor norm1_gamma, norm1_beta;
  Tensor ffn1_w, ffn1_b;
  Tensor ffn2_w, ffn2_b;
  Tensor norm2_gamma, norm2_beta;

  bool operator==(const EncoderLayer&) const = default;
};

struct Module {
  Config config;
  Conv2dKernel reduce;                  // [C0, C, 1, 1]
  std::vector<EncoderLayer> layers;
  Conv2dKernel recover;                 // [C, C0, 1, 1]
  std::vector<Conv2dKernel> context;    // per level [C, C_l, 1, 1]

  /// All weights and biases zero, layer-norm gains one.
  static Module zeros(const Config& config);
  static Module random(const Config& config, std::uint64_t seed);

  void validate() const;
  std::size_t parameter_count() const;
};

std::size_t parameter_count(const Config& config);

/// M instance tokens of width d_model, one per row.
struct TokenSequence {
  Tensor tokens;

  std::size_t count() const { return tokens.dim(0); }
  std::size_t width() const { return tokens.dim(1); }
};

/// Attention maps recorded per layer and head, each [M, M].
struct EncoderTrace {
  std::vector<std::vector<Tensor>> attention;
};

/// Stacks per-instance [C, H, W] features into [M, C, H, W]. An empty list
/// has no tensor representation and throws kEmptyProposalSet.
Tensor stack_instances(std::span<const Tensor> instances);

/// f [M, C, H, W] -> tokens [M, h*w*C0].
TokenSequence roi_to_tokens(const Tensor& rois, const Module& module);

/// Multi-head self-attention over one token sequence [M, d].
Tensor self_attention(const Tensor& tokens, const EncoderLayer& layer, std::size_t heads,
                      std::vector<Tensor>* attention = nullptr);

Tensor encoder_layer_forward(const Tensor& tokens, const EncoderLayer& layer,
                             std::size_t heads, std::vector<Tensor>* attention = nullptr);

TokenSequence transformer_encoder(const TokenSequence& tokens, const Module& module,
                                  EncoderTrace* trace = nullptr);

/// tokens [M, h*w*C0] -> [M, C, H, W].
Tensor tokens_to_roi(const TokenSequence& tokens, const Module& module);

/// Sum over levels of the spatial mean of conv1x1_l(P_l).
Tensor global_context(std::span<const Tensor> pyramid, std::span<const Conv2dKernel> convs);

/// out[m,c,y,x] = rois + enhanced + context[c].
Tensor fuse_features(const Tensor& rois, const Tensor& enhanced, const Tensor& context);

Tensor forward(const Tensor& rois, std::span<const Tensor> pyramid, const Module& module,
               EncoderTrace* trace = nullptr);

}  // namespace arctext::inter

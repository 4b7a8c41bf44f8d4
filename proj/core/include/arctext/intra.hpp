#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "arctext/tensor.hpp"

/// Multi-receptive-field convolution cascade applied to each feature map.
///
/// Three blocks run in sequence. Each block sums a vertical (k x 1), a
/// horizontal (1 x k) and a square (k x k) convolution of its input, so the
/// cascade contains one path per choice of branch in every block. A residual
/// connection adds the module input to the output of the last block.
namespace arctext::intra {

enum class Activation { kNone, kRelu };

struct BlockConfig {
  std::size_t kernel = 3;
  std::size_t channels = 1;
  Activation activation = Activation::kNone;

  void validate() const;
};

struct Config {
  std::array<BlockConfig, 3> blocks;
  bool residual = true;

  /// Kernel sequence 7, 5, 3 at the given width, linear blocks.
  static Config standard(std::size_t channels,
                         Activation activation = Activation::kNone);

  void validate() const;
};

struct BlockWeights {
  Conv2dKernel vertical;    // k x 1
  Conv2dKernel horizontal;  // 1 x k
  Conv2dKernel square;      // k x k

  bool operator==(const BlockWeights&) const = default;
};

struct Module {
  Config config;
  std::array<BlockWeights, 3> blocks;

  static Module zeros(const Config& config);
  /// Uniform fan-in scaled weights, biases drawn the same way.
  static Module random(const Config& config, std::uint64_t seed);

  void validate() const;
};

/// act(vertical(x) + horizontal(x) + square(x)).
Tensor block_forward(const Tensor& x, const BlockConfig& config,
                     const BlockWeights& weights);

/// Full cascade. The last block's activation is applied after the residual
/// add when the residual connection is enabled.
Tensor forward(const Tensor& x, const Module& module);

/// Applies the module to every pyramid level. One module means the weights
/// are shared across levels; otherwise there must be one module per level.
std::vector<Tensor> forward_pyramid(std::span<const Tensor> levels,
                                    std::span<const Module> modules);

/// Number of scalar weights and biases.
std::size_t parameter_count(const Config& config);

}  // namespace arctext::intra

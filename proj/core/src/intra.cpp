#include "arctext/intra.hpp"

#include <cmath>

#include "arctext/random.hpp"

namespace arctext::intra {
namespace {

Tensor apply(Tensor x, Activation activation) {
  return activation == Activation::kRelu ? relu(std::move(x)) : x;
}

Conv2dKernel random_kernel(Rng& rng, std::size_t channels, std::size_t kh, std::size_t kw) {
  Conv2dKernel k = Conv2dKernel::zeros(channels, channels, kh, kw);
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels * kh * kw));
  for (double& v : k.weights.data()) v = rng.uniform(-bound, bound);
  for (double& v : k.bias.data()) v = rng.uniform(-bound, bound);
  return k;
}

void check_kernel(const Conv2dKernel& k, std::size_t channels, std::size_t kh,
                  std::size_t kw, const char* branch) {
  k.validate();
  require(k.out_channels() == channels && k.in_channels() == channels &&
              k.kernel_h() == kh && k.kernel_w() == kw,
          ErrorCode::kShapeMismatch,
          std::string("intra block ") + branch + " kernel has shape " +
              shape_string(k.weights.shape()) + ", expected " +
              shape_string({channels, channels, kh, kw}));
}

}  // namespace

void BlockConfig::validate() const {
  require(channels >= 1, ErrorCode::kInvalidConfig, "intra block channels must be positive");
  require(kernel >= 1 && kernel % 2 == 1, ErrorCode::kInvalidConfig,
          "intra block kernel must be odd and positive, got " + std::to_string(kernel));
}

Config Config::standard(std::size_t channels, Activation activation) {
  Config cfg;
  const std::array<std::size_t, 3> kernels{7, 5, 3};
  for (std::size_t i = 0; i < 3; ++i) cfg.blocks[i] = {kernels[i], channels, activation};
  return cfg;
}

void Config::validate() const {
  for (const auto& b : blocks) b.validate();
  for (const auto& b : blocks) {
    require(b.channels == blocks[0].channels, ErrorCode::kInvalidConfig,
            "intra blocks must share one channel width");
  }
}

Module Module::zeros(const Config& config) {
  config.validate();
  Module m{config, {}};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto c = config.blocks[i].channels;
    const auto k = config.blocks[i].kernel;
    m.blocks[i] = {Conv2dKernel::zeros(c, c, k, 1), Conv2dKernel::zeros(c, c, 1, k),
                   Conv2dKernel::zeros(c, c, k, k)};
  }
  return m;
}

Module Module::random(const Config& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Module m{config, {}};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto c = config.blocks[i].channels;
    const auto k = config.blocks[i].kernel;
    m.blocks[i].vertical = random_kernel(rng, c, k, 1);
    m.blocks[i].horizontal = random_kernel(rng, c, 1, k);
    m.blocks[i].square = random_kernel(rng, c, k, k);
  }
  return m;
}

void Module::validate() const {
  config.validate();
  for (std::size_t i = 0; i < 3; ++i) {
    const auto c = config.blocks[i].channels;
    const auto k = config.blocks[i].kernel;
    check_kernel(blocks[i].vertical, c, k, 1, "vertical");
    check_kernel(blocks[i].horizontal, c, 1, k, "horizontal");
    check_kernel(blocks[i].square, c, k, k, "square");
  }
}

namespace {

Tensor branch_sum(const Tensor& x, const BlockConfig& config, const BlockWeights& weights) {
  config.validate();
  require(x.rank() == 3 && x.dim(0) == config.channels, ErrorCode::kShapeMismatch,
          "intra block expects " + std::to_string(config.channels) +
              " channels, input is " + shape_string(x.shape()));
  Tensor sum = conv2d(x, weights.vertical);
  const Tensor h = conv2d(x, weights.horizontal);
  const Tensor s = conv2d(x, weights.square);
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += h[i] + s[i];
  return sum;
}

}  // namespace

Tensor block_forward(const Tensor& x, const BlockConfig& config, const BlockWeights& weights) {
  return apply(branch_sum(x, config, weights), config.activation);
}

Tensor forward(const Tensor& x, const Module& module) {
  module.validate();
  const auto& cfg = module.config;
  Tensor y = block_forward(x, cfg.blocks[0], module.blocks[0]);
  y = block_forward(y, cfg.blocks[1], module.blocks[1]);
  if (!cfg.residual) return block_forward(y, cfg.blocks[2], module.blocks[2]);
  Tensor fused = branch_sum(y, cfg.blocks[2], module.blocks[2]);
  return apply(add(fused, x), cfg.blocks[2].activation);
}

std::vector<Tensor> forward_pyramid(std::span<const Tensor> levels,
                                    std::span<const Module> modules) {
  require(!modules.empty(), ErrorCode::kInvalidArgument, "no intra modules supplied");
  require(modules.size() == 1 || modules.size() == levels.size(), ErrorCode::kInvalidArgument,
          "per-level intra weights: " + std::to_string(modules.size()) + " modules for " +
              std::to_string(levels.size()) + " levels");
  std::vector<Tensor> out;
  out.reserve(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l)
    out.push_back(forward(levels[l], modules[modules.size() == 1 ? 0 : l]));
  return out;
}

std::size_t parameter_count(const Config& config) {
  config.validate();
  std::size_t total = 0;
  for (const auto& b : config.blocks) {
    const std::size_t c = b.channels, k = b.kernel;
    total += (k + k + k * k) * c * c + 3 * c;
  }
  return total;
}

}  // namespace arctext::intra

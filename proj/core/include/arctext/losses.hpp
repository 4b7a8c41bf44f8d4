#pragma once

#include <optional>
#include <span>
#include <vector>

#include "arctext/tensor.hpp"

/// Reference detector losses with analytic gradients. Every loss is the mean
/// over elements (over samples for softmax cross-entropy). An optional
/// per-sample weight vector, indexed by the leading axis, scales each
/// sample's contribution; this is how pseudo-label weights enter training.
namespace arctext::loss {

struct LossResult {
  double value = 0.0;
  Tensor gradient;  // d value / d prediction
};

LossResult smooth_l1(const Tensor& pred, const Tensor& target, double beta = 1.0,
                     std::optional<std::span<const double>> sample_weights = std::nullopt);

inline constexpr double kProbabilityClamp = 1e-7;

/// Predictions are clamped to [1e-7, 1 - 1e-7]; targets must be 0 or 1.
LossResult binary_cross_entropy(
    const Tensor& pred, const Tensor& target,
    std::optional<std::span<const double>> sample_weights = std::nullopt);

/// logits [..., K] with one class index per row.
LossResult softmax_cross_entropy(
    const Tensor& logits, std::span<const std::size_t> target,
    std::optional<std::span<const double>> sample_weights = std::nullopt);

struct BranchLoss {
  LossResult cls;
  LossResult reg;
};

/// L = L_rpn + L_box + L_mask with each branch term the sum of its parts.
double total_loss(const BranchLoss& rpn, const BranchLoss& box, const LossResult& mask);

}  // namespace arctext::loss

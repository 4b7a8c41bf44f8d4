#include "arctext/losses.hpp"

#include <algorithm>
#include <cmath>

namespace arctext::loss {
namespace {

// Weight of flat element i when weights are given per leading-axis sample.
class SampleWeights {
 public:
  SampleWeights(const Tensor& shape_of, std::size_t rows,
                std::optional<std::span<const double>> weights)
      : weights_(weights), per_sample_(rows ? shape_of.size() / rows : 1) {
    if (weights_) {
      require(weights_->size() == rows, ErrorCode::kShapeMismatch,
              "expected " + std::to_string(rows) + " sample weights, got " +
                  std::to_string(weights_->size()));
      for (double w : *weights_)
        require(std::isfinite(w) && w >= 0.0, ErrorCode::kInvalidArgument,
                "sample weights must be finite and non-negative");
    }
  }

  double operator()(std::size_t element) const {
    return weights_ ? (*weights_)[element / per_sample_] : 1.0;
  }

 private:
  std::optional<std::span<const double>> weights_;
  std::size_t per_sample_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          std::string(what) + ": prediction " + shape_string(a.shape()) + " vs target " +
              shape_string(b.shape()));
}

}  // namespace

LossResult smooth_l1(const Tensor& pred, const Tensor& target, double beta,
                     std::optional<std::span<const double>> sample_weights) {
  require_same_shape(pred, target, "smooth_l1");
  require(beta > 0.0, ErrorCode::kInvalidArgument, "smooth_l1 beta must be positive");
  const SampleWeights w(pred, pred.dim(0), sample_weights);
  const double n = static_cast<double>(pred.size());
  LossResult r{0.0, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    const double ad = std::abs(d);
    const double value = ad < beta ? 0.5 * d * d / beta : ad - 0.5 * beta;
    const double grad = ad < beta ? d / beta : (d > 0.0 ? 1.0 : -1.0);
    r.value += w(i) * value;
    r.gradient[i] = w(i) * grad / n;
  }
  r.value /= n;
  return r;
}

LossResult binary_cross_entropy(const Tensor& pred, const Tensor& target,
                                std::optional<std::span<const double>> sample_weights) {
  require_same_shape(pred, target, "binary_cross_entropy");
  const SampleWeights w(pred, pred.dim(0), sample_weights);
  const double n = static_cast<double>(pred.size());
  LossResult r{0.0, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = target[i];
    require(t == 0.0 || t == 1.0, ErrorCode::kInvalidArgument,
            "binary_cross_entropy targets must be 0 or 1");
    require(std::isfinite(pred[i]), ErrorCode::kInvalidArgument,
            "binary_cross_entropy prediction is not finite");
    const double p = std::clamp(pred[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    r.value += w(i) * -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    // The clamp is flat outside its range.
    const bool inside = pred[i] > kProbabilityClamp && pred[i] < 1.0 - kProbabilityClamp;
    r.gradient[i] = inside ? w(i) * (p - t) / (p * (1.0 - p)) / n : 0.0;
  }
  r.value /= n;
  return r;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> target,
                                 std::optional<std::span<const double>> sample_weights) {
  const std::size_t k = logits.shape().back();
  require(k >= 2, ErrorCode::kInvalidArgument, "softmax cross-entropy needs at least 2 classes");
  const std::size_t rows = logits.size() / k;
  require(target.size() == rows, ErrorCode::kShapeMismatch,
          "expected " + std::to_string(rows) + " class targets, got " +
              std::to_string(target.size()));
  const SampleWeights weight_of(logits, rows, sample_weights);
  const Tensor probs = softmax(logits);
  LossResult r{0.0, Tensor(logits.shape())};
  const double n = static_cast<double>(rows);
  for (std::size_t row = 0; row < rows; ++row) {
    require(target[row] < k, ErrorCode::kInvalidArgument,
            "class index " + std::to_string(target[row]) + " out of range for " +
                std::to_string(k) + " classes");
    const double w = weight_of(row * k);
    const double* z = logits.data().data() + row * k;
    const double peak = *std::max_element(z, z + k);
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) total += std::exp(z[c] - peak);
    const double log_prob = z[target[row]] - peak - std::log(total);
    r.value += w * -log_prob;
    for (std::size_t c = 0; c < k; ++c) {
      const double onehot = c == target[row] ? 1.0 : 0.0;
      r.gradient[row * k + c] = w * (probs[row * k + c] - onehot) / n;
    }
  }
  r.value /= n;
  return r;
}

double total_loss(const BranchLoss& rpn, const BranchLoss& box, const LossResult& mask) {
  return rpn.cls.value + rpn.reg.value + box.cls.value + box.reg.value + mask.value;
}

}  // namespace arctext::loss

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "arctext/error.hpp"

namespace arctext {

/// Dense row-major tensor of doubles.
///
/// Rank is at least 1 and every extent is at least 1; a default-constructed
/// tensor is the single-element tensor of shape [1].
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor();
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor filled(Shape shape, double value) { return Tensor(std::move(shape), value); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  template <typename... Idx>
  double operator()(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  double& operator()(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  /// Slice along the leading axis.
  Tensor slice(std::size_t index) const;
  void set_slice(std::size_t index, const Tensor& value);

  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> idx) const;

  Shape shape_;
  std::vector<double> data_;
};

std::string shape_string(const Tensor::Shape& shape);

/// Convolution weights [out, in, kh, kw] plus bias [out]. Kernel extents are
/// odd so that same-size zero padding is centred.
struct Conv2dKernel {
  Tensor weights;
  Tensor bias;

  Conv2dKernel() = default;
  Conv2dKernel(Tensor w, Tensor b);

  static Conv2dKernel zeros(std::size_t out_channels, std::size_t in_channels,
                            std::size_t kh, std::size_t kw);

  std::size_t out_channels() const { return weights.dim(0); }
  std::size_t in_channels() const { return weights.dim(1); }
  std::size_t kernel_h() const { return weights.dim(2); }
  std::size_t kernel_w() const { return weights.dim(3); }
  std::size_t parameter_count() const { return weights.size() + bias.size(); }

  void validate() const;

  bool operator==(const Conv2dKernel&) const = default;
};

/// Same-size convolution with zero padding: x [C_in,H,W] -> [C_out,H,W].
Tensor conv2d(const Tensor& x, const Conv2dKernel& kernel);

/// Max over bins [floor(i*H/outH), ceil((i+1)*H/outH)) per axis.
Tensor adaptive_max_pool(const Tensor& x, std::size_t out_h, std::size_t out_w);

/// Half-pixel-centre bilinear resize, source coordinates clamped to the edge.
Tensor bilinear_upsample(const Tensor& x, std::size_t out_h, std::size_t out_w);

/// Spatial mean of [C,H,W] -> [C].
Tensor global_average_pool(const Tensor& x);

/// Affine map along the last axis; weight is [d_in, d_out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor softmax(const Tensor& x);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

Tensor relu(Tensor x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(Tensor x, double factor);

}  // namespace arctext

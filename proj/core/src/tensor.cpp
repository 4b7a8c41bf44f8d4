#include "arctext/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace arctext {
namespace {

std::size_t element_count(const Tensor::Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void validate_shape(const Tensor::Shape& shape) {
  require(!shape.empty(), ErrorCode::kShapeMismatch, "tensor rank must be at least 1");
  for (std::size_t i = 0; i < shape.size(); ++i) {
    require(shape[i] >= 1, ErrorCode::kShapeMismatch,
            "tensor extent " + std::to_string(i) + " is zero in " + shape_string(shape));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  require(t.rank() == rank, ErrorCode::kShapeMismatch,
          std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
              shape_string(t.shape()));
}

}  // namespace

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kEmptyProposalSet: return "empty proposal set";
    case ErrorCode::kDegenerateGeometry: return "degenerate geometry";
    case ErrorCode::kInvalidConfig: return "invalid config";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kIdMismatch: return "image id mismatch";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown";
}

std::string shape_string(const Tensor::Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor() : shape_{1}, data_(1, 0.0) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  require(element_count(shape_) == data_.size(), ErrorCode::kShapeMismatch,
          "tensor data length " + std::to_string(data_.size()) +
              " does not match shape " + shape_string(shape_));
}

std::size_t Tensor::dim(std::size_t axis) const {
  require(axis < shape_.size(), ErrorCode::kShapeMismatch,
          "axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
  return shape_[axis];
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> idx) const {
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : idx) {
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::slice(std::size_t index) const {
  require(index < shape_[0], ErrorCode::kShapeMismatch, "slice index out of range");
  Shape inner(shape_.begin() + 1, shape_.end());
  if (inner.empty()) inner = {1};
  const std::size_t stride = data_.size() / shape_[0];
  std::vector<double> values(data_.begin() + static_cast<std::ptrdiff_t>(index * stride),
                             data_.begin() + static_cast<std::ptrdiff_t>((index + 1) * stride));
  return Tensor(std::move(inner), std::move(values));
}

void Tensor::set_slice(std::size_t index, const Tensor& value) {
  require(index < shape_[0], ErrorCode::kShapeMismatch, "slice index out of range");
  const std::size_t stride = data_.size() / shape_[0];
  require(value.size() == stride, ErrorCode::kShapeMismatch,
          "slice of shape " + shape_string(value.shape()) + " does not fit " +
              shape_string(shape_));
  std::copy(value.data().begin(), value.data().end(),
            data_.begin() + static_cast<std::ptrdiff_t>(index * stride));
}

Conv2dKernel::Conv2dKernel(Tensor w, Tensor b) : weights(std::move(w)), bias(std::move(b)) {
  validate();
}

Conv2dKernel Conv2dKernel::zeros(std::size_t out_channels, std::size_t in_channels,
                                 std::size_t kh, std::size_t kw) {
  return Conv2dKernel(Tensor::zeros({out_channels, in_channels, kh, kw}),
                      Tensor::zeros({out_channels}));
}

void Conv2dKernel::validate() const {
  require_rank(weights, 4, "conv2d weights");
  require_rank(bias, 1, "conv2d bias");
  require(bias.dim(0) == weights.dim(0), ErrorCode::kShapeMismatch,
          "conv2d bias length " + std::to_string(bias.dim(0)) +
              " does not match out channels " + std::to_string(weights.dim(0)));
  require(weights.dim(2) % 2 == 1 && weights.dim(3) % 2 == 1, ErrorCode::kShapeMismatch,
          "conv2d kernel extents must be odd, got " + shape_string(weights.shape()));
}

Tensor conv2d(const Tensor& x, const Conv2dKernel& kernel) {
  require_rank(x, 3, "conv2d input");
  kernel.validate();
  const std::size_t cin = x.dim(0);
  require(cin == kernel.in_channels(), ErrorCode::kShapeMismatch,
          "conv2d channel dimension: input has " + std::to_string(cin) +
              ", kernel expects " + std::to_string(kernel.in_channels()));
  const std::size_t h = x.dim(1), w = x.dim(2);
  const std::size_t cout = kernel.out_channels();
  const std::size_t kh = kernel.kernel_h(), kw = kernel.kernel_w();
  const auto ph = static_cast<std::ptrdiff_t>(kh / 2);
  const auto pw = static_cast<std::ptrdiff_t>(kw / 2);
  const auto ih = static_cast<std::ptrdiff_t>(h);
  const auto iw = static_cast<std::ptrdiff_t>(w);

  Tensor out({cout, h, w});
  const auto in = x.data();
  const auto wt = kernel.weights.data();
  auto dst = out.data();
  for (std::size_t o = 0; o < cout; ++o) {
    double* plane = dst.data() + o * h * w;
    std::fill(plane, plane + h * w, kernel.bias[o]);
    for (std::size_t c = 0; c < cin; ++c) {
      const double* src = in.data() + c * h * w;
      for (std::size_t dy = 0; dy < kh; ++dy) {
        for (std::size_t dx = 0; dx < kw; ++dx) {
          const double coeff = wt[((o * cin + c) * kh + dy) * kw + dx];
          const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(dy) - ph;
          const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(dx) - pw;
          const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -oy);
          const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(ih, ih - oy);
          const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -ox);
          const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(iw, iw - ox);
          for (std::ptrdiff_t y = y0; y < y1; ++y) {
            double* row = plane + y * iw;
            const double* srow = src + (y + oy) * iw + ox;
            for (std::ptrdiff_t xx = x0; xx < x1; ++xx) row[xx] += coeff * srow[xx];
          }
        }
      }
    }
  }
  return out;
}

Tensor adaptive_max_pool(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  require_rank(x, 3, "adaptive_max_pool input");
  require(out_h > 0 && out_w > 0, ErrorCode::kInvalidArgument,
          "adaptive_max_pool target size must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  require(out_h <= h && out_w <= w, ErrorCode::kInvalidArgument,
          "adaptive_max_pool target larger than input");
  Tensor out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < out_h; ++i) {
      const std::size_t ys = i * h / out_h;
      const std::size_t ye = ((i + 1) * h + out_h - 1) / out_h;
      for (std::size_t j = 0; j < out_w; ++j) {
        const std::size_t xs = j * w / out_w;
        const std::size_t xe = ((j + 1) * w + out_w - 1) / out_w;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t y = ys; y < ye; ++y)
          for (std::size_t xx = xs; xx < xe; ++xx) best = std::max(best, x(ch, y, xx));
        out(ch, i, j) = best;
      }
    }
  }
  return out;
}

namespace {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  const double last = static_cast<double>(in - 1);
  for (std::size_t d = 0; d < out; ++d) {
    double s = (static_cast<double>(d) + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, last);
    const auto lo = static_cast<std::size_t>(std::floor(s));
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[d] = {lo, hi, s - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Tensor bilinear_upsample(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  require_rank(x, 3, "bilinear_upsample input");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  require(out_h >= h && out_w >= w, ErrorCode::kInvalidArgument,
          "bilinear_upsample target smaller than input");
  const auto ty = bilinear_taps(h, out_h);
  const auto tx = bilinear_taps(w, out_w);
  Tensor out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < out_h; ++i) {
      const Tap& a = ty[i];
      for (std::size_t j = 0; j < out_w; ++j) {
        const Tap& b = tx[j];
        const double top = x(ch, a.lo, b.lo) * (1.0 - b.frac) + x(ch, a.lo, b.hi) * b.frac;
        const double bot = x(ch, a.hi, b.lo) * (1.0 - b.frac) + x(ch, a.hi, b.hi) * b.frac;
        out(ch, i, j) = top * (1.0 - a.frac) + bot * a.frac;
      }
    }
  }
  return out;
}

Tensor global_average_pool(const Tensor& x) {
  require_rank(x, 3, "global_average_pool input");
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  Tensor out({c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (std::size_t i = 0; i < hw; ++i) sum += x[ch * hw + i];
    out[ch] = sum / static_cast<double>(hw);
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "linear weight");
  require_rank(bias, 1, "linear bias");
  const std::size_t din = weight.dim(0), dout = weight.dim(1);
  require(x.shape().back() == din, ErrorCode::kShapeMismatch,
          "linear input dimension " + std::to_string(x.shape().back()) +
              " does not match weight rows " + std::to_string(din));
  require(bias.dim(0) == dout, ErrorCode::kShapeMismatch,
          "linear bias length does not match weight columns");
  Tensor::Shape shape = x.shape();
  shape.back() = dout;
  Tensor out(shape);
  const std::size_t rows = x.size() / din;
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = out.data().data() + r * dout;
    for (std::size_t o = 0; o < dout; ++o) dst[o] = bias[o];
    for (std::size_t i = 0; i < din; ++i) {
      const double v = x[r * din + i];
      const double* wrow = weight.data().data() + i * dout;
      for (std::size_t o = 0; o < dout; ++o) dst[o] += v * wrow[o];
    }
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  const std::size_t n = x.shape().back();
  Tensor out(x.shape());
  const std::size_t rows = x.size() / n;
  for (std::size_t r = 0; r < rows; ++r) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = x[r * n + i];
      require(!std::isnan(v), ErrorCode::kInvalidArgument, "softmax input contains NaN");
      peak = std::max(peak, v);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(x[r * n + i] - peak);
      out[r * n + i] = e;
      total += e;
    }
    for (std::size_t i = 0; i < n; ++i) out[r * n + i] /= total;
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t d = x.shape().back();
  require(gamma.size() == d && beta.size() == d, ErrorCode::kShapeMismatch,
          "layer_norm affine parameters must have length " + std::to_string(d));
  Tensor out(x.shape());
  const std::size_t rows = x.size() / d;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = x.data().data() + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += src[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i)
      out[r * d + i] = (src[i] - mean) * inv * gamma[i] + beta[i];
  }
  return out;
}

Tensor relu(Tensor x) {
  for (double& v : x.data()) v = std::max(v, 0.0);
  return x;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          "add: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor scale(Tensor x, double factor) {
  for (double& v : x.data()) v *= factor;
  return x;
}

}  // namespace arctext

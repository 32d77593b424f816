#include "core/tensor.hpp"

#include <cmath>
#include <sstream>

#include "core/common.hpp"
#include "core/gemm.hpp"

namespace nlr {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {
  for (std::size_t d : shape_)
    if (d == 0) throw_config("Tensor: zero dimension in shape " + shape_str(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_))
    throw_config("Tensor: data length " + std::to_string(data_.size()) +
                 " does not match shape " + shape_str(shape_));
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = value;
  return t;
}

Tensor Tensor::reshaped(Shape new_shape) const {
  if (shape_size(new_shape) != size())
    throw_internal("reshape: size mismatch " + shape_str(shape_) + " -> " + shape_str(new_shape));
  return Tensor(std::move(new_shape), data_);
}

void require_finite(const Tensor& t, const std::string& what) {
  const double* p = t.data();
  for (std::size_t i = 0, n = t.size(); i < n; ++i) {
    if (!std::isfinite(p[i]))
      throw_internal(what + ": non-finite value at flat index " + std::to_string(i));
  }
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b))
    throw_config(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                 shape_str(b.shape()));
}

template <typename F>
Tensor binary(const Tensor& a, const Tensor& b, const char* what, F f) {
  require_same_shape(a, b, what);
  Tensor out(a.shape());
  double* o = out.data();
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0, n = a.size(); i < n; ++i) o[i] = f(pa[i], pb[i]);
  require_finite(out, what);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  double* o = out.data();
  const double* pa = a.data();
  for (std::size_t i = 0, n = a.size(); i < n; ++i) o[i] = pa[i] * s;
  require_finite(out, "scale");
  return out;
}

Tensor map(const Tensor& a, const std::function<double(double)>& f) {
  Tensor out(a.shape());
  double* o = out.data();
  const double* pa = a.data();
  for (std::size_t i = 0, n = a.size(); i < n; ++i) o[i] = f(pa[i]);
  require_finite(out, "map");
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw_config("matmul: rank-2 tensors required, got " + shape_str(a.shape()) + " and " +
                 shape_str(b.shape()));
  if (a.dim(1) != b.dim(0))
    throw_config("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " vs " +
                 shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  gemm(false, false, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0, out.data(), n);
  require_finite(out, "matmul");
  return out;
}

void im2col(const double* img, std::size_t channels, std::size_t h, std::size_t w,
            std::size_t kh, std::size_t kw, std::size_t stride, std::size_t pad,
            std::size_t out_h, std::size_t out_w, double* col) {
  const std::size_t out_hw = out_h * out_w;
  std::size_t row = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* plane = img + c * h * w;
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj, ++row) {
        double* dst = col + row * out_hw;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(oy * stride + ki) - static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
            for (std::size_t ox = 0; ox < out_w; ++ox) *dst++ = 0.0;
            continue;
          }
          const double* src_row = plane + static_cast<std::size_t>(iy) * w;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * stride + kj) - static_cast<std::ptrdiff_t>(pad);
            *dst++ = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                         ? 0.0
                         : src_row[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, std::size_t channels, std::size_t h, std::size_t w,
                std::size_t kh, std::size_t kw, std::size_t stride, std::size_t pad,
                std::size_t out_h, std::size_t out_w, double* img) {
  const std::size_t out_hw = out_h * out_w;
  std::size_t row = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    double* plane = img + c * h * w;
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj, ++row) {
        const double* src = col + row * out_hw;
        for (std::size_t oy = 0; oy < out_h; ++oy, src += out_w) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(oy * stride + ki) - static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          double* dst_row = plane + static_cast<std::size_t>(iy) * w;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * stride + kj) - static_cast<std::ptrdiff_t>(pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w))
              dst_row[static_cast<std::size_t>(ix)] += src[ox];
          }
        }
      }
    }
  }
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t stride, std::size_t pad) {
  if (input.rank() != 4 || kernels.rank() != 4)
    throw_config("conv2d: expected NCHW input and FCKK kernels, got " + shape_str(input.shape()) +
                 " and " + shape_str(kernels.shape()));
  if (stride == 0) throw_config("conv2d: stride must be positive");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t f = kernels.dim(0), kc = kernels.dim(1), kh = kernels.dim(2), kw = kernels.dim(3);
  if (kc != c)
    throw_config("conv2d: kernel channels " + std::to_string(kc) + " do not match input channels " +
                 std::to_string(c));
  if (kh > h + 2 * pad || kw > w + 2 * pad)
    throw_config("conv2d: kernel larger than padded input");
  if ((h + 2 * pad - kh) % stride != 0 || (w + 2 * pad - kw) % stride != 0)
    throw_config("conv2d: non-integer output size for input " + shape_str(input.shape()) +
                 ", kernel " + shape_str(kernels.shape()) + ", stride " + std::to_string(stride) +
                 ", pad " + std::to_string(pad));
  const std::size_t out_h = (h + 2 * pad - kh) / stride + 1;
  const std::size_t out_w = (w + 2 * pad - kw) / stride + 1;
  const std::size_t patch = c * kh * kw;
  const std::size_t out_hw = out_h * out_w;

  Tensor out({n, f, out_h, out_w});
  std::vector<double> col(patch * out_hw);
  for (std::size_t i = 0; i < n; ++i) {
    im2col(input.data() + i * c * h * w, c, h, w, kh, kw, stride, pad, out_h, out_w, col.data());
    // [F x patch] * [patch x out_hw] -> [F x out_hw], written straight into NCHW.
    gemm(false, false, f, out_hw, patch, 1.0, kernels.data(), patch, col.data(), out_hw, 0.0,
         out.data() + i * f * out_hw, out_hw);
  }
  require_finite(out, "conv2d");
  return out;
}

Tensor sample_normal(RngStream& rng, Shape shape, double mean, double std) {
  if (std < 0.0) throw_config("sample_normal: negative std");
  Tensor out(std::move(shape));
  double* p = out.data();
  for (std::size_t i = 0, n = out.size(); i < n; ++i) p[i] = rng.next_normal(mean, std);
  require_finite(out, "sample_normal");
  return out;
}

}  // namespace nlr

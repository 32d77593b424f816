#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace nlr {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_size(const Shape& s);

// Dense n-dimensional array of doubles, flat row-major storage. NCHW order
// for image batches. Values produced by the operations below are always
// finite; an operation that would produce NaN/Inf throws instead.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> data);

  static Tensor full(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Index helpers for the common ranks.
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // Reinterpret the flat data under a new shape of equal size.
  Tensor reshaped(Shape new_shape) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Throws if any element of t is NaN or Inf; `what` names the operation.
void require_finite(const Tensor& t, const std::string& what);

// Elementwise operations. Binary ops require equal shapes and report both on
// mismatch. All results are finite-checked.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor map(const Tensor& a, const std::function<double(double)>& f);

// Matrix product of rank-2 tensors [m x k] * [k x n], double accumulation.
Tensor matmul(const Tensor& a, const Tensor& b);

// 2-D cross-correlation (the usual deep-learning "convolution"): input
// [N x C x H x W] with kernels [F x C x kh x kw], zero padding, output
// [N x F x H' x W'] where H' = (H + 2*pad - kh) / stride + 1. The output
// size must divide exactly; a fractional size is an error.
Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t stride, std::size_t pad);

// i.i.d. normal draws; std must be >= 0.
Tensor sample_normal(RngStream& rng, Shape shape, double mean, double std);

// im2col support shared with the conv layer. Writes the patch matrix for one
// image: rows = C*kh*kw, cols = out_h*out_w (column-major over output pixels).
void im2col(const double* img, std::size_t channels, std::size_t h, std::size_t w,
            std::size_t kh, std::size_t kw, std::size_t stride, std::size_t pad,
            std::size_t out_h, std::size_t out_w, double* col);

// Transposed scatter-add of a patch matrix back onto an image buffer.
void col2im_add(const double* col, std::size_t channels, std::size_t h, std::size_t w,
                std::size_t kh, std::size_t kw, std::size_t stride, std::size_t pad,
                std::size_t out_h, std::size_t out_w, double* img);

}  // namespace nlr

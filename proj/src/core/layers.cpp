#include "core/layers.hpp"

#include <cmath>

#include "core/common.hpp"
#include "core/gemm.hpp"

namespace nlr {

Tensor& ParamStore::add(const std::string& name, Tensor value, bool trainable) {
  if (index_.count(name)) throw_internal("ParamStore: duplicate parameter '" + name + "'");
  index_[name] = entries_.size();
  entries_.push_back({name, std::move(value), trainable});
  return entries_.back().value;
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) != 0; }

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw_internal("ParamStore: unknown parameter '" + name + "'");
  return entries_[it->second].value;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw_internal("ParamStore: unknown parameter '" + name + "'");
  return entries_[it->second].value;
}

bool ParamStore::trainable(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw_internal("ParamStore: unknown parameter '" + name + "'");
  return entries_[it->second].trainable;
}

std::size_t ParamStore::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (!trainable_only || e.trainable) n += e.value.size();
  return n;
}

GradientStore GradientStore::zeros_like(const ParamStore& params) {
  GradientStore g;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    g.index_[e.name] = g.entries_.size();
    g.entries_.push_back({e.name, Tensor(e.value.shape()), true});
  }
  return g;
}

bool GradientStore::has(const std::string& name) const { return index_.count(name) != 0; }

Tensor& GradientStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw_internal("GradientStore: unknown gradient '" + name + "'");
  return entries_[it->second].value;
}

const Tensor& GradientStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw_internal("GradientStore: unknown gradient '" + name + "'");
  return entries_[it->second].value;
}

void GradientStore::set(const std::string& name, Tensor value) {
  Tensor& slot = at(name);
  if (!slot.same_shape(value))
    throw_internal("GradientStore: shape mismatch for '" + name + "': slot " +
                   shape_str(slot.shape()) + " vs value " + shape_str(value.shape()));
  slot = std::move(value);
}

const Tensor& LayerCache::get(const std::string& k) const {
  auto it = slots.find(k);
  if (it == slots.end()) throw_internal("LayerCache: missing slot '" + k + "'");
  return it->second;
}

bool Layer::same_branches(const LayerCache&, const LayerCache&) const { return true; }

namespace {

double init_std(Init init, std::size_t fan_in, std::size_t fan_out) {
  switch (init) {
    case Init::xavier: return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    case Init::msra: return std::sqrt(2.0 / static_cast<double>(fan_in));
  }
  throw_internal("init_std: bad enum value");
}

void add_bias_rows(Tensor& y, const Tensor& b) {
  const std::size_t n = y.dim(0), f = y.dim(1);
  double* py = y.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) py[i * f + j] += pb[j];
}

}  // namespace

// ---------------------------------------------------------------- Dense

DenseLayer::DenseLayer(std::string name, std::size_t in_features, std::size_t units)
    : Layer(std::move(name)), in_(in_features), units_(units) {
  if (units_ == 0) throw_config(this->name() + ": dense layer needs at least one unit");
}

Shape DenseLayer::out_shape(const Shape& in) const {
  if (in.size() != 1 || in[0] != in_)
    throw_config(name() + ": expected flat input of " + std::to_string(in_) + " features, got " +
                 shape_str(in));
  return {units_};
}

void DenseLayer::register_params(ParamStore& params, Init init, RngStream& rng) {
  const double std = init_std(init, in_, units_);
  params.add(weight_name(), sample_normal(rng, {in_, units_}, 0.0, std));
  params.add(bias_name(), Tensor({units_}));
}

Tensor DenseLayer::forward(const Tensor& x, ParamStore& params, LayerCache& cache, Mode mode) const {
  const Tensor& w = params.at(weight_name());
  Tensor y = matmul(x, w);
  add_bias_rows(y, params.at(bias_name()));
  require_finite(y, name());
  if (mode != Mode::infer) cache.put("x", x);
  return y;
}

Tensor DenseLayer::backward(const Tensor& dy, const ParamStore& params, const LayerCache& cache,
                            GradientStore& grads) const {
  const Tensor& x = cache.get("x");
  const Tensor& w = params.at(weight_name());
  const std::size_t n = x.dim(0);

  Tensor dw({in_, units_});
  gemm(true, false, in_, units_, n, 1.0, x.data(), in_, dy.data(), units_, 0.0, dw.data(), units_);
  Tensor db({units_});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < units_; ++j) db[j] += dy.at(i, j);
  Tensor dx({n, in_});
  gemm(false, true, n, in_, units_, 1.0, dy.data(), units_, w.data(), units_, 0.0, dx.data(), in_);

  require_finite(dw, name() + " backward");
  require_finite(dx, name() + " backward");
  grads.set(weight_name(), std::move(dw));
  grads.set(bias_name(), std::move(db));
  return dx;
}

// ---------------------------------------------------------------- Conv2d

Conv2dLayer::Conv2dLayer(std::string name, std::size_t in_channels, std::size_t filters,
                         std::size_t kh, std::size_t kw, std::size_t stride, std::size_t pad,
                         bool use_bias)
    : Layer(std::move(name)),
      in_c_(in_channels),
      filters_(filters),
      kh_(kh),
      kw_(kw),
      stride_(stride),
      pad_(pad),
      use_bias_(use_bias) {
  if (filters_ == 0 || kh_ == 0 || kw_ == 0 || stride_ == 0)
    throw_config(this->name() + ": bad conv2d geometry");
}

Shape Conv2dLayer::out_shape(const Shape& in) const {
  if (in.size() != 3 || in[0] != in_c_)
    throw_config(name() + ": expected CxHxW input with " + std::to_string(in_c_) +
                 " channels, got " + shape_str(in));
  const std::size_t h = in[1], w = in[2];
  if (kh_ > h + 2 * pad_ || kw_ > w + 2 * pad_)
    throw_config(name() + ": kernel larger than padded input");
  if ((h + 2 * pad_ - kh_) % stride_ != 0 || (w + 2 * pad_ - kw_) % stride_ != 0)
    throw_config(name() + ": non-integer output size");
  return {filters_, (h + 2 * pad_ - kh_) / stride_ + 1, (w + 2 * pad_ - kw_) / stride_ + 1};
}

void Conv2dLayer::register_params(ParamStore& params, Init init, RngStream& rng) {
  const std::size_t fan_in = in_c_ * kh_ * kw_;
  const std::size_t fan_out = filters_ * kh_ * kw_;
  const double std = init_std(init, fan_in, fan_out);
  params.add(weight_name(), sample_normal(rng, {filters_, in_c_, kh_, kw_}, 0.0, std));
  if (use_bias_) params.add(bias_name(), Tensor({filters_}));
}

Tensor Conv2dLayer::forward(const Tensor& x, ParamStore& params, LayerCache& cache, Mode mode) const {
  const Tensor& k = params.at(weight_name());
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t out_h = (h + 2 * pad_ - kh_) / stride_ + 1;
  const std::size_t out_w = (w + 2 * pad_ - kw_) / stride_ + 1;
  const std::size_t patch = in_c_ * kh_ * kw_;
  const std::size_t out_hw = out_h * out_w;

  const bool keep = mode != Mode::infer;
  Tensor col(keep ? Shape{n, patch, out_hw} : Shape{1, patch, out_hw});
  Tensor y({n, filters_, out_h, out_w});
  for (std::size_t i = 0; i < n; ++i) {
    double* col_i = col.data() + (keep ? i * patch * out_hw : 0);
    im2col(x.data() + i * in_c_ * h * w, in_c_, h, w, kh_, kw_, stride_, pad_, out_h, out_w, col_i);
    gemm(false, false, filters_, out_hw, patch, 1.0, k.data(), patch, col_i, out_hw, 0.0,
         y.data() + i * filters_ * out_hw, out_hw);
  }
  if (use_bias_) {
    const Tensor& b = params.at(bias_name());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < filters_; ++f) {
        const double bf = b[f];
        double* dst = y.data() + (i * filters_ + f) * out_hw;
        for (std::size_t p = 0; p < out_hw; ++p) dst[p] += bf;
      }
  }
  require_finite(y, name());
  if (keep) {
    cache.put("x", x);
    cache.put("col", std::move(col));
  }
  return y;
}

Tensor Conv2dLayer::backward(const Tensor& dy, const ParamStore& params, const LayerCache& cache,
                             GradientStore& grads) const {
  const Tensor& x = cache.get("x");
  const Tensor& col = cache.get("col");
  const Tensor& k = params.at(weight_name());
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t out_h = dy.dim(2), out_w = dy.dim(3);
  const std::size_t patch = in_c_ * kh_ * kw_;
  const std::size_t out_hw = out_h * out_w;

  Tensor dk({filters_, in_c_, kh_, kw_});
  Tensor dx({n, in_c_, h, w});
  std::vector<double> dcol(patch * out_hw);
  for (std::size_t i = 0; i < n; ++i) {
    const double* dy_i = dy.data() + i * filters_ * out_hw;
    const double* col_i = col.data() + i * patch * out_hw;
    // dK += dY_i * col_i^T
    gemm(false, true, filters_, patch, out_hw, 1.0, dy_i, out_hw, col_i, out_hw, 1.0, dk.data(),
         patch);
    // dcol = K^T * dY_i, scattered back to the image
    gemm(true, false, patch, out_hw, filters_, 1.0, k.data(), patch, dy_i, out_hw, 0.0,
         dcol.data(), out_hw);
    col2im_add(dcol.data(), in_c_, h, w, kh_, kw_, stride_, pad_, out_h, out_w,
               dx.data() + i * in_c_ * h * w);
  }
  require_finite(dk, name() + " backward");
  require_finite(dx, name() + " backward");
  grads.set(weight_name(), std::move(dk));

  if (use_bias_) {
    Tensor db({filters_});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < filters_; ++f) {
        const double* src = dy.data() + (i * filters_ + f) * out_hw;
        double s = 0.0;
        for (std::size_t p = 0; p < out_hw; ++p) s += src[p];
        db[f] += s;
      }
    grads.set(bias_name(), std::move(db));
  }
  return dx;
}

// ---------------------------------------------------------------- MaxPool

MaxPoolLayer::MaxPoolLayer(std::string name, std::size_t k, std::size_t stride)
    : Layer(std::move(name)), k_(k), stride_(stride) {
  if (k_ == 0 || stride_ == 0) throw_config(this->name() + ": bad pooling geometry");
}

Shape MaxPoolLayer::out_shape(const Shape& in) const {
  if (in.size() != 3) throw_config(name() + ": expected CxHxW input, got " + shape_str(in));
  if (in[1] < k_ || in[2] < k_) throw_config(name() + ": window larger than input");
  if ((in[1] - k_) % stride_ != 0 || (in[2] - k_) % stride_ != 0)
    throw_config(name() + ": non-integer output size");
  return {in[0], (in[1] - k_) / stride_ + 1, (in[2] - k_) / stride_ + 1};
}

Tensor MaxPoolLayer::forward(const Tensor& x, ParamStore&, LayerCache& cache, Mode mode) const {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t out_h = (h - k_) / stride_ + 1, out_w = (w - k_) / stride_ + 1;
  const bool keep = mode != Mode::infer;
  Tensor y({n, c, out_h, out_w});
  Tensor argmax(keep ? Shape{n, c, out_h, out_w} : Shape{1});  // flat input indexes
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t plane = (i * c + ch) * h * w;
      for (std::size_t oy = 0; oy < out_h; ++oy)
        for (std::size_t ox = 0; ox < out_w; ++ox) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t ky = 0; ky < k_; ++ky)
            for (std::size_t kx = 0; kx < k_; ++kx) {
              const std::size_t iy = oy * stride_ + ky, ix = ox * stride_ + kx;
              const std::size_t idx = plane + iy * w + ix;
              // Strict > keeps the first maximum in scan order on ties.
              if (x[idx] > best) {
                best = x[idx];
                best_idx = idx;
              }
            }
          y.at(i, ch, oy, ox) = best;
          if (keep) argmax.at(i, ch, oy, ox) = static_cast<double>(best_idx);
        }
    }
  if (keep) {
    cache.put("x", x);
    cache.put("argmax", std::move(argmax));
  }
  return y;
}

Tensor MaxPoolLayer::backward(const Tensor& dy, const ParamStore&, const LayerCache& cache,
                              GradientStore&) const {
  const Tensor& x = cache.get("x");
  const Tensor& argmax = cache.get("argmax");
  Tensor dx(x.shape());
  for (std::size_t i = 0, m = dy.size(); i < m; ++i)
    dx[static_cast<std::size_t>(argmax[i])] += dy[i];
  return dx;
}

bool MaxPoolLayer::same_branches(const LayerCache& a, const LayerCache& b) const {
  const Tensor& ia = a.get("argmax");
  const Tensor& ib = b.get("argmax");
  if (!ia.same_shape(ib)) return false;
  for (std::size_t i = 0, n = ia.size(); i < n; ++i)
    if (ia[i] != ib[i]) return false;
  return true;
}

// ---------------------------------------------------------------- GlobalAvgPool

Shape GlobalAvgPoolLayer::out_shape(const Shape& in) const {
  if (in.size() != 3) throw_config(name() + ": expected CxHxW input, got " + shape_str(in));
  return {in[0]};
}

Tensor GlobalAvgPoolLayer::forward(const Tensor& x, ParamStore&, LayerCache& cache, Mode mode) const {
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor y({n, c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* src = x.data() + (i * c + ch) * hw;
      double s = 0.0;
      for (std::size_t p = 0; p < hw; ++p) s += src[p];
      y.at(i, ch) = s / static_cast<double>(hw);
    }
  if (mode != Mode::infer) cache.put("x", x);
  return y;
}

Tensor GlobalAvgPoolLayer::backward(const Tensor& dy, const ParamStore&, const LayerCache& cache,
                                    GradientStore&) const {
  const Tensor& x = cache.get("x");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor dx(x.shape());
  const double inv = 1.0 / static_cast<double>(hw);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double g = dy.at(i, ch) * inv;
      double* dst = dx.data() + (i * c + ch) * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[p] = g;
    }
  return dx;
}

// ---------------------------------------------------------------- BatchNorm

BatchNormLayer::BatchNormLayer(std::string name, std::size_t channels, double momentum, double eps)
    : Layer(std::move(name)), channels_(channels), momentum_(momentum), eps_(eps) {}

Shape BatchNormLayer::out_shape(const Shape& in) const {
  const std::size_t c = in.empty() ? 0 : in[0];
  if ((in.size() != 1 && in.size() != 3) || c != channels_)
    throw_config(name() + ": expected " + std::to_string(channels_) + "-channel input, got " +
                 shape_str(in));
  return in;
}

void BatchNormLayer::register_params(ParamStore& params, Init, RngStream&) {
  params.add(name() + ".gamma", Tensor::full({channels_}, 1.0));
  params.add(name() + ".beta", Tensor({channels_}));
  params.add(name() + ".running_mean", Tensor({channels_}), /*trainable=*/false);
  params.add(name() + ".running_var", Tensor::full({channels_}, 1.0), /*trainable=*/false);
}

Tensor BatchNormLayer::forward(const Tensor& x, ParamStore& params, LayerCache& cache,
                               Mode mode) const {
  const bool image = x.rank() == 4;
  const std::size_t n = x.dim(0);
  const std::size_t hw = image ? x.dim(2) * x.dim(3) : 1;
  const std::size_t m = n * hw;  // elements per channel
  const Tensor& gamma = params.at(name() + ".gamma");
  const Tensor& beta = params.at(name() + ".beta");

  auto channel_ptr = [&](const Tensor& t, std::size_t i, std::size_t c) {
    return t.data() + (i * channels_ + c) * hw;
  };

  Tensor y(x.shape());
  if (mode == Mode::infer) {
    const Tensor& rm = params.at(name() + ".running_mean");
    const Tensor& rv = params.at(name() + ".running_var");
    for (std::size_t c = 0; c < channels_; ++c) {
      const double istd = 1.0 / std::sqrt(rv[c] + eps_);
      const double g = gamma[c], b = beta[c], mu = rm[c];
      for (std::size_t i = 0; i < n; ++i) {
        const double* src = channel_ptr(x, i, c);
        double* dst = const_cast<double*>(channel_ptr(y, i, c));
        for (std::size_t p = 0; p < hw; ++p) dst[p] = g * (src[p] - mu) * istd + b;
      }
    }
    require_finite(y, name());
    return y;
  }

  Tensor xhat(x.shape());
  Tensor istd_t({channels_});
  Tensor mean_t({channels_});
  Tensor var_t({channels_});
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* src = channel_ptr(x, i, c);
      for (std::size_t p = 0; p < hw; ++p) sum += src[p];
    }
    const double mu = sum / static_cast<double>(m);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* src = channel_ptr(x, i, c);
      for (std::size_t p = 0; p < hw; ++p) {
        const double d = src[p] - mu;
        var += d * d;
      }
    }
    var /= static_cast<double>(m);
    const double istd = 1.0 / std::sqrt(var + eps_);
    const double g = gamma[c], b = beta[c];
    for (std::size_t i = 0; i < n; ++i) {
      const double* src = channel_ptr(x, i, c);
      double* xh = const_cast<double*>(channel_ptr(xhat, i, c));
      double* dst = const_cast<double*>(channel_ptr(y, i, c));
      for (std::size_t p = 0; p < hw; ++p) {
        xh[p] = (src[p] - mu) * istd;
        dst[p] = g * xh[p] + b;
      }
    }
    mean_t[c] = mu;
    var_t[c] = var;
    istd_t[c] = istd;
  }
  require_finite(y, name());

  if (mode == Mode::train) {
    Tensor& rm = params.at(name() + ".running_mean");
    Tensor& rv = params.at(name() + ".running_var");
    // Unbiased variance goes into the running estimate.
    const double correction =
        m > 1 ? static_cast<double>(m) / static_cast<double>(m - 1) : 1.0;
    for (std::size_t c = 0; c < channels_; ++c) {
      rm[c] = momentum_ * rm[c] + (1.0 - momentum_) * mean_t[c];
      rv[c] = momentum_ * rv[c] + (1.0 - momentum_) * var_t[c] * correction;
    }
  }

  cache.put("x", x);
  cache.put("xhat", std::move(xhat));
  cache.put("istd", std::move(istd_t));
  return y;
}

Tensor BatchNormLayer::backward(const Tensor& dy, const ParamStore& params, const LayerCache& cache,
                                GradientStore& grads) const {
  if (!cache.has("xhat"))
    throw_internal(name() + ": backward requires a train-mode forward cache");
  const Tensor& xhat = cache.get("xhat");
  const Tensor& istd = cache.get("istd");
  const Tensor& gamma = params.at(name() + ".gamma");
  const bool image = dy.rank() == 4;
  const std::size_t n = dy.dim(0);
  const std::size_t hw = image ? dy.dim(2) * dy.dim(3) : 1;
  const std::size_t m = n * hw;

  auto channel_ptr = [&](const Tensor& t, std::size_t i, std::size_t c) {
    return t.data() + (i * channels_ + c) * hw;
  };

  Tensor dgamma({channels_});
  Tensor dbeta({channels_});
  Tensor dx(dy.shape());
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* pdy = channel_ptr(dy, i, c);
      const double* pxh = channel_ptr(xhat, i, c);
      for (std::size_t p = 0; p < hw; ++p) {
        sum_dy += pdy[p];
        sum_dy_xhat += pdy[p] * pxh[p];
      }
    }
    dgamma[c] = sum_dy_xhat;
    dbeta[c] = sum_dy;
    const double scale = gamma[c] * istd[c] / static_cast<double>(m);
    for (std::size_t i = 0; i < n; ++i) {
      const double* pdy = channel_ptr(dy, i, c);
      const double* pxh = channel_ptr(xhat, i, c);
      double* pdx = const_cast<double*>(channel_ptr(dx, i, c));
      for (std::size_t p = 0; p < hw; ++p)
        pdx[p] = scale * (static_cast<double>(m) * pdy[p] - sum_dy - pxh[p] * sum_dy_xhat);
    }
  }
  require_finite(dx, name() + " backward");
  grads.set(name() + ".gamma", std::move(dgamma));
  grads.set(name() + ".beta", std::move(dbeta));
  return dx;
}

// ---------------------------------------------------------------- Activation

ActivationLayer::ActivationLayer(std::string name, ActivationSpec spec)
    : Layer(std::move(name)), spec_(spec) {
  spec_.validate();
}

Shape ActivationLayer::out_shape(const Shape& in) const { return in; }

void ActivationLayer::register_params(ParamStore& params, Init, RngStream&) {
  if (spec_.kind == Act::prelu)
    params.add(name() + ".slope", Tensor({1}, {spec_.initial_slope}));
}

ActivationSpec ActivationLayer::effective_spec(const ParamStore& params) const {
  if (spec_.kind != Act::prelu) return spec_;
  ActivationSpec s = spec_;
  s.initial_slope = params.at(name() + ".slope")[0];
  return s;
}

Tensor ActivationLayer::forward(const Tensor& x, ParamStore& params, LayerCache& cache, Mode mode) const {
  Tensor y = act_forward(effective_spec(params), x);
  if (mode != Mode::infer) cache.put("x", x);
  return y;
}

Tensor ActivationLayer::backward(const Tensor& dy, const ParamStore& params, const LayerCache& cache,
                                 GradientStore& grads) const {
  const Tensor& x = cache.get("x");
  const ActivationSpec spec = effective_spec(params);
  Tensor dx(x.shape());
  for (std::size_t i = 0, n = x.size(); i < n; ++i) dx[i] = dy[i] * act_deriv(spec, x[i]);
  require_finite(dx, name() + " backward");
  if (spec_.kind == Act::prelu) {
    double ds = 0.0;
    for (std::size_t i = 0, n = x.size(); i < n; ++i)
      if (x[i] < 0.0) ds += dy[i] * x[i];
    grads.set(name() + ".slope", Tensor({1}, {ds}));
  }
  return dx;
}

bool ActivationLayer::same_branches(const LayerCache& a, const LayerCache& b) const {
  if (!spec_.has_kink()) return true;
  const Tensor& xa = a.get("x");
  const Tensor& xb = b.get("x");
  if (!xa.same_shape(xb)) return false;
  for (std::size_t i = 0, n = xa.size(); i < n; ++i)
    if ((xa[i] > 0.0) != (xb[i] > 0.0)) return false;
  return true;
}

// ---------------------------------------------------------------- Flatten

Shape FlattenLayer::out_shape(const Shape& in) const { return {shape_size(in)}; }

Tensor FlattenLayer::forward(const Tensor& x, ParamStore&, LayerCache& cache, Mode mode) const {
  if (mode != Mode::infer) cache.put("x", x);
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

Tensor FlattenLayer::backward(const Tensor& dy, const ParamStore&, const LayerCache& cache,
                              GradientStore&) const {
  return dy.reshaped(cache.get("x").shape());
}

// ---------------------------------------------------------------- Residual

ResidualLayer::ResidualLayer(std::string name, std::vector<std::unique_ptr<Layer>> inner,
                             Shape in_shape)
    : Layer(std::move(name)), inner_(std::move(inner)), in_shape_(std::move(in_shape)) {
  if (inner_.empty()) throw_config(this->name() + ": residual unit needs inner layers");
  Shape s = in_shape_;
  for (const auto& l : inner_) s = l->out_shape(s);
  out_shape_ = s;
  if (out_shape_ != in_shape_) {
    if (in_shape_.size() != 3 || out_shape_.size() != 3)
      throw_config(this->name() + ": residual unit must keep CxHxW structure");
    if (in_shape_[1] % out_shape_[1] != 0 || in_shape_[2] % out_shape_[2] != 0 ||
        in_shape_[1] / out_shape_[1] != in_shape_[2] / out_shape_[2])
      throw_config(this->name() + ": skip connection cannot match " + shape_str(in_shape_) +
                   " to " + shape_str(out_shape_));
    const std::size_t s2 = in_shape_[1] / out_shape_[1];
    projection_ = std::make_unique<Conv2dLayer>(this->name() + ".proj", in_shape_[0],
                                                out_shape_[0], 1, 1, s2, 0, /*use_bias=*/false);
  }
}

Shape ResidualLayer::out_shape(const Shape& in) const {
  if (in != in_shape_)
    throw_config(name() + ": expected input " + shape_str(in_shape_) + ", got " + shape_str(in));
  return out_shape_;
}

void ResidualLayer::register_params(ParamStore& params, Init init, RngStream& rng) {
  for (const auto& l : inner_) l->register_params(params, init, rng);
  if (projection_) projection_->register_params(params, init, rng);
}

Tensor ResidualLayer::forward(const Tensor& x, ParamStore& params, LayerCache& cache, Mode mode) const {
  if (mode != Mode::infer) cache.put("x", x);
  cache.children.resize(inner_.size() + 1);
  Tensor h = x;
  for (std::size_t i = 0; i < inner_.size(); ++i)
    h = inner_[i]->forward(h, params, cache.children[i], mode);
  Tensor skip =
      projection_ ? projection_->forward(x, params, cache.children[inner_.size()], mode) : x;
  return add(h, skip);
}

Tensor ResidualLayer::backward(const Tensor& dy, const ParamStore& params, const LayerCache& cache,
                               GradientStore& grads) const {
  Tensor d = dy;
  for (std::size_t i = inner_.size(); i-- > 0;)
    d = inner_[i]->backward(d, params, cache.children[i], grads);
  Tensor dskip = projection_
                     ? projection_->backward(dy, params, cache.children[inner_.size()], grads)
                     : dy;
  return add(d, dskip);
}

bool ResidualLayer::same_branches(const LayerCache& a, const LayerCache& b) const {
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < inner_.size(); ++i)
    if (!inner_[i]->same_branches(a.children[i], b.children[i])) return false;
  return true;
}

// ---------------------------------------------------------------- Softmax

Shape SoftmaxLayer::out_shape(const Shape& in) const {
  if (in.size() != 1) throw_config(name() + ": expected flat logits, got " + shape_str(in));
  return in;
}

Tensor SoftmaxLayer::forward(const Tensor& x, ParamStore&, LayerCache& cache, Mode mode) const {
  const std::size_t n = x.dim(0), k = x.dim(1);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.data() + i * k;
    double* out = y.data() + i * k;
    double mx = row[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[j] = std::exp(row[j] - mx);
      sum += out[j];
    }
    for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
  }
  require_finite(y, name());
  if (mode != Mode::infer) {
    cache.put("x", x);
    cache.put("probs", y);
  }
  return y;
}

Tensor SoftmaxLayer::backward(const Tensor& dy, const ParamStore&, const LayerCache& cache,
                              GradientStore&) const {
  const Tensor& p = cache.get("probs");
  const std::size_t n = p.dim(0), k = p.dim(1);
  Tensor dx(p.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* pr = p.data() + i * k;
    const double* g = dy.data() + i * k;
    double dot = 0.0;
    for (std::size_t j = 0; j < k; ++j) dot += pr[j] * g[j];
    double* out = dx.data() + i * k;
    for (std::size_t j = 0; j < k; ++j) out[j] = pr[j] * (g[j] - dot);
  }
  return dx;
}

}  // namespace nlr

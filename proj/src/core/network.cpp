#include "core/network.hpp"

#include <cmath>

#include "core/common.hpp"

namespace nlr {

LayerSpec LayerSpec::Dense(std::size_t units) {
  LayerSpec s;
  s.kind = Kind::dense;
  s.units = units;
  return s;
}
LayerSpec LayerSpec::Conv2d(std::size_t filters, std::size_t kh, std::size_t kw, std::size_t stride,
                            std::size_t pad, bool bias) {
  LayerSpec s;
  s.kind = Kind::conv2d;
  s.filters = filters;
  s.kh = kh;
  s.kw = kw;
  s.stride = stride;
  s.pad = pad;
  s.conv_bias = bias;
  return s;
}
LayerSpec LayerSpec::MaxPool(std::size_t k, std::size_t stride) {
  LayerSpec s;
  s.kind = Kind::maxpool;
  s.pool = k;
  s.pool_stride = stride;
  return s;
}
LayerSpec LayerSpec::GlobalAvgPool() {
  LayerSpec s;
  s.kind = Kind::avgpool_global;
  return s;
}
LayerSpec LayerSpec::BatchNorm() {
  LayerSpec s;
  s.kind = Kind::batchnorm;
  return s;
}
LayerSpec LayerSpec::Activation(ActivationSpec spec) {
  LayerSpec s;
  s.kind = Kind::activation;
  s.act = spec;
  return s;
}
LayerSpec LayerSpec::Flatten() {
  LayerSpec s;
  s.kind = Kind::flatten;
  return s;
}
LayerSpec LayerSpec::Residual(std::vector<LayerSpec> inner) {
  LayerSpec s;
  s.kind = Kind::residual_unit;
  s.inner = std::move(inner);
  return s;
}
LayerSpec LayerSpec::SoftmaxOutput() {
  LayerSpec s;
  s.kind = Kind::softmax_output;
  return s;
}

namespace {

std::string layer_tag(std::size_t i, const char* kind) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02zu", i);
  return "layer" + std::string(buf) + "." + kind;
}

const char* kind_tag(LayerSpec::Kind k);

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const std::string& name, Shape& shape);

std::unique_ptr<Layer> make_residual(const LayerSpec& spec, const std::string& name, Shape& shape) {
  std::vector<std::unique_ptr<Layer>> inner;
  Shape s = shape;
  for (std::size_t j = 0; j < spec.inner.size(); ++j) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02zu", j);
    std::string inner_name =
        name + ".inner" + buf + "." + kind_tag(spec.inner[j].kind);
    inner.push_back(make_layer(spec.inner[j], inner_name, s));
  }
  auto unit = std::make_unique<ResidualLayer>(name, std::move(inner), shape);
  shape = unit->out_shape(shape);
  return unit;
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const std::string& name, Shape& shape) {
  std::unique_ptr<Layer> layer;
  switch (spec.kind) {
    case LayerSpec::Kind::dense: {
      if (shape.size() != 1)
        throw_config(name + ": dense layer requires flat input, got " + shape_str(shape) +
                     " (add a flatten layer)");
      layer = std::make_unique<DenseLayer>(name, shape[0], spec.units);
      break;
    }
    case LayerSpec::Kind::conv2d: {
      if (shape.size() != 3)
        throw_config(name + ": conv2d requires CxHxW input, got " + shape_str(shape));
      layer = std::make_unique<Conv2dLayer>(name, shape[0], spec.filters, spec.kh, spec.kw,
                                            spec.stride, spec.pad, spec.conv_bias);
      break;
    }
    case LayerSpec::Kind::maxpool:
      layer = std::make_unique<MaxPoolLayer>(name, spec.pool, spec.pool_stride);
      break;
    case LayerSpec::Kind::avgpool_global:
      layer = std::make_unique<GlobalAvgPoolLayer>(name);
      break;
    case LayerSpec::Kind::batchnorm: {
      if (shape.empty()) throw_config(name + ": batchnorm requires a channel dimension");
      layer = std::make_unique<BatchNormLayer>(name, shape[0]);
      break;
    }
    case LayerSpec::Kind::activation:
      layer = std::make_unique<ActivationLayer>(name, spec.act);
      break;
    case LayerSpec::Kind::flatten:
      layer = std::make_unique<FlattenLayer>(name);
      break;
    case LayerSpec::Kind::residual_unit:
      return make_residual(spec, name, shape);
    case LayerSpec::Kind::softmax_output:
      layer = std::make_unique<SoftmaxLayer>(name);
      break;
  }
  shape = layer->out_shape(shape);
  return layer;
}

const char* kind_tag(LayerSpec::Kind k) {
  switch (k) {
    case LayerSpec::Kind::dense: return "dense";
    case LayerSpec::Kind::conv2d: return "conv";
    case LayerSpec::Kind::maxpool: return "maxpool";
    case LayerSpec::Kind::avgpool_global: return "avgpool";
    case LayerSpec::Kind::batchnorm: return "bn";
    case LayerSpec::Kind::activation: return "act";
    case LayerSpec::Kind::flatten: return "flatten";
    case LayerSpec::Kind::residual_unit: return "residual";
    case LayerSpec::Kind::softmax_output: return "softmax";
  }
  return "layer";
}

}  // namespace

Network::Network(Shape input_shape, std::vector<std::unique_ptr<Layer>> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  Shape s = input_shape_;
  for (const auto& l : layers_) s = l->out_shape(s);
  output_shape_ = s;
  layer_params_.resize(layers_.size());
}

ParamStore Network::init_params(Init init, RngStream& rng) {
  ParamStore params;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::size_t before = params.entries().size();
    layers_[i]->register_params(params, init, rng);
    layer_params_[i].clear();
    for (std::size_t j = before; j < params.entries().size(); ++j)
      layer_params_[i].push_back(params.entries()[j].name);
  }
  return params;
}

Tensor Network::forward(const Tensor& batch, ParamStore& params, ForwardCache& cache,
                        Mode mode) const {
  Shape per_sample(batch.shape().begin() + 1, batch.shape().end());
  if (batch.rank() < 1 || per_sample != input_shape_)
    throw_config("forward: batch shape " + shape_str(batch.shape()) +
                 " does not match network input " + shape_str(input_shape_));
  cache.mode = mode;
  cache.layers.assign(layers_.size(), LayerCache{});
  return forward_from(0, batch, params, cache, mode);
}

Tensor Network::forward_from(std::size_t first, const Tensor& x, ParamStore& params,
                             ForwardCache& cache, Mode mode) const {
  if (cache.layers.size() != layers_.size()) cache.layers.resize(layers_.size());
  Tensor h = x;
  for (std::size_t i = first; i < layers_.size(); ++i) {
    try {
      h = layers_[i]->forward(h, params, cache.layers[i], mode);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::internal)
        throw_internal("layer '" + layers_[i]->name() + "': " + e.what());
      throw;
    }
  }
  return h;
}

bool Network::same_branches_from(std::size_t first, const ForwardCache& base,
                                 const ForwardCache& fresh) const {
  for (std::size_t i = first; i < layers_.size(); ++i)
    if (!layers_[i]->same_branches(base.layers[i], fresh.layers[i])) return false;
  return true;
}

std::size_t Network::softmax_index() const {
  if (layers_.empty() || dynamic_cast<const SoftmaxLayer*>(layers_.back().get()) == nullptr)
    throw_config("network must end in a softmax_output layer for loss computation");
  return layers_.size() - 1;
}

double Network::loss(const ForwardCache& cache, const std::vector<int>& labels) const {
  const std::size_t last = softmax_index();
  const Tensor& logits = cache.layers[last].get("x");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n)
    throw_config("loss: " + std::to_string(labels.size()) + " labels for batch of " +
                 std::to_string(n));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= k)
      throw_config("loss: label " + std::to_string(label) + " out of range");
    const double* row = logits.data() + i * k;
    double mx = row[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
    total += mx + std::log(sum) - row[label];
  }
  const double mean = total / static_cast<double>(n);
  if (!std::isfinite(mean)) throw_internal("loss: non-finite value");
  return mean;
}

std::pair<double, GradientStore> Network::backward(ParamStore& params, const ForwardCache& cache,
                                                   const std::vector<int>& labels) const {
  const std::size_t last = softmax_index();
  const double loss_value = loss(cache, labels);

  const Tensor& probs = cache.layers[last].get("probs");
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  Tensor dlogits(probs.shape());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j)
      dlogits.at(i, j) =
          (probs.at(i, j) - (static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0)) * inv_n;

  GradientStore grads = GradientStore::zeros_like(params);
  Tensor d = dlogits;
  for (std::size_t i = last; i-- > 0;) {
    try {
      d = layers_[i]->backward(d, params, cache.layers[i], grads);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::internal)
        throw_internal("layer '" + layers_[i]->name() + "': " + e.what());
      throw;
    }
  }
  return {loss_value, std::move(grads)};
}

Tensor Network::backward_from(const Tensor& d_output, const ParamStore& params,
                              const ForwardCache& cache, GradientStore& grads) const {
  Tensor d = d_output;
  for (std::size_t i = layers_.size(); i-- > 0;)
    d = layers_[i]->backward(d, params, cache.layers[i], grads);
  return d;
}

BuildResult build(const std::vector<LayerSpec>& specs, Shape input_shape, Init init,
                  RngStream& rng) {
  std::vector<std::unique_ptr<Layer>> layers;
  Shape shape = input_shape;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    try {
      layers.push_back(make_layer(specs[i], layer_tag(i, kind_tag(specs[i].kind)), shape));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::config)
        throw_config("layer " + std::to_string(i) + ": " + e.what());
      throw;
    }
  }
  Network net(std::move(input_shape), std::move(layers));
  ParamStore params = net.init_params(init, rng);
  return {std::move(net), std::move(params)};
}

double accuracy(const Tensor& probs, const std::vector<int>& labels) {
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  if (labels.size() != n) throw_config("accuracy: label count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = probs.data() + i * k;
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (row[j] > row[best]) best = j;  // strict >: ties go to the lowest index
    if (static_cast<int>(best) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace nlr

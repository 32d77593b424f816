#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "core/layers.hpp"

namespace nlr {

// Declarative layer description; build() turns a list of these into a
// Network plus its initialized ParamStore.
struct LayerSpec {
  enum class Kind {
    dense,
    conv2d,
    maxpool,
    avgpool_global,
    batchnorm,
    activation,
    flatten,
    residual_unit,
    softmax_output,
  };

  Kind kind = Kind::dense;
  std::size_t units = 0;                    // dense
  std::size_t filters = 0, kh = 0, kw = 0;  // conv2d
  std::size_t stride = 1, pad = 0;          // conv2d
  bool conv_bias = true;                    // off for convs feeding batchnorm
  std::size_t pool = 2, pool_stride = 2;    // maxpool
  ActivationSpec act;                       // activation
  std::vector<LayerSpec> inner;             // residual_unit

  static LayerSpec Dense(std::size_t units);
  static LayerSpec Conv2d(std::size_t filters, std::size_t kh, std::size_t kw,
                          std::size_t stride = 1, std::size_t pad = 0, bool bias = true);
  static LayerSpec MaxPool(std::size_t k = 2, std::size_t stride = 2);
  static LayerSpec GlobalAvgPool();
  static LayerSpec BatchNorm();
  static LayerSpec Activation(ActivationSpec spec);
  static LayerSpec Flatten();
  static LayerSpec Residual(std::vector<LayerSpec> inner);
  static LayerSpec SoftmaxOutput();
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  Mode mode = Mode::train;
};

class Network {
 public:
  Network(Shape input_shape, std::vector<std::unique_ptr<Layer>> layers);

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }
  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  // Names of the parameters registered by layer i, in registration order.
  const std::vector<std::string>& layer_param_names(std::size_t i) const {
    return layer_params_[i];
  }

  ParamStore init_params(Init init, RngStream& rng);

  // Runs the whole stack. Errors from a layer are reported with its name.
  Tensor forward(const Tensor& batch, ParamStore& params, ForwardCache& cache, Mode mode) const;

  // Partial forward over layers [first, end); x must be the input of layer
  // `first`. Used by finite differencing.
  Tensor forward_from(std::size_t first, const Tensor& x, ParamStore& params, ForwardCache& cache,
                      Mode mode) const;

  bool same_branches_from(std::size_t first, const ForwardCache& base,
                          const ForwardCache& fresh) const;

  // Mean cross-entropy of the cached logits (last layer must be softmax).
  // Computed via log-sum-exp, so it is finite whenever the logits are.
  double loss(const ForwardCache& cache, const std::vector<int>& labels) const;

  // Loss plus gradients for every trainable parameter. The softmax +
  // cross-entropy pair is differentiated jointly: d logits = (p - onehot)/N.
  std::pair<double, GradientStore> backward(ParamStore& params, const ForwardCache& cache,
                                            const std::vector<int>& labels) const;

  // Reverse-mode sweep from an arbitrary upstream gradient on the network
  // output; returns the gradient w.r.t. the network input.
  Tensor backward_from(const Tensor& d_output, const ParamStore& params, const ForwardCache& cache,
                       GradientStore& grads) const;

 private:
  std::size_t softmax_index() const;

  Shape input_shape_;
  Shape output_shape_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<std::vector<std::string>> layer_params_;
};

struct BuildResult {
  Network net;
  ParamStore params;
};

// Validates the chain of shapes (reporting the offending layer index on
// mismatch), instantiates layers and initializes parameters: weights from
// the requested scheme, biases zero, batchnorm scale 1 / shift 0, prelu
// slopes at their configured start value.
BuildResult build(const std::vector<LayerSpec>& specs, Shape input_shape, Init init,
                  RngStream& rng);

// Accuracy of argmax predictions; ties resolve to the lowest class index.
double accuracy(const Tensor& probs, const std::vector<int>& labels);

}  // namespace nlr

#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/activations.hpp"
#include "core/tensor.hpp"

namespace nlr {

enum class Init { xavier, msra };
enum class Mode {
  train,         // batch statistics, running statistics updated
  train_static,  // batch statistics, no state mutation (finite differencing)
  infer,         // running statistics
};

// Ordered collection of named tensors. Trainable entries get gradient slots;
// non-trainable entries (batchnorm running statistics) are state carried in
// checkpoints but excluded from optimization.
struct ParamEntry {
  std::string name;
  Tensor value;
  bool trainable = true;
};

class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor value, bool trainable = true);
  bool has(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool trainable(const std::string& name) const;
  const std::vector<ParamEntry>& entries() const { return entries_; }
  std::vector<ParamEntry>& entries() { return entries_; }
  std::size_t scalar_count(bool trainable_only) const;

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Gradient slots mirroring the trainable entries of a ParamStore, one tensor
// of identical shape per parameter.
class GradientStore {
 public:
  static GradientStore zeros_like(const ParamStore& params);
  bool has(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  void set(const std::string& name, Tensor value);  // shape-checked assignment
  const std::vector<ParamEntry>& entries() const { return entries_; }

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Per-layer scratch produced by forward and consumed by backward.
struct LayerCache {
  std::unordered_map<std::string, Tensor> slots;
  std::vector<LayerCache> children;  // residual inner layers

  bool has(const std::string& k) const { return slots.count(k) != 0; }
  void put(const std::string& k, Tensor v) { slots[k] = std::move(v); }
  const Tensor& get(const std::string& k) const;
};

class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }

  // Per-sample shape propagation; throws a config error on incompatibility.
  virtual Shape out_shape(const Shape& in) const = 0;

  virtual void register_params(ParamStore&, Init, RngStream&) {}

  // x carries the batch dimension in front of the per-sample shape.
  virtual Tensor forward(const Tensor& x, ParamStore& params, LayerCache& cache, Mode mode) const = 0;
  virtual Tensor backward(const Tensor& dy, const ParamStore& params, const LayerCache& cache,
                          GradientStore& grads) const = 0;

  // Finite-difference support: true when the branch decisions (kink side,
  // argmax pick) recorded in `a` and `b` agree. Layers without branches
  // always agree.
  virtual bool same_branches(const LayerCache& a, const LayerCache& b) const;

 private:
  std::string name_;
};

class DenseLayer : public Layer {
 public:
  DenseLayer(std::string name, std::size_t in_features, std::size_t units);
  Shape out_shape(const Shape& in) const override;
  void register_params(ParamStore&, Init, RngStream&) override;
  Tensor forward(const Tensor& x, ParamStore&, LayerCache&, Mode) const override;
  Tensor backward(const Tensor& dy, const ParamStore&, const LayerCache&, GradientStore&) const override;

  std::size_t in_features() const { return in_; }
  std::size_t units() const { return units_; }
  std::string weight_name() const { return name() + ".weight"; }
  std::string bias_name() const { return name() + ".bias"; }

 private:
  std::size_t in_, units_;
};

class Conv2dLayer : public Layer {
 public:
  Conv2dLayer(std::string name, std::size_t in_channels, std::size_t filters, std::size_t kh,
              std::size_t kw, std::size_t stride, std::size_t pad, bool use_bias = true);
  Shape out_shape(const Shape& in) const override;
  void register_params(ParamStore&, Init, RngStream&) override;
  Tensor forward(const Tensor& x, ParamStore&, LayerCache&, Mode) const override;
  Tensor backward(const Tensor& dy, const ParamStore&, const LayerCache&, GradientStore&) const override;

  std::string weight_name() const { return name() + ".weight"; }
  std::string bias_name() const { return name() + ".bias"; }

 private:
  std::size_t in_c_, filters_, kh_, kw_, stride_, pad_;
  bool use_bias_;
};

class MaxPoolLayer : public Layer {
 public:
  MaxPoolLayer(std::string name, std::size_t k, std::size_t stride);
  Shape out_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, ParamStore&, LayerCache&, Mode) const override;
  Tensor backward(const Tensor& dy, const ParamStore&, const LayerCache&, GradientStore&) const override;
  bool same_branches(const LayerCache& a, const LayerCache& b) const override;

 private:
  std::size_t k_, stride_;
};

class GlobalAvgPoolLayer : public Layer {
 public:
  explicit GlobalAvgPoolLayer(std::string name) : Layer(std::move(name)) {}
  Shape out_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, ParamStore&, LayerCache&, Mode) const override;
  Tensor backward(const Tensor& dy, const ParamStore&, const LayerCache&, GradientStore&) const override;
};

class BatchNormLayer : public Layer {
 public:
  BatchNormLayer(std::string name, std::size_t channels, double momentum = 0.9, double eps = 1e-5);
  Shape out_shape(const Shape& in) const override;
  void register_params(ParamStore&, Init, RngStream&) override;
  Tensor forward(const Tensor& x, ParamStore&, LayerCache&, Mode) const override;
  Tensor backward(const Tensor& dy, const ParamStore&, const LayerCache&, GradientStore&) const override;

 private:
  std::size_t channels_;
  double momentum_, eps_;
};

class ActivationLayer : public Layer {
 public:
  ActivationLayer(std::string name, ActivationSpec spec);
  Shape out_shape(const Shape& in) const override;
  void register_params(ParamStore&, Init, RngStream&) override;
  Tensor forward(const Tensor& x, ParamStore&, LayerCache&, Mode) const override;
  Tensor backward(const Tensor& dy, const ParamStore&, const LayerCache&, GradientStore&) const override;
  bool same_branches(const LayerCache& a, const LayerCache& b) const override;

  const ActivationSpec& spec() const { return spec_; }

  // spec with the trained prelu slope substituted in.
  ActivationSpec effective_spec(const ParamStore& params) const;

 private:
  ActivationSpec spec_;
};

class FlattenLayer : public Layer {
 public:
  explicit FlattenLayer(std::string name) : Layer(std::move(name)) {}
  Shape out_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, ParamStore&, LayerCache&, Mode) const override;
  Tensor backward(const Tensor& dy, const ParamStore&, const LayerCache&, GradientStore&) const override;
};

// Residual unit: out = inner(x) + skip(x). The skip path is the identity
// when shapes line up and a 1x1 stride-s projection (no bias) otherwise.
class ResidualLayer : public Layer {
 public:
  ResidualLayer(std::string name, std::vector<std::unique_ptr<Layer>> inner, Shape in_shape);
  Shape out_shape(const Shape& in) const override;
  void register_params(ParamStore&, Init, RngStream&) override;
  Tensor forward(const Tensor& x, ParamStore&, LayerCache&, Mode) const override;
  Tensor backward(const Tensor& dy, const ParamStore&, const LayerCache&, GradientStore&) const override;
  bool same_branches(const LayerCache& a, const LayerCache& b) const override;

 private:
  std::vector<std::unique_ptr<Layer>> inner_;
  std::unique_ptr<Conv2dLayer> projection_;  // null for identity skip
  Shape in_shape_, out_shape_;
};

// Terminal layer: rows of logits to rows of class probabilities.
class SoftmaxLayer : public Layer {
 public:
  explicit SoftmaxLayer(std::string name) : Layer(std::move(name)) {}
  Shape out_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, ParamStore&, LayerCache&, Mode) const override;
  // Full softmax Jacobian; the cross-entropy fast path lives in Network.
  Tensor backward(const Tensor& dy, const ParamStore&, const LayerCache&, GradientStore&) const override;
};

}  // namespace nlr

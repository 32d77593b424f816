#include "core/presets.hpp"

#include "core/common.hpp"

namespace nlr {

namespace {

std::vector<LayerSpec> simple_cnn(const ActivationSpec& act, std::size_t classes,
                                  const PresetOptions& o) {
  std::vector<LayerSpec> specs;
  specs.push_back(LayerSpec::Conv2d(o.conv_filters, 5, 5, 1, 2));
  specs.push_back(LayerSpec::Activation(act));
  if (o.pool) specs.push_back(LayerSpec::MaxPool(2, 2));
  specs.push_back(LayerSpec::Flatten());
  specs.push_back(LayerSpec::Dense(o.dense_units));
  specs.push_back(LayerSpec::Activation(act));
  specs.push_back(LayerSpec::Dense(classes));
  specs.push_back(LayerSpec::SoftmaxOutput());
  return specs;
}

std::vector<LayerSpec> lenet5_like(const ActivationSpec& act, std::size_t classes) {
  std::vector<LayerSpec> specs;
  specs.push_back(LayerSpec::Conv2d(6, 5, 5, 1, 2));
  specs.push_back(LayerSpec::Activation(act));
  specs.push_back(LayerSpec::MaxPool(2, 2));
  specs.push_back(LayerSpec::Conv2d(16, 5, 5, 1, 0));
  specs.push_back(LayerSpec::Activation(act));
  specs.push_back(LayerSpec::MaxPool(2, 2));
  specs.push_back(LayerSpec::Flatten());
  specs.push_back(LayerSpec::Dense(120));
  specs.push_back(LayerSpec::Activation(act));
  specs.push_back(LayerSpec::Dense(84));
  specs.push_back(LayerSpec::Activation(act));
  specs.push_back(LayerSpec::Dense(classes));
  specs.push_back(LayerSpec::SoftmaxOutput());
  return specs;
}

// Pre-activation unit: BN -> (A? act) -> conv -> BN -> (B? act) -> conv,
// all stride 1. The skip path is resolved at build time (identity, or a
// 1x1 projection when the unit widens its channels). Spatial downsampling
// happens between stages with 2x2 max-pools: a stride-2 3x3 conv on an even
// 32x32 input has no exact output size under this engine's conv contract.
// Convs are bias-free: every conv output lands in a batchnorm, which would
// cancel the bias anyway.
LayerSpec residual_unit(std::size_t filters, const ActivationSpec& act, const PresetOptions& o) {
  std::vector<LayerSpec> inner;
  inner.push_back(LayerSpec::BatchNorm());
  if (o.flags[0]) inner.push_back(LayerSpec::Activation(act));
  inner.push_back(LayerSpec::Conv2d(filters, 3, 3, 1, 1, /*bias=*/false));
  inner.push_back(LayerSpec::BatchNorm());
  if (o.flags[1]) inner.push_back(LayerSpec::Activation(act));
  inner.push_back(LayerSpec::Conv2d(filters, 3, 3, 1, 1, /*bias=*/false));
  return LayerSpec::Residual(std::move(inner));
}

std::vector<LayerSpec> tiny_resnet(const ActivationSpec& act, std::size_t classes,
                                   const PresetOptions& o) {
  std::vector<LayerSpec> specs;
  specs.push_back(LayerSpec::Conv2d(16, 3, 3, 1, 1, /*bias=*/false));
  specs.push_back(residual_unit(16, act, o));
  specs.push_back(residual_unit(16, act, o));
  specs.push_back(LayerSpec::MaxPool(2, 2));
  specs.push_back(residual_unit(32, act, o));
  specs.push_back(residual_unit(32, act, o));
  specs.push_back(LayerSpec::MaxPool(2, 2));
  specs.push_back(residual_unit(64, act, o));
  specs.push_back(residual_unit(64, act, o));
  specs.push_back(LayerSpec::BatchNorm());
  if (o.flags[2]) specs.push_back(LayerSpec::Activation(act));
  specs.push_back(LayerSpec::GlobalAvgPool());
  specs.push_back(LayerSpec::Dense(classes));
  specs.push_back(LayerSpec::SoftmaxOutput());
  return specs;
}

}  // namespace

std::vector<LayerSpec> make_preset(const std::string& name, const Shape& input_shape,
                                   std::size_t num_classes, const ActivationSpec& act,
                                   const PresetOptions& opts) {
  act.validate();
  if (input_shape.size() != 3)
    throw_config("preset '" + name + "': image input CxHxW required, got " +
                 shape_str(input_shape));
  for (int f : opts.flags)
    if (f != 0 && f != 1) throw_config("preset flags must be 0 or 1");
  if (name == "simple_cnn") return simple_cnn(act, num_classes, opts);
  if (name == "lenet5_like") return lenet5_like(act, num_classes);
  if (name == "tiny_resnet") return tiny_resnet(act, num_classes, opts);
  throw_config("unknown preset '" + name + "' (simple_cnn, lenet5_like, tiny_resnet)");
}

Init preset_default_init(const std::string& name) {
  return name == "tiny_resnet" ? Init::msra : Init::xavier;
}

bool is_known_preset(const std::string& name) {
  return name == "simple_cnn" || name == "lenet5_like" || name == "tiny_resnet";
}

}  // namespace nlr

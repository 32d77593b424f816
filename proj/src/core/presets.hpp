#pragma once

#include <array>
#include <string>
#include <vector>

#include "core/network.hpp"

namespace nlr {

struct PresetOptions {
  bool pool = true;               // simple_cnn: 2x2 max-pool after the conv layer
  std::size_t conv_filters = 64;  // simple_cnn width knobs (small values for grad checking)
  std::size_t dense_units = 1024;
  std::array<int, 3> flags{1, 1, 1};  // tiny_resnet activation positions (A, B, C)
};

// Model presets:
//
// simple_cnn   conv(64 kernels 5x5, same padding) -> act -> [2x2 max-pool]
//              -> flatten -> dense(1024) -> act -> dense(classes) -> softmax.
//              Without the pool the flat width on 28x28 input is 50176.
//
// lenet5_like  conv6@5x5(same) -> act -> pool -> conv16@5x5(valid) -> act
//              -> pool -> flatten -> dense120 -> act -> dense84 -> act
//              -> dense(classes) -> softmax.
//
// tiny_resnet  3x3 stem into three stages of two pre-activation residual
//              units (widths 16/32/64, stride-2 stage transitions with 1x1
//              projection skips), then BN -> act -> global average pool ->
//              dense(classes) -> softmax. Units are ordered BN -> act ->
//              conv; flag A keeps the activation after the unit-input BN,
//              flag B the interior one, flag C the final pre-pool one.
std::vector<LayerSpec> make_preset(const std::string& name, const Shape& input_shape,
                                   std::size_t num_classes, const ActivationSpec& act,
                                   const PresetOptions& opts = {});

// xavier everywhere except tiny_resnet, which uses msra.
Init preset_default_init(const std::string& name);

bool is_known_preset(const std::string& name);

}  // namespace nlr

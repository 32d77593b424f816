#pragma once

#include <cstdint>

#include "core/layers.hpp"

namespace nlr {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 100;
  std::size_t iterations = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;

  void validate() const;  // throws config error
};

// Bias-corrected Adam over the trainable entries of a ParamStore, in
// registration order. State advances even for zero gradients.
class AdamState {
 public:
  explicit AdamState(const ParamStore& params);

  std::size_t step_count() const { return t_; }

  void step(ParamStore& params, const GradientStore& grads, const TrainConfig& cfg);

 private:
  GradientStore m_;
  GradientStore v_;
  std::size_t t_ = 0;
};

}  // namespace nlr

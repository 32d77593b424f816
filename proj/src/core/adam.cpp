#include "core/adam.hpp"

#include <cmath>

#include "core/common.hpp"

namespace nlr {

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw_config("TrainConfig: lr must be positive");
  if (batch_size == 0) throw_config("TrainConfig: batch_size must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw_config("TrainConfig: beta1 and beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw_config("TrainConfig: eps must be positive");
}

AdamState::AdamState(const ParamStore& params)
    : m_(GradientStore::zeros_like(params)), v_(GradientStore::zeros_like(params)) {}

void AdamState::step(ParamStore& params, const GradientStore& grads, const TrainConfig& cfg) {
  cfg.validate();
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (auto& entry : params.entries()) {
    if (!entry.trainable) continue;
    const Tensor& g = grads.at(entry.name);
    if (!g.same_shape(entry.value))
      throw_internal("adam_step: gradient shape mismatch for '" + entry.name + "'");
    Tensor& m = m_.at(entry.name);
    Tensor& v = v_.at(entry.name);
    double* pp = entry.value.data();
    double* pm = m.data();
    double* pv = v.data();
    const double* pg = g.data();
    for (std::size_t i = 0, n = entry.value.size(); i < n; ++i) {
      pm[i] = cfg.beta1 * pm[i] + (1.0 - cfg.beta1) * pg[i];
      pv[i] = cfg.beta2 * pv[i] + (1.0 - cfg.beta2) * pg[i] * pg[i];
      const double mhat = pm[i] / bc1;
      const double vhat = pv[i] / bc2;
      pp[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
      if (!std::isfinite(pp[i]))
        throw_internal("adam_step: non-finite parameter in '" + entry.name + "'");
    }
  }
}

}  // namespace nlr

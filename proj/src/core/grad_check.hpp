#pragma once

#include <string>
#include <vector>

#include "core/network.hpp"

namespace nlr {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;  // "layer00.dense.weight[42]"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t n_checked = 0;
  std::size_t n_skipped_branch = 0;  // kink / argmax flips between the two FD passes
  std::size_t n_exceeding = 0;       // entries over `tolerance`
  std::size_t param_count = 0;
};

// Central-difference check of every trainable parameter:
//   numeric = (L(p+h) - L(p-h)) / (2h)
//   rel_err = |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
//
// Parameters whose perturbation flips a branch decision (activation kink
// side or pooling argmax) are excluded from the tolerance accounting; those
// points are non-differentiable, not wrong.
//
// Each perturbation recomputes only from the owning layer onward, reusing
// the cached input; a dense weight/bias additionally recomputes only the
// affected output column. Both shortcuts reproduce the exact arithmetic of
// a full forward on the affected values.
GradCheckReport grad_check(const Network& net, ParamStore& params, const Tensor& batch,
                           const std::vector<int>& labels, double h = 1e-5,
                           double tolerance = 1e-5, std::size_t max_params = 200000);

}  // namespace nlr

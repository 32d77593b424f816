#include "core/grad_check.hpp"

#include <cmath>

#include "core/common.hpp"

namespace nlr {

namespace {

struct FdContext {
  const Network& net;
  ParamStore& params;
  const ForwardCache& base;
  const std::vector<int>& labels;
};

// Loss after the current (already perturbed) params, recomputed from layer
// `li` onward using its cached input. Returns false in `ok` when a branch
// decision changed relative to the base forward.
double partial_loss(FdContext& ctx, std::size_t li, bool& ok) {
  const Tensor& x = ctx.base.layers[li].get("x");
  ForwardCache fresh;
  fresh.layers.assign(ctx.net.layer_count(), LayerCache{});
  ctx.net.forward_from(li, x, ctx.params, fresh, Mode::train_static);
  ok = ctx.net.same_branches_from(li, ctx.base, fresh);
  return ctx.net.loss(fresh, ctx.labels);
}

// --------------------------------------------------------------------------
// Extended-precision path for dense-layer parameters.
//
// Individual dense weight gradients are products of two per-example factors
// and can be arbitrarily small, while the loss is O(1); a double-precision
// loss difference then drowns in its own last bits (ulp(loss)/2h is about
// 1e-11 for h=1e-5). When every layer after the dense one is an activation,
// another dense layer, or the terminal softmax, the perturbed suffix is
// re-evaluated in long double instead, pushing the noise floor well below a
// 1e-5 relative tolerance. This is still a plain central difference; only
// the evaluation precision of the two loss values changes.

using ldvec = std::vector<long double>;

bool ld_suffix_applicable(const Network& net, std::size_t li) {
  if (dynamic_cast<const DenseLayer*>(&net.layer(li)) == nullptr) return false;
  for (std::size_t i = li + 1; i + 1 < net.layer_count(); ++i) {
    const Layer* l = &net.layer(i);
    if (dynamic_cast<const DenseLayer*>(l) == nullptr &&
        dynamic_cast<const ActivationLayer*>(l) == nullptr)
      return false;
  }
  return li + 1 < net.layer_count() &&
         dynamic_cast<const SoftmaxLayer*>(&net.layer(net.layer_count() - 1)) != nullptr;
}

// Runs activation/dense layers on per-row long double state, then the
// softmax cross-entropy. `rows` enters as the perturbed dense output.
long double ld_suffix_loss(const FdContext& ctx, std::size_t first, std::vector<ldvec>& rows,
                           bool& ok) {
  const std::size_t batch = rows.size();
  for (std::size_t i = first; i + 1 < ctx.net.layer_count(); ++i) {
    if (const auto* act = dynamic_cast<const ActivationLayer*>(&ctx.net.layer(i))) {
      const ActivationSpec spec = act->effective_spec(ctx.params);
      const Tensor& base_x = ctx.base.layers[i].get("x");
      for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t j = 0; j < rows[r].size(); ++j) {
          const long double v = rows[r][j];
          if (spec.has_kink() && (v > 0.0L) != (base_x.at(r, j) > 0.0)) ok = false;
          rows[r][j] = act_value_ld(spec, v);
        }
      }
    } else {
      const auto* dense = dynamic_cast<const DenseLayer*>(&ctx.net.layer(i));
      const Tensor& w = ctx.params.at(dense->weight_name());
      const Tensor& b = ctx.params.at(dense->bias_name());
      const std::size_t in = dense->in_features(), units = dense->units();
      for (std::size_t r = 0; r < batch; ++r) {
        ldvec out(units);
        for (std::size_t j = 0; j < units; ++j) {
          long double s = 0.0L;
          for (std::size_t k = 0; k < in; ++k)
            s += rows[r][k] * static_cast<long double>(w[k * units + j]);
          out[j] = s + static_cast<long double>(b[j]);
        }
        rows[r] = std::move(out);
      }
    }
  }

  long double total = 0.0L;
  for (std::size_t r = 0; r < batch; ++r) {
    const ldvec& z = rows[r];
    long double mx = z[0];
    for (long double v : z) mx = std::max(mx, v);
    long double sum = 0.0L;
    for (long double v : z) sum += expl(v - mx);
    total += mx + logl(sum) - z[static_cast<std::size_t>(ctx.labels[r])];
  }
  return total / static_cast<long double>(batch);
}

// Base dense output recomputed once in long double; each parameter of the
// layer then perturbs a single column incrementally (the dense map is linear
// in its parameters, so base + x_r * (+-h) is the exact perturbed value).
struct DenseLdPlan {
  std::vector<ldvec> base_out;  // [batch][units]
  const Tensor* x = nullptr;
};

DenseLdPlan make_dense_plan(const FdContext& ctx, std::size_t li, const DenseLayer& dense) {
  DenseLdPlan plan;
  plan.x = &ctx.base.layers[li].get("x");
  const Tensor& w = ctx.params.at(dense.weight_name());
  const Tensor& b = ctx.params.at(dense.bias_name());
  const std::size_t batch = plan.x->dim(0), in = dense.in_features(), units = dense.units();
  plan.base_out.assign(batch, ldvec(units));
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t j = 0; j < units; ++j) {
      long double s = 0.0L;
      for (std::size_t k = 0; k < in; ++k)
        s += static_cast<long double>(plan.x->at(r, k)) * static_cast<long double>(w[k * units + j]);
      plan.base_out[r][j] = s + static_cast<long double>(b[j]);
    }
  return plan;
}

double dense_ld_numeric(const FdContext& ctx, std::size_t li, const DenseLdPlan& plan,
                        bool is_weight, std::size_t row_in, std::size_t col, double h, bool& ok) {
  const std::size_t batch = plan.base_out.size();
  long double loss[2];
  for (int side = 0; side < 2; ++side) {
    const long double delta = side == 0 ? h : -h;
    std::vector<ldvec> rows = plan.base_out;
    for (std::size_t r = 0; r < batch; ++r)
      rows[r][col] += is_weight ? static_cast<long double>(plan.x->at(r, row_in)) * delta : delta;
    loss[side] = ld_suffix_loss(ctx, li + 1, rows, ok);
    if (!ok) return 0.0;
  }
  return static_cast<double>((loss[0] - loss[1]) / (2.0L * static_cast<long double>(h)));
}

}  // namespace

GradCheckReport grad_check(const Network& net, ParamStore& params, const Tensor& batch,
                           const std::vector<int>& labels, double h, double tolerance,
                           std::size_t max_params) {
  if (!(h > 0.0)) throw_config("grad_check: h must be positive");
  const std::size_t total = params.scalar_count(/*trainable_only=*/true);
  if (total > max_params)
    throw_config("grad_check: " + std::to_string(total) +
                 " parameters exceed the exhaustive-perturbation cap of " +
                 std::to_string(max_params));

  ForwardCache base;
  net.forward(batch, params, base, Mode::train_static);
  auto [base_loss, grads] = net.backward(params, base, labels);
  (void)base_loss;

  GradCheckReport report;
  report.param_count = total;
  FdContext ctx{net, params, base, labels};

  auto record = [&](const std::string& pname, std::size_t j, double analytic, double numeric) {
    const double rel =
        std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    ++report.n_checked;
    if (rel > tolerance) ++report.n_exceeding;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_param = pname + "[" + std::to_string(j) + "]";
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  };

  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    const auto* dense = dynamic_cast<const DenseLayer*>(&net.layer(li));
    const bool use_ld = dense != nullptr && ld_suffix_applicable(net, li);
    DenseLdPlan plan;
    if (use_ld) plan = make_dense_plan(ctx, li, *dense);

    for (const std::string& pname : net.layer_param_names(li)) {
      if (!params.trainable(pname)) continue;
      Tensor& value = params.at(pname);
      const Tensor& analytic = grads.at(pname);

      if (use_ld) {
        const bool is_weight = pname == dense->weight_name();
        for (std::size_t j = 0; j < value.size(); ++j) {
          const std::size_t col = is_weight ? j % dense->units() : j;
          const std::size_t row_in = is_weight ? j / dense->units() : 0;
          bool ok = true;
          const double numeric = dense_ld_numeric(ctx, li, plan, is_weight, row_in, col, h, ok);
          if (!ok) {
            ++report.n_skipped_branch;
            continue;
          }
          record(pname, j, analytic[j], numeric);
        }
        continue;
      }

      for (std::size_t j = 0; j < value.size(); ++j) {
        const double saved = value[j];
        bool ok_plus = true, ok_minus = true;
        value[j] = saved + h;
        const double lp = partial_loss(ctx, li, ok_plus);
        value[j] = saved - h;
        const double lm = partial_loss(ctx, li, ok_minus);
        value[j] = saved;
        if (!ok_plus || !ok_minus) {
          ++report.n_skipped_branch;
          continue;
        }
        record(pname, j, analytic[j], (lp - lm) / (2.0 * h));
      }
    }
  }
  return report;
}

}  // namespace nlr

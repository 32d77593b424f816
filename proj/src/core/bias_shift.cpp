#include "core/bias_shift.hpp"

#include <cmath>
#include <functional>

#include "core/common.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace nlr {

void BiasShiftConfig::validate() const {
  if (depth < 1 || width < 1 || batch < 1)
    throw_config("bias-shift: depth, width and batch must all be >= 1");
  if (weight_std < 0.0) throw_config("bias-shift: weight_std must be >= 0");
  if (!std::isfinite(bias_init)) throw_config("bias-shift: bias_init must be finite");
  act.validate();
}

namespace {

// Kahan-compensated sum; keeps the degenerate all-equal case bit-exact.
double csum(const double* p, std::size_t n, const std::function<double(double)>& f) {
  double sum = 0.0, c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = f(p[i]) - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

LayerStats measure(const Tensor& a, std::size_t layer_index) {
  const std::size_t batch = a.dim(0), width = a.dim(1), n = a.size();
  LayerStats s;
  s.layer_index = layer_index;

  s.mean_activation =
      csum(a.data(), n, [](double v) { return v; }) / static_cast<double>(n);
  const double mean = s.mean_activation;
  const double var = csum(a.data(), n, [mean](double v) { return (v - mean) * (v - mean); }) /
                     static_cast<double>(n);
  s.std_activation = std::sqrt(var);

  std::size_t active_total = 0;
  double count_sum = 0.0, count_sq = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    std::size_t row_active = 0;
    for (std::size_t cidx = 0; cidx < width; ++cidx)
      if (a.at(r, cidx) > 0.0) ++row_active;
    active_total += row_active;
    count_sum += static_cast<double>(row_active);
    count_sq += static_cast<double>(row_active) * static_cast<double>(row_active);
  }
  s.active_fraction = static_cast<double>(active_total) / static_cast<double>(n);
  s.mean_active_count = count_sum / static_cast<double>(batch);
  s.std_active_count =
      std::sqrt(std::max(0.0, count_sq / static_cast<double>(batch) -
                                  s.mean_active_count * s.mean_active_count));
  return s;
}

}  // namespace

BiasShiftResult simulate_bias_shift(const BiasShiftConfig& config) {
  config.validate();
  RngStream root(config.seed);
  RngStream input_rng = root.split(0);

  BiasShiftResult result;
  Tensor a = sample_normal(input_rng, {config.batch, config.width}, 0.0, 1.0);
  for (std::size_t l = 1; l <= config.depth; ++l) {
    RngStream layer_rng = root.split(l);
    try {
      Tensor w = sample_normal(layer_rng, {config.width, config.width}, 0.0, config.weight_std);
      Tensor z = map(matmul(a, w), [&](double v) { return v + config.bias_init; });
      a = act_forward(config.act, z);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::internal) throw;
      result.diverged_layer = l;
      break;
    }
    result.stats.push_back(measure(a, l));
  }
  return result;
}

double heteroscedasticity_metric(const std::vector<LayerStats>& stats) {
  if (stats.size() < 2)
    throw_config("heteroscedasticity_metric: needs at least 2 layers, got " +
                 std::to_string(stats.size()));
  double lo = stats[0].std_activation, hi = stats[0].std_activation;
  for (const auto& s : stats) {
    lo = std::min(lo, s.std_activation);
    hi = std::max(hi, s.std_activation);
  }
  if (hi == lo) return 1.0;
  return hi / std::max(lo, 1e-12);
}

MeanShiftReport mean_shift_report(const std::vector<LayerStats>& stats) {
  if (stats.empty()) throw_config("mean_shift_report: needs at least 1 layer");
  MeanShiftReport r;
  for (const auto& s : stats) {
    r.mean_of_layer_means += s.mean_activation;
    r.max_abs_layer_mean = std::max(r.max_abs_layer_mean, std::abs(s.mean_activation));
  }
  r.mean_of_layer_means /= static_cast<double>(stats.size());
  return r;
}

CsvBuilder bias_shift_csv(const BiasShiftConfig& config, const BiasShiftResult& result) {
  CsvBuilder csv;
  csv.comment("simulate-bias-shift activation=" + config.act.label() +
              " depth=" + std::to_string(config.depth) + " width=" + std::to_string(config.width) +
              " batch=" + std::to_string(config.batch) + " bias_init=" + fmt_double(config.bias_init) +
              " weight_std=" + fmt_double(config.weight_std) + " seed=" + std::to_string(config.seed));
  if (result.diverged_layer)
    csv.comment("diverged_at_layer=" + std::to_string(*result.diverged_layer));
  csv.header({"layer", "mean_act", "std_act", "active_frac", "mean_active_count",
              "std_active_count"});
  for (const auto& s : result.stats)
    csv.row()
        .cell(s.layer_index)
        .cell(s.mean_activation)
        .cell(s.std_activation)
        .cell(s.active_fraction)
        .cell(s.mean_active_count)
        .cell(s.std_active_count);
  return csv;
}

}  // namespace nlr

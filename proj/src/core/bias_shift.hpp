#pragma once

#include <optional>
#include <vector>

#include "core/activations.hpp"
#include "core/csv.hpp"

namespace nlr {

// One forward pass through a randomly initialized fully-connected stack, no
// training: measures how the post-activation distribution drifts and spreads
// from layer to layer.
struct BiasShiftConfig {
  std::size_t depth = 10;   // hidden layers
  std::size_t width = 100;  // neurons per layer
  std::size_t batch = 100;  // input rows
  double bias_init = 0.1;
  double weight_std = 1.5;  // interpreted as a standard deviation
  ActivationSpec act;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LayerStats {
  std::size_t layer_index = 0;     // 1-based
  double mean_activation = 0.0;    // over all batch x width outputs
  double std_activation = 0.0;     // population std over the same values
  double active_fraction = 0.0;    // share of strictly positive outputs
  double mean_active_count = 0.0;  // per-row active neurons, mean over the batch
  double std_active_count = 0.0;
};

struct BiasShiftResult {
  std::vector<LayerStats> stats;              // one row per finite layer
  std::optional<std::size_t> diverged_layer;  // 1-based, set when a layer overflowed
};

// Input batch is standard normal; each hidden layer applies x*W + bias_init
// followed by the activation, with W ~ N(0, weight_std^2). Overflow at some
// depth (a real outcome for wide-weight relu stacks) truncates the record at
// the last finite layer instead of failing the run.
BiasShiftResult simulate_bias_shift(const BiasShiftConfig& config);

// max over layers of std_activation divided by min over layers (clamped
// below at 1e-12); exactly 1 when all spreads are equal. This ratio is this
// project's operational measure of cross-layer heteroscedasticity.
double heteroscedasticity_metric(const std::vector<LayerStats>& stats);  // needs >= 2 layers

struct MeanShiftReport {
  double mean_of_layer_means = 0.0;
  double max_abs_layer_mean = 0.0;
};

MeanShiftReport mean_shift_report(const std::vector<LayerStats>& stats);  // needs >= 1 layer

// CSV: config echo in comments, then
// layer,mean_act,std_act,active_frac,mean_active_count,std_active_count
CsvBuilder bias_shift_csv(const BiasShiftConfig& config, const BiasShiftResult& result);

}  // namespace nlr

#pragma once

#include <string>
#include <vector>

#include "core/adam.hpp"
#include "core/dataset.hpp"
#include "core/presets.hpp"

namespace nlr {

struct DataSpec {
  std::string dataset = "mnist";  // "mnist" | "cifar10"
  std::size_t n_train = 2000;
  std::size_t n_test = 1000;
  bool stratified = true;
  std::uint64_t seed = 17;
};

// Resolves the conventional file names under data_dir and subsamples.
// mnist: train-images-idx3-ubyte / train-labels-idx1-ubyte.
// cifar10: data_batch_1.bin .. data_batch_5.bin (whichever exist).
std::pair<Dataset, Dataset> load_split(const DataSpec& spec, const std::string& data_dir);

struct EvalPoint {
  std::size_t iteration = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

struct ExperimentRecord {
  std::string run_id;
  std::string model;
  ActivationSpec act;
  TrainConfig config;
  std::vector<EvalPoint> evals;
  double final_test_acc = 0.0;
  bool converged = false;
  bool nonfinite = false;      // loss or parameters left the finite range
  std::size_t stopped_at = 0;  // iterations actually executed
};

struct TrainOptions {
  std::string preset = "simple_cnn";
  PresetOptions preset_opts;
  ActivationSpec act;
  TrainConfig config;
  std::size_t eval_every = 200;
  double converge_threshold = 0.2;  // 2x chance on 10 classes
  std::string init_override;        // "", "xavier" or "msra"
  std::string checkpoint_out;
};

// One training run. A non-finite loss or parameter update terminates the
// run early with converged=false and the record truncated at that point;
// divergence is a recorded outcome, not an error.
ExperimentRecord train_run(const TrainOptions& opts, const Dataset& train, const Dataset& test);

// Mean over repeats uses the population convention, so a single repeat
// reports std 0.
struct AggregateRow {
  double mean_acc = 0.0;
  double std_acc = 0.0;
  std::size_t converged = 0;
  std::size_t repeats = 0;
};

struct BetaSweepRow : AggregateRow {
  double beta = 0.0;
};

// One run per (beta, repeat); repeat r of grid entry R seeds from
// split(base_seed, R, r).
std::vector<BetaSweepRow> beta_sweep(const TrainOptions& base, const Dataset& train,
                                     const Dataset& test, const std::vector<double>& betas,
                                     std::size_t repeats);

struct LrContrastCell : AggregateRow {
  ActivationSpec act;
  double lr = 0.0;
};

std::vector<LrContrastCell> lr_contrast(const TrainOptions& base, const Dataset& train,
                                        const Dataset& test,
                                        const std::vector<ActivationSpec>& activations,
                                        const std::vector<double>& lrs, std::size_t repeats);

struct AblateRow : AggregateRow {
  std::array<int, 3> flags{0, 0, 0};
};

// Trains tiny_resnet once per (A,B,C) triple and repeat, triples ordered
// (0,0,0),(1,0,0),(0,1,0),(0,0,1),(1,1,0),(1,0,1),(0,1,1),(1,1,1).
std::vector<AblateRow> ablate_positions(const TrainOptions& base, const Dataset& train,
                                        const Dataset& test, std::size_t repeats);

const std::vector<std::array<int, 3>>& ablation_order();

// ---------------------------------------------------------------------------
// Command layer: every CLI subcommand maps to one of these. Each takes the
// command's JSON configuration (unknown keys are rejected), optionally
// writes a CSV, and returns a JSON summary string. These are the same entry
// points the C API exposes.

// Parses an activation description: a JSON object like
// {"kind":"nlrelu","beta":0.7} or a bare kind name.
ActivationSpec parse_activation_text(const std::string& text);

std::string run_curve(const std::string& config_json, const std::string& out_csv);
std::string run_bias_shift(const std::string& config_json, const std::string& out_csv);
std::string run_grad_check(const std::string& config_json, const std::string& out_csv);
std::string run_train(const std::string& config_json, const std::string& data_dir,
                      const std::string& out_csv);
std::string run_beta_sweep(const std::string& config_json, const std::string& data_dir,
                           const std::string& out_csv);
std::string run_lr_contrast(const std::string& config_json, const std::string& data_dir,
                            const std::string& out_csv);
std::string run_ablate_positions(const std::string& config_json, const std::string& data_dir,
                                 const std::string& out_csv);
std::string run_make_data(const std::string& config_json, const std::string& out_dir);

}  // namespace nlr

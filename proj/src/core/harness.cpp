#include "core/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>

#include "core/bias_shift.hpp"
#include "core/checkpoint.hpp"
#include "core/common.hpp"
#include "core/csv.hpp"
#include "core/grad_check.hpp"
#include "core/synth_data.hpp"

namespace nlr {

using njson = nlohmann::json;

// ------------------------------------------------------------------ data

std::pair<Dataset, Dataset> load_split(const DataSpec& spec, const std::string& data_dir) {
  Dataset full;
  if (spec.dataset == "mnist") {
    full = load_mnist(data_dir + "/train-images-idx3-ubyte", data_dir + "/train-labels-idx1-ubyte");
  } else if (spec.dataset == "cifar10") {
    std::vector<std::string> paths;
    for (int i = 1; i <= 5; ++i) {
      const std::string p = data_dir + "/data_batch_" + std::to_string(i) + ".bin";
      if (std::filesystem::exists(p)) paths.push_back(p);
    }
    if (paths.empty()) throw_io("no data_batch_*.bin files under '" + data_dir + "'");
    full = load_cifar10(paths);
  } else {
    throw_config("unknown dataset '" + spec.dataset + "' (mnist, cifar10)");
  }
  return subset(full, spec.n_train, spec.n_test, spec.seed, spec.stratified);
}

// ------------------------------------------------------------------ training

namespace {

Tensor batch_images(const Dataset& ds, const std::vector<std::size_t>& idx) {
  const Dataset picked = gather(ds, idx);
  return picked.images;
}

std::vector<int> batch_labels(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(ds.labels[i]);
  return out;
}

// Deterministic epoch-reshuffled batch index stream.
class Batcher {
 public:
  Batcher(std::size_t n, std::size_t batch, RngStream base)
      : n_(n), batch_(std::min(batch, n)), base_(base), order_(n) {
    for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    reshuffle();
  }

  std::vector<std::size_t> next() {
    if (pos_ + batch_ > n_) reshuffle();
    std::vector<std::size_t> idx(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_));
    pos_ += batch_;
    return idx;
  }

 private:
  void reshuffle() {
    RngStream r = base_.split(epoch_++);
    r.shuffle(order_);
    pos_ = 0;
  }

  std::size_t n_, batch_;
  RngStream base_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::uint64_t epoch_ = 0;
};

double evaluate(const Network& net, ParamStore& params, const Dataset& ds) {
  if (ds.empty()) return 0.0;
  const std::size_t chunk = 250;
  std::size_t hits = 0;
  for (std::size_t start = 0; start < ds.n(); start += chunk) {
    const std::size_t stop = std::min(ds.n(), start + chunk);
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < stop; ++i) idx.push_back(i);
    ForwardCache cache;
    const Tensor probs = net.forward(batch_images(ds, idx), params, cache, Mode::infer);
    const std::vector<int> labels = batch_labels(ds, idx);
    hits += static_cast<std::size_t>(
        std::lround(accuracy(probs, labels) * static_cast<double>(labels.size())));
  }
  return static_cast<double>(hits) / static_cast<double>(ds.n());
}

Init resolve_init(const TrainOptions& opts) {
  if (opts.init_override.empty()) return preset_default_init(opts.preset);
  if (opts.init_override == "xavier") return Init::xavier;
  if (opts.init_override == "msra") return Init::msra;
  throw_config("unknown init '" + opts.init_override + "' (xavier, msra)");
}

}  // namespace

ExperimentRecord train_run(const TrainOptions& opts, const Dataset& train, const Dataset& test) {
  opts.config.validate();
  opts.act.validate();
  if (train.empty()) throw_config("train_run: empty training set");

  ExperimentRecord rec;
  rec.model = opts.preset;
  rec.act = opts.act;
  rec.config = opts.config;
  rec.run_id = opts.preset + ":" + opts.act.label() + ":lr=" + fmt_double(opts.config.lr) +
               ":seed=" + std::to_string(opts.config.seed);

  const auto specs =
      make_preset(opts.preset, train.sample_shape(), train.num_classes, opts.act, opts.preset_opts);
  RngStream init_rng = RngStream(opts.config.seed).split(100);
  auto [net, params] = build(specs, train.sample_shape(), resolve_init(opts), init_rng);
  AdamState adam(params);
  Batcher batcher(train.n(), opts.config.batch_size, RngStream(opts.config.seed).split(200));

  const auto first_idx = batcher.next();
  {
    // Iteration-0 point: untouched parameters, first batch for train metrics.
    ForwardCache cache;
    const Tensor probs =
        net.forward(batch_images(train, first_idx), params, cache, Mode::train_static);
    const std::vector<int> labels = batch_labels(train, first_idx);
    rec.evals.push_back(
        {0, net.loss(cache, labels), accuracy(probs, labels), evaluate(net, params, test)});
  }

  Batcher run_batcher(train.n(), opts.config.batch_size, RngStream(opts.config.seed).split(200));
  for (std::size_t iter = 1; iter <= opts.config.iterations; ++iter) {
    const auto idx = run_batcher.next();
    try {
      ForwardCache cache;
      const Tensor probs = net.forward(batch_images(train, idx), params, cache, Mode::train);
      const std::vector<int> labels = batch_labels(train, idx);
      auto [loss, grads] = net.backward(params, cache, labels);
      const double train_acc = accuracy(probs, labels);
      adam.step(params, grads, opts.config);
      rec.stopped_at = iter;
      if (iter % opts.eval_every == 0 || iter == opts.config.iterations)
        rec.evals.push_back({iter, loss, train_acc, evaluate(net, params, test)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::internal) throw;
      rec.nonfinite = true;
      rec.stopped_at = iter - 1;
      break;
    }
  }

  rec.final_test_acc = rec.evals.back().test_acc;
  rec.converged = !rec.nonfinite && rec.final_test_acc >= opts.converge_threshold;
  if (!opts.checkpoint_out.empty() && !rec.nonfinite)
    save_checkpoint(params, opts.checkpoint_out);
  return rec;
}

namespace {

AggregateRow aggregate(const std::vector<ExperimentRecord>& records) {
  AggregateRow row;
  row.repeats = records.size();
  double sum = 0.0, sumsq = 0.0;
  for (const auto& r : records) {
    sum += r.final_test_acc;
    sumsq += r.final_test_acc * r.final_test_acc;
    if (r.converged) ++row.converged;
  }
  const double n = static_cast<double>(records.size());
  row.mean_acc = sum / n;
  row.std_acc = std::sqrt(std::max(0.0, sumsq / n - row.mean_acc * row.mean_acc));
  return row;
}

std::uint64_t cell_seed(std::uint64_t base, std::uint64_t run, std::uint64_t repeat) {
  return RngStream(base).split(run).split(repeat).seed();
}

}  // namespace

std::vector<BetaSweepRow> beta_sweep(const TrainOptions& base, const Dataset& train,
                                     const Dataset& test, const std::vector<double>& betas,
                                     std::size_t repeats) {
  if (repeats < 1) throw_config("beta_sweep: repeats must be >= 1");
  for (double b : betas)
    if (!(b > 0.0)) throw_config("beta_sweep: beta values must be positive");
  std::vector<BetaSweepRow> rows;
  for (std::size_t bi = 0; bi < betas.size(); ++bi) {
    std::vector<ExperimentRecord> records;
    for (std::size_t r = 0; r < repeats; ++r) {
      TrainOptions opts = base;
      opts.act = ActivationSpec::nlrelu(betas[bi]);
      opts.config.seed = cell_seed(base.config.seed, bi, r);
      records.push_back(train_run(opts, train, test));
    }
    BetaSweepRow row;
    static_cast<AggregateRow&>(row) = aggregate(records);
    row.beta = betas[bi];
    rows.push_back(row);
  }
  return rows;
}

std::vector<LrContrastCell> lr_contrast(const TrainOptions& base, const Dataset& train,
                                        const Dataset& test,
                                        const std::vector<ActivationSpec>& activations,
                                        const std::vector<double>& lrs, std::size_t repeats) {
  if (repeats < 1) throw_config("lr_contrast: repeats must be >= 1");
  std::vector<LrContrastCell> cells;
  for (std::size_t ai = 0; ai < activations.size(); ++ai) {
    for (std::size_t li = 0; li < lrs.size(); ++li) {
      const std::size_t run_index = ai * lrs.size() + li;
      std::vector<ExperimentRecord> records;
      for (std::size_t r = 0; r < repeats; ++r) {
        TrainOptions opts = base;
        opts.act = activations[ai];
        opts.config.lr = lrs[li];
        opts.config.seed = cell_seed(base.config.seed, run_index, r);
        records.push_back(train_run(opts, train, test));
      }
      LrContrastCell cell;
      static_cast<AggregateRow&>(cell) = aggregate(records);
      cell.act = activations[ai];
      cell.lr = lrs[li];
      cells.push_back(cell);
    }
  }
  return cells;
}

const std::vector<std::array<int, 3>>& ablation_order() {
  static const std::vector<std::array<int, 3>> order = {
      {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
  return order;
}

std::vector<AblateRow> ablate_positions(const TrainOptions& base, const Dataset& train,
                                        const Dataset& test, std::size_t repeats) {
  if (repeats < 1) throw_config("ablate_positions: repeats must be >= 1");
  std::vector<AblateRow> rows;
  const auto& order = ablation_order();
  for (std::size_t fi = 0; fi < order.size(); ++fi) {
    std::vector<ExperimentRecord> records;
    for (std::size_t r = 0; r < repeats; ++r) {
      TrainOptions opts = base;
      opts.preset = "tiny_resnet";
      opts.preset_opts.flags = order[fi];
      opts.config.seed = cell_seed(base.config.seed, fi, r);
      records.push_back(train_run(opts, train, test));
    }
    AblateRow row;
    static_cast<AggregateRow&>(row) = aggregate(records);
    row.flags = order[fi];
    rows.push_back(row);
  }
  return rows;
}

// ------------------------------------------------------------------ configs

namespace {

njson parse_json(const std::string& text) {
  try {
    return njson::parse(text.empty() ? "{}" : text);
  } catch (const njson::exception& e) {
    throw_config(std::string("config is not valid JSON: ") + e.what());
  }
}

void check_keys(const njson& obj, const std::string& where,
                const std::vector<std::string>& allowed) {
  if (!obj.is_object()) throw_config("config: '" + where + "' must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      std::string known;
      for (const auto& k : allowed) known += (known.empty() ? "" : ", ") + k;
      throw_config("config: unknown key '" + key + "' in " + where + " (known keys: " + known + ")");
    }
  }
}

template <typename T>
T get_or(const njson& obj, const char* key, T def) {
  if (!obj.contains(key)) return def;
  try {
    return obj.at(key).get<T>();
  } catch (const njson::exception&) {
    throw_config("config: key '" + std::string(key) + "' has the wrong type");
  }
}

ActivationSpec parse_activation(const njson& j, const std::string& where) {
  if (j.is_string()) {
    ActivationSpec s;
    s.kind = act_from_name(j.get<std::string>());
    return s;
  }
  check_keys(j, where, {"kind", "beta", "slope", "initial_slope", "alpha"});
  if (!j.contains("kind")) throw_config("config: " + where + " needs a 'kind'");
  ActivationSpec s;
  s.kind = act_from_name(j.at("kind").get<std::string>());
  s.beta = get_or(j, "beta", s.beta);
  s.slope = get_or(j, "slope", s.slope);
  s.initial_slope = get_or(j, "initial_slope", s.initial_slope);
  s.alpha = get_or(j, "alpha", s.alpha);
  s.validate();
  return s;
}

TrainConfig parse_train_config(const njson& j, const std::string& where) {
  check_keys(j, where, {"lr", "batch_size", "iterations", "beta1", "beta2", "eps", "seed"});
  TrainConfig cfg;
  cfg.lr = get_or(j, "lr", cfg.lr);
  cfg.batch_size = get_or(j, "batch_size", cfg.batch_size);
  cfg.iterations = get_or(j, "iterations", cfg.iterations);
  cfg.beta1 = get_or(j, "beta1", cfg.beta1);
  cfg.beta2 = get_or(j, "beta2", cfg.beta2);
  cfg.eps = get_or(j, "eps", cfg.eps);
  cfg.seed = get_or(j, "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

DataSpec parse_data_spec(const njson& j, const std::string& where, const DataSpec& defaults) {
  check_keys(j, where, {"dataset", "n_train", "n_test", "stratified", "seed"});
  DataSpec d = defaults;
  d.dataset = get_or<std::string>(j, "dataset", d.dataset);
  d.n_train = get_or(j, "n_train", d.n_train);
  d.n_test = get_or(j, "n_test", d.n_test);
  d.stratified = get_or(j, "stratified", d.stratified);
  d.seed = get_or(j, "seed", d.seed);
  return d;
}

// Shared model keys for the training-style commands.
void parse_model_keys(const njson& j, TrainOptions& opts) {
  opts.preset = get_or<std::string>(j, "preset", opts.preset);
  if (!is_known_preset(opts.preset)) throw_config("unknown preset '" + opts.preset + "'");
  opts.preset_opts.pool = get_or(j, "pool", opts.preset_opts.pool);
  opts.preset_opts.conv_filters = get_or(j, "conv_filters", opts.preset_opts.conv_filters);
  opts.preset_opts.dense_units = get_or(j, "dense_units", opts.preset_opts.dense_units);
  if (j.contains("flags")) {
    const auto f = j.at("flags");
    if (!f.is_array() || f.size() != 3) throw_config("config: 'flags' must be [A, B, C]");
    for (std::size_t i = 0; i < 3; ++i) opts.preset_opts.flags[i] = f.at(i).get<int>();
  }
  opts.eval_every = get_or(j, "eval_every", opts.eval_every);
  if (opts.eval_every == 0) throw_config("config: eval_every must be positive");
  opts.converge_threshold = get_or(j, "converge_threshold", opts.converge_threshold);
  opts.init_override = get_or<std::string>(j, "init", opts.init_override);
  if (j.contains("train")) opts.config = parse_train_config(j.at("train"), "train");
  if (j.contains("activation")) opts.act = parse_activation(j.at("activation"), "activation");
}

void echo_model(CsvBuilder& csv, const TrainOptions& opts, const DataSpec& data) {
  csv.comment("model preset=" + opts.preset + " activation=" + opts.act.label() +
              " pool=" + std::to_string(opts.preset_opts.pool ? 1 : 0) +
              " conv_filters=" + std::to_string(opts.preset_opts.conv_filters) +
              " dense_units=" + std::to_string(opts.preset_opts.dense_units) + " flags=(" +
              std::to_string(opts.preset_opts.flags[0]) + "," +
              std::to_string(opts.preset_opts.flags[1]) + "," +
              std::to_string(opts.preset_opts.flags[2]) + ")" +
              (opts.init_override.empty() ? "" : " init=" + opts.init_override));
  csv.comment("train lr=" + fmt_double(opts.config.lr) +
              " batch_size=" + std::to_string(opts.config.batch_size) +
              " iterations=" + std::to_string(opts.config.iterations) +
              " beta1=" + fmt_double(opts.config.beta1) + " beta2=" + fmt_double(opts.config.beta2) +
              " eps=" + fmt_double(opts.config.eps) + " seed=" + std::to_string(opts.config.seed) +
              " eval_every=" + std::to_string(opts.eval_every) +
              " converge_threshold=" + fmt_double(opts.converge_threshold));
  csv.comment("data dataset=" + data.dataset + " n_train=" + std::to_string(data.n_train) +
              " n_test=" + std::to_string(data.n_test) +
              " stratified=" + std::to_string(data.stratified ? 1 : 0) +
              " seed=" + std::to_string(data.seed));
}

njson record_json(const ExperimentRecord& r) {
  return njson{{"run_id", r.run_id},
               {"seed", r.config.seed},
               {"final_test_acc", r.final_test_acc},
               {"converged", r.converged},
               {"nonfinite", r.nonfinite},
               {"stopped_at", r.stopped_at}};
}

}  // namespace

// ------------------------------------------------------------------ commands

ActivationSpec parse_activation_text(const std::string& text) {
  std::string trimmed = text;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front())))
    trimmed.erase(trimmed.begin());
  if (trimmed.empty()) return ActivationSpec::nlrelu();
  if (trimmed.front() != '{' && trimmed.front() != '"') {
    ActivationSpec s;
    s.kind = act_from_name(trimmed);
    return s;
  }
  return parse_activation(parse_json(trimmed), "activation");
}

std::string run_curve(const std::string& config_json, const std::string& out_csv) {
  const njson j = parse_json(config_json);
  check_keys(j, "curve config", {"activation", "which", "x_min", "x_max", "n_points"});
  const ActivationSpec act =
      j.contains("activation") ? parse_activation(j.at("activation"), "activation")
                               : ActivationSpec::nlrelu();
  const std::string which = get_or<std::string>(j, "which", "value");
  if (which != "value" && which != "derivative")
    throw_config("curve: 'which' must be 'value' or 'derivative'");
  const double x_min = get_or(j, "x_min", -5.0);
  const double x_max = get_or(j, "x_max", 5.0);
  const std::size_t n_points = get_or<std::size_t>(j, "n_points", 201);

  const auto pts = emit_curve(act, x_min, x_max, n_points,
                              which == "value" ? CurveKind::value : CurveKind::derivative);
  if (!out_csv.empty()) {
    CsvBuilder csv;
    csv.comment("curve activation=" + act.label() + " which=" + which +
                " x_min=" + fmt_double(x_min) + " x_max=" + fmt_double(x_max) +
                " n_points=" + std::to_string(n_points));
    csv.header({"x", "value"});
    for (const auto& p : pts) csv.row().cell(p.x).cell(p.y);
    csv.write(out_csv);
  }
  njson result{{"command", "curve"},
               {"activation", act.label()},
               {"which", which},
               {"points", pts.size()},
               {"y_first", pts.front().y},
               {"y_last", pts.back().y}};
  if (!out_csv.empty()) result["csv"] = out_csv;
  return result.dump();
}

std::string run_bias_shift(const std::string& config_json, const std::string& out_csv) {
  const njson j = parse_json(config_json);
  check_keys(j, "simulate-bias-shift config",
             {"activation", "depth", "width", "batch", "bias_init", "weight_std", "seed"});
  BiasShiftConfig cfg;
  cfg.act = j.contains("activation") ? parse_activation(j.at("activation"), "activation")
                                     : ActivationSpec::nlrelu();
  cfg.depth = get_or(j, "depth", cfg.depth);
  cfg.width = get_or(j, "width", cfg.width);
  cfg.batch = get_or(j, "batch", cfg.batch);
  cfg.bias_init = get_or(j, "bias_init", cfg.bias_init);
  cfg.weight_std = get_or(j, "weight_std", cfg.weight_std);
  cfg.seed = get_or(j, "seed", cfg.seed);

  const BiasShiftResult result = simulate_bias_shift(cfg);
  if (!out_csv.empty()) bias_shift_csv(cfg, result).write(out_csv);

  njson out{{"command", "simulate-bias-shift"},
            {"activation", cfg.act.label()},
            {"layers", result.stats.size()}};
  if (result.diverged_layer)
    out["diverged_at_layer"] = *result.diverged_layer;
  if (result.stats.size() >= 2) out["heteroscedasticity"] = heteroscedasticity_metric(result.stats);
  if (!result.stats.empty()) {
    const MeanShiftReport ms = mean_shift_report(result.stats);
    out["mean_of_layer_means"] = ms.mean_of_layer_means;
    out["max_abs_layer_mean"] = ms.max_abs_layer_mean;
  }
  if (!out_csv.empty()) out["csv"] = out_csv;
  return out.dump();
}

std::string run_grad_check(const std::string& config_json, const std::string& out_csv) {
  const njson j = parse_json(config_json);
  check_keys(j, "grad-check config",
             {"preset", "activation", "pool", "conv_filters", "dense_units", "flags", "input",
              "batch", "h", "tolerance", "seed", "max_params"});
  TrainOptions opts;
  opts.preset_opts.conv_filters = 8;
  opts.preset_opts.dense_units = 64;
  opts.preset = get_or<std::string>(j, "preset", "simple_cnn");
  if (!is_known_preset(opts.preset)) throw_config("unknown preset '" + opts.preset + "'");
  opts.preset_opts.pool = get_or(j, "pool", true);
  opts.preset_opts.conv_filters = get_or(j, "conv_filters", opts.preset_opts.conv_filters);
  opts.preset_opts.dense_units = get_or(j, "dense_units", opts.preset_opts.dense_units);
  if (j.contains("flags")) {
    const auto f = j.at("flags");
    if (!f.is_array() || f.size() != 3) throw_config("config: 'flags' must be [A, B, C]");
    for (std::size_t i = 0; i < 3; ++i) opts.preset_opts.flags[i] = f.at(i).get<int>();
  }
  if (j.contains("activation")) opts.act = parse_activation(j.at("activation"), "activation");
  const std::string input = get_or<std::string>(j, "input", "mnist");
  if (input != "mnist" && input != "cifar10")
    throw_config("grad-check: 'input' must be 'mnist' or 'cifar10'");
  const Shape sample = input == "mnist" ? Shape{1, 28, 28} : Shape{3, 32, 32};
  const std::size_t batch = get_or<std::size_t>(j, "batch", 4);
  const double h = get_or(j, "h", 1e-5);
  const double tolerance = get_or(j, "tolerance", 1e-5);
  const std::uint64_t seed = get_or<std::uint64_t>(j, "seed", 7);
  const std::size_t max_params = get_or<std::size_t>(j, "max_params", 200000);

  const auto specs = make_preset(opts.preset, sample, 10, opts.act, opts.preset_opts);
  RngStream rng(seed);
  RngStream init_rng = rng.split(0);
  auto [net, params] = build(specs, sample, preset_default_init(opts.preset), init_rng);

  RngStream data_rng = rng.split(1);
  Shape batch_shape = sample;
  batch_shape.insert(batch_shape.begin(), batch);
  const Tensor images = sample_normal(data_rng, batch_shape, 0.0, 1.0);
  std::vector<int> labels;
  RngStream label_rng = rng.split(2);
  for (std::size_t i = 0; i < batch; ++i)
    labels.push_back(static_cast<int>(label_rng.next_below(10)));

  const GradCheckReport report = grad_check(net, params, images, labels, h, tolerance, max_params);

  if (!out_csv.empty()) {
    CsvBuilder csv;
    csv.comment("grad-check preset=" + opts.preset + " activation=" + opts.act.label() +
                " batch=" + std::to_string(batch) + " h=" + fmt_double(h) +
                " tolerance=" + fmt_double(tolerance) + " seed=" + std::to_string(seed));
    csv.header({"max_rel_err", "worst_param", "worst_analytic", "worst_numeric", "n_checked",
                "n_skipped_branch", "n_exceeding", "param_count"});
    csv.row()
        .cell(report.max_rel_err)
        .cell(report.worst_param)
        .cell(report.worst_analytic)
        .cell(report.worst_numeric)
        .cell(report.n_checked)
        .cell(report.n_skipped_branch)
        .cell(report.n_exceeding)
        .cell(report.param_count);
    csv.write(out_csv);
  }

  njson out{{"command", "grad-check"},
            {"activation", opts.act.label()},
            {"preset", opts.preset},
            {"max_rel_err", report.max_rel_err},
            {"worst_param", report.worst_param},
            {"n_checked", report.n_checked},
            {"n_skipped_branch", report.n_skipped_branch},
            {"n_exceeding", report.n_exceeding},
            {"param_count", report.param_count},
            {"pass", report.n_exceeding == 0}};
  if (!out_csv.empty()) out["csv"] = out_csv;
  return out.dump();
}

std::string run_train(const std::string& config_json, const std::string& data_dir,
                      const std::string& out_csv) {
  const njson j = parse_json(config_json);
  check_keys(j, "train config",
             {"preset", "pool", "conv_filters", "dense_units", "flags", "activation", "init",
              "train", "data", "eval_every", "converge_threshold", "repeats", "checkpoint_out"});
  TrainOptions opts;
  parse_model_keys(j, opts);
  opts.checkpoint_out = get_or<std::string>(j, "checkpoint_out", "");
  const std::size_t repeats = get_or<std::size_t>(j, "repeats", 1);
  if (repeats < 1) throw_config("config: repeats must be >= 1");
  DataSpec defaults;
  if (opts.preset == "tiny_resnet") {
    defaults.dataset = "cifar10";
    defaults.n_train = 4000;
  }
  const DataSpec data =
      parse_data_spec(j.contains("data") ? j.at("data") : njson::object(), "data", defaults);

  const auto [train, test] = load_split(data, data_dir);
  std::vector<ExperimentRecord> records;
  for (std::size_t r = 0; r < repeats; ++r) {
    TrainOptions cell = opts;
    if (repeats > 1) {
      cell.config.seed = cell_seed(opts.config.seed, 0, r);
      if (!cell.checkpoint_out.empty())
        cell.checkpoint_out += "." + std::to_string(r);
    }
    records.push_back(train_run(cell, train, test));
  }
  const AggregateRow agg = aggregate(records);

  if (!out_csv.empty()) {
    CsvBuilder csv;
    echo_model(csv, opts, data);
    csv.comment("summary mean_acc=" + fmt_double(agg.mean_acc) +
                " std_acc=" + fmt_double(agg.std_acc) + " converged_runs=" +
                std::to_string(agg.converged) + "/" + std::to_string(agg.repeats));
    csv.header({"repeat", "iteration", "train_loss", "train_acc", "test_acc"});
    for (std::size_t r = 0; r < records.size(); ++r)
      for (const auto& e : records[r].evals)
        csv.row().cell(r).cell(e.iteration).cell(e.train_loss).cell(e.train_acc).cell(e.test_acc);
    csv.write(out_csv);
  }

  njson out{{"command", "train"},
            {"mean_acc", agg.mean_acc},
            {"std_acc", agg.std_acc},
            {"converged_runs", agg.converged},
            {"repeats", agg.repeats}};
  njson recs = njson::array();
  for (const auto& r : records) recs.push_back(record_json(r));
  out["records"] = recs;
  if (!out_csv.empty()) out["csv"] = out_csv;
  if (!opts.checkpoint_out.empty()) out["checkpoint_out"] = opts.checkpoint_out;
  return out.dump();
}

std::string run_beta_sweep(const std::string& config_json, const std::string& data_dir,
                           const std::string& out_csv) {
  const njson j = parse_json(config_json);
  check_keys(j, "beta-sweep config",
             {"preset", "pool", "conv_filters", "dense_units", "betas", "repeats", "train", "data",
              "eval_every", "converge_threshold", "init"});
  TrainOptions opts;
  parse_model_keys(j, opts);
  std::vector<double> betas;
  if (j.contains("betas")) {
    for (const auto& b : j.at("betas")) betas.push_back(b.get<double>());
    if (betas.empty()) throw_config("config: 'betas' must not be empty");
  } else {
    // 0.60 .. 1.20 in steps of 0.05
    for (int i = 0; i <= 12; ++i) betas.push_back(static_cast<double>(60 + 5 * i) / 100.0);
  }
  const std::size_t repeats = get_or<std::size_t>(j, "repeats", 3);
  const DataSpec data =
      parse_data_spec(j.contains("data") ? j.at("data") : njson::object(), "data", DataSpec{});

  const auto [train, test] = load_split(data, data_dir);
  const auto rows = beta_sweep(opts, train, test, betas, repeats);

  if (!out_csv.empty()) {
    CsvBuilder csv;
    echo_model(csv, opts, data);
    csv.comment("beta-sweep betas=" + std::to_string(betas.size()) +
                " repeats=" + std::to_string(repeats));
    csv.header({"beta", "mean_acc", "std_acc", "converged", "repeats"});
    for (const auto& r : rows)
      csv.row().cell(r.beta).cell(r.mean_acc).cell(r.std_acc).cell(r.converged).cell(r.repeats);
    csv.write(out_csv);
  }

  njson out{{"command", "beta-sweep"}, {"repeats", repeats}};
  njson jrows = njson::array();
  for (const auto& r : rows)
    jrows.push_back(njson{{"beta", r.beta},
                          {"mean_acc", r.mean_acc},
                          {"std_acc", r.std_acc},
                          {"converged", r.converged},
                          {"repeats", r.repeats}});
  out["rows"] = jrows;
  if (!out_csv.empty()) out["csv"] = out_csv;
  return out.dump();
}

std::string run_lr_contrast(const std::string& config_json, const std::string& data_dir,
                            const std::string& out_csv) {
  const njson j = parse_json(config_json);
  check_keys(j, "lr-contrast config",
             {"preset", "pool", "conv_filters", "dense_units", "activations", "lrs", "repeats",
              "train", "data", "eval_every", "converge_threshold", "init"});
  TrainOptions opts;
  parse_model_keys(j, opts);
  std::vector<ActivationSpec> activations;
  if (j.contains("activations")) {
    for (const auto& a : j.at("activations"))
      activations.push_back(parse_activation(a, "activations[]"));
  } else {
    activations = {ActivationSpec::nlrelu(), ActivationSpec::relu()};
  }
  std::vector<double> lrs;
  if (j.contains("lrs"))
    for (const auto& v : j.at("lrs")) lrs.push_back(v.get<double>());
  else
    lrs = {1e-2, 1e-4};
  const std::size_t repeats = get_or<std::size_t>(j, "repeats", 5);
  const DataSpec data =
      parse_data_spec(j.contains("data") ? j.at("data") : njson::object(), "data", DataSpec{});

  const auto [train, test] = load_split(data, data_dir);
  const auto cells = lr_contrast(opts, train, test, activations, lrs, repeats);

  if (!out_csv.empty()) {
    CsvBuilder csv;
    echo_model(csv, opts, data);
    csv.comment("lr-contrast activations=" + std::to_string(activations.size()) +
                " lrs=" + std::to_string(lrs.size()) + " repeats=" + std::to_string(repeats));
    csv.header({"activation", "lr", "mean_acc", "std_acc", "converged", "repeats"});
    for (const auto& c : cells)
      csv.row()
          .cell(c.act.label())
          .cell(c.lr)
          .cell(c.mean_acc)
          .cell(c.std_acc)
          .cell(c.converged)
          .cell(c.repeats);
    csv.write(out_csv);
  }

  njson out{{"command", "lr-contrast"}, {"repeats", repeats}};
  njson jrows = njson::array();
  for (const auto& c : cells)
    jrows.push_back(njson{{"activation", c.act.label()},
                          {"lr", c.lr},
                          {"mean_acc", c.mean_acc},
                          {"std_acc", c.std_acc},
                          {"converged", c.converged},
                          {"repeats", c.repeats}});
  out["rows"] = jrows;
  if (!out_csv.empty()) out["csv"] = out_csv;
  return out.dump();
}

std::string run_ablate_positions(const std::string& config_json, const std::string& data_dir,
                                 const std::string& out_csv) {
  const njson j = parse_json(config_json);
  check_keys(j, "ablate-positions config",
             {"activation", "repeats", "train", "data", "eval_every", "converge_threshold"});
  TrainOptions opts;
  opts.preset = "tiny_resnet";
  opts.config.batch_size = 16;  // tiny_resnet desk-scale default
  opts.config.iterations = 500;
  opts.act = ActivationSpec::nlrelu();
  if (j.contains("activation")) opts.act = parse_activation(j.at("activation"), "activation");
  if (j.contains("train")) opts.config = parse_train_config(j.at("train"), "train");
  opts.eval_every = get_or(j, "eval_every", opts.eval_every);
  opts.converge_threshold = get_or(j, "converge_threshold", 0.15);
  const std::size_t repeats = get_or<std::size_t>(j, "repeats", 2);
  DataSpec defaults;
  defaults.dataset = "cifar10";
  defaults.n_train = 4000;
  const DataSpec data =
      parse_data_spec(j.contains("data") ? j.at("data") : njson::object(), "data", defaults);

  const auto [train, test] = load_split(data, data_dir);
  const auto rows = ablate_positions(opts, train, test, repeats);

  if (!out_csv.empty()) {
    CsvBuilder csv;
    echo_model(csv, opts, data);
    csv.comment("ablate-positions repeats=" + std::to_string(repeats));
    csv.header({"flag_a", "flag_b", "flag_c", "mean_acc", "std_acc", "converged", "repeats"});
    for (const auto& r : rows)
      csv.row()
          .cell(static_cast<std::size_t>(r.flags[0]))
          .cell(static_cast<std::size_t>(r.flags[1]))
          .cell(static_cast<std::size_t>(r.flags[2]))
          .cell(r.mean_acc)
          .cell(r.std_acc)
          .cell(r.converged)
          .cell(r.repeats);
    csv.write(out_csv);
  }

  njson out{{"command", "ablate-positions"}, {"repeats", repeats}};
  njson jrows = njson::array();
  for (const auto& r : rows)
    jrows.push_back(njson{{"flags", {r.flags[0], r.flags[1], r.flags[2]}},
                          {"mean_acc", r.mean_acc},
                          {"std_acc", r.std_acc},
                          {"converged", r.converged},
                          {"repeats", r.repeats}});
  out["rows"] = jrows;
  if (!out_csv.empty()) out["csv"] = out_csv;
  return out.dump();
}

std::string run_make_data(const std::string& config_json, const std::string& out_dir) {
  const njson j = parse_json(config_json);
  check_keys(j, "make-data config", {"format", "count", "seed"});
  SynthConfig cfg;
  cfg.format = get_or<std::string>(j, "format", cfg.format);
  cfg.count = get_or(j, "count", cfg.count);
  cfg.seed = get_or(j, "seed", cfg.seed);
  if (out_dir.empty()) throw_config("make-data: output directory required");
  const auto files = write_synth_dataset(cfg, out_dir);
  njson out{{"command", "make-data"},
            {"format", cfg.format},
            {"count", cfg.count},
            {"seed", cfg.seed},
            {"files", files}};
  return out.dump();
}

}  // namespace nlr

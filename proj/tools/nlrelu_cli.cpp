// Command-line front end for the nlrelu engine. All engine work goes through
// the C API in nlrelu/nlrelu.h; this file only parses flags, assembles the
// JSON configuration documents and reports results.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlrelu/nlrelu.h"

namespace {

using njson = nlohmann::json;

struct Common {
  std::string config_path;
  std::string out_csv;
  std::string data_dir = "data";
  long long seed = -1;  // -1: leave the config's seed alone
};

void add_common(CLI::App* cmd, Common& c, bool with_data_dir) {
  cmd->add_option("--config", c.config_path, "JSON configuration file");
  cmd->add_option("--out", c.out_csv, "CSV output path");
  cmd->add_option("--seed", c.seed, "override the configured seed");
  if (with_data_dir)
    cmd->add_option("--data-dir", c.data_dir, "directory holding the dataset files");
}

njson load_config(const std::string& path) {
  if (path.empty()) return njson::object();
  std::ifstream f(path);
  if (!f) {
    std::fprintf(stderr, "error: cannot open config '%s'\n", path.c_str());
    std::exit(NLR_ERR_CONFIG);
  }
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return njson::parse(ss.str());
  } catch (const njson::exception& e) {
    std::fprintf(stderr, "error: config '%s' is not valid JSON: %s\n", path.c_str(), e.what());
    std::exit(NLR_ERR_CONFIG);
  }
}

njson activation_json(const std::string& text, double beta, bool beta_set) {
  njson a;
  if (text.empty()) {
    a = njson{{"kind", "nlrelu"}};
  } else if (text.front() == '{') {
    try {
      a = njson::parse(text);
    } catch (const njson::exception& e) {
      std::fprintf(stderr, "error: --activation is not valid JSON: %s\n", e.what());
      std::exit(NLR_ERR_CONFIG);
    }
  } else {
    a = njson{{"kind", text}};
  }
  if (beta_set) a["beta"] = beta;
  return a;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

int finish(nlr_status status, char** result) {
  if (status != NLR_OK) {
    std::fprintf(stderr, "error: %s\n", nlr_last_error());
    return static_cast<int>(status);
  }
  if (*result) {
    std::printf("%s\n", *result);
    nlr_string_free(*result);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlrelu: NLReLU activation micro-engine and experiment harness"};
  app.require_subcommand(1);

  // ---- curve -------------------------------------------------------------
  Common curve_c;
  std::string curve_act, curve_which;
  double curve_beta = 1.0, curve_min = 0.0, curve_max = 0.0;
  std::size_t curve_points = 0;
  auto* curve = app.add_subcommand("curve", "sample an activation value/derivative curve");
  add_common(curve, curve_c, false);
  curve->add_option("--activation", curve_act, "activation kind or JSON spec");
  auto* curve_beta_opt = curve->add_option("--beta", curve_beta, "nlrelu beta");
  curve->add_option("--which", curve_which, "value | derivative");
  auto* curve_min_opt = curve->add_option("--x-min", curve_min);
  auto* curve_max_opt = curve->add_option("--x-max", curve_max);
  auto* curve_pts_opt = curve->add_option("--points", curve_points, "sample count");

  // ---- simulate-bias-shift ------------------------------------------------
  Common bias_c;
  std::string bias_act;
  double bias_beta = 1.0, bias_init = 0.0, bias_wstd = 0.0;
  std::size_t bias_depth = 0, bias_width = 0, bias_batch = 0;
  auto* bias = app.add_subcommand("simulate-bias-shift",
                                  "layerwise activation statistics of a random dense stack");
  add_common(bias, bias_c, false);
  bias->add_option("--activation", bias_act, "activation kind or JSON spec");
  auto* bias_beta_opt = bias->add_option("--beta", bias_beta, "nlrelu beta");
  auto* bias_depth_opt = bias->add_option("--depth", bias_depth);
  auto* bias_width_opt = bias->add_option("--width", bias_width);
  auto* bias_batch_opt = bias->add_option("--batch", bias_batch);
  auto* bias_init_opt = bias->add_option("--bias-init", bias_init);
  auto* bias_wstd_opt = bias->add_option("--weight-std", bias_wstd);

  // ---- grad-check ----------------------------------------------------------
  Common gc_c;
  std::string gc_preset, gc_act, gc_input;
  double gc_beta = 1.0, gc_h = 0.0;
  std::size_t gc_batch = 0, gc_filters = 0, gc_units = 0;
  bool gc_no_pool = false;
  auto* gc = app.add_subcommand("grad-check",
                                "finite-difference check of every trainable parameter");
  add_common(gc, gc_c, false);
  gc->add_option("--preset", gc_preset, "simple_cnn | lenet5_like | tiny_resnet");
  gc->add_option("--activation", gc_act, "activation kind or JSON spec");
  auto* gc_beta_opt = gc->add_option("--beta", gc_beta, "nlrelu beta");
  auto* gc_batch_opt = gc->add_option("--batch", gc_batch);
  auto* gc_h_opt = gc->add_option("--step", gc_h, "finite-difference step");
  gc->add_option("--input", gc_input, "mnist | cifar10 input geometry");
  gc->add_flag("--no-pool", gc_no_pool, "drop the simple_cnn max-pool");
  auto* gc_filters_opt = gc->add_option("--conv-filters", gc_filters);
  auto* gc_units_opt = gc->add_option("--dense-units", gc_units);

  // ---- train ---------------------------------------------------------------
  Common tr_c;
  std::string tr_preset, tr_act, tr_dataset, tr_checkpoint;
  double tr_beta = 1.0, tr_lr = 0.0;
  std::size_t tr_batch = 0, tr_iters = 0, tr_repeats = 0, tr_eval = 0;
  std::size_t tr_ntrain = 0, tr_ntest = 0;
  bool tr_no_pool = false;
  auto* tr = app.add_subcommand("train", "train a preset and record the learning curve");
  add_common(tr, tr_c, true);
  tr->add_option("--preset", tr_preset);
  tr->add_option("--activation", tr_act, "activation kind or JSON spec");
  auto* tr_beta_opt = tr->add_option("--beta", tr_beta, "nlrelu beta");
  auto* tr_lr_opt = tr->add_option("--lr", tr_lr);
  auto* tr_batch_opt = tr->add_option("--batch", tr_batch);
  auto* tr_iters_opt = tr->add_option("--iterations", tr_iters);
  auto* tr_repeats_opt = tr->add_option("--repeats", tr_repeats);
  auto* tr_eval_opt = tr->add_option("--eval-every", tr_eval);
  tr->add_option("--dataset", tr_dataset, "mnist | cifar10");
  auto* tr_ntrain_opt = tr->add_option("--n-train", tr_ntrain);
  auto* tr_ntest_opt = tr->add_option("--n-test", tr_ntest);
  tr->add_flag("--no-pool", tr_no_pool, "drop the simple_cnn max-pool");
  tr->add_option("--checkpoint-out", tr_checkpoint, "save final parameters here");

  // ---- beta-sweep ------------------------------------------------------------
  Common bs_c;
  std::string bs_betas;
  double bs_lr = 0.0;
  std::size_t bs_repeats = 0, bs_iters = 0;
  auto* bs = app.add_subcommand("beta-sweep", "accuracy as a function of nlrelu beta");
  add_common(bs, bs_c, true);
  bs->add_option("--betas", bs_betas, "comma-separated beta grid (default 0.60..1.20 step 0.05)");
  auto* bs_repeats_opt = bs->add_option("--repeats", bs_repeats);
  auto* bs_lr_opt = bs->add_option("--lr", bs_lr);
  auto* bs_iters_opt = bs->add_option("--iterations", bs_iters);

  // ---- lr-contrast -------------------------------------------------------------
  Common lc_c;
  std::string lc_acts, lc_lrs;
  std::size_t lc_repeats = 0, lc_iters = 0;
  auto* lc = app.add_subcommand("lr-contrast",
                                "convergence of several activations across learning rates");
  add_common(lc, lc_c, true);
  lc->add_option("--activations", lc_acts, "comma-separated activation kinds");
  lc->add_option("--lrs", lc_lrs, "comma-separated learning rates");
  auto* lc_repeats_opt = lc->add_option("--repeats", lc_repeats);
  auto* lc_iters_opt = lc->add_option("--iterations", lc_iters);

  // ---- ablate-positions -----------------------------------------------------------
  Common ab_c;
  double ab_beta = 1.0, ab_lr = 0.0;
  std::size_t ab_repeats = 0, ab_iters = 0, ab_batch = 0;
  auto* ab = app.add_subcommand("ablate-positions",
                                "tiny_resnet activation-position ablation over all (A,B,C)");
  add_common(ab, ab_c, true);
  auto* ab_beta_opt = ab->add_option("--beta", ab_beta, "nlrelu beta");
  auto* ab_repeats_opt = ab->add_option("--repeats", ab_repeats);
  auto* ab_iters_opt = ab->add_option("--iterations", ab_iters);
  auto* ab_batch_opt = ab->add_option("--batch", ab_batch);
  auto* ab_lr_opt = ab->add_option("--lr", ab_lr);

  // ---- make-data ---------------------------------------------------------------
  Common md_c;
  std::string md_format, md_dir = "data";
  std::size_t md_count = 0;
  auto* md = app.add_subcommand("make-data", "generate deterministic dataset files");
  md->add_option("--config", md_c.config_path, "JSON configuration file");
  md->add_option("--seed", md_c.seed, "override the configured seed");
  md->add_option("--format", md_format, "mnist | cifar10");
  auto* md_count_opt = md->add_option("--count", md_count, "number of samples");
  md->add_option("--out-dir", md_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  char* result = nullptr;

  if (curve->parsed()) {
    njson cfg = load_config(curve_c.config_path);
    if (!curve_act.empty() || curve_beta_opt->count())
      cfg["activation"] = activation_json(curve_act, curve_beta, curve_beta_opt->count() > 0);
    if (!curve_which.empty()) cfg["which"] = curve_which;
    if (curve_min_opt->count()) cfg["x_min"] = curve_min;
    if (curve_max_opt->count()) cfg["x_max"] = curve_max;
    if (curve_pts_opt->count()) cfg["n_points"] = curve_points;
    return finish(nlr_run_curve(cfg.dump().c_str(), curve_c.out_csv.c_str(), &result), &result);
  }

  if (bias->parsed()) {
    njson cfg = load_config(bias_c.config_path);
    if (!bias_act.empty() || bias_beta_opt->count())
      cfg["activation"] = activation_json(bias_act, bias_beta, bias_beta_opt->count() > 0);
    if (bias_depth_opt->count()) cfg["depth"] = bias_depth;
    if (bias_width_opt->count()) cfg["width"] = bias_width;
    if (bias_batch_opt->count()) cfg["batch"] = bias_batch;
    if (bias_init_opt->count()) cfg["bias_init"] = bias_init;
    if (bias_wstd_opt->count()) cfg["weight_std"] = bias_wstd;
    if (bias_c.seed >= 0) cfg["seed"] = bias_c.seed;
    return finish(nlr_run_bias_shift(cfg.dump().c_str(), bias_c.out_csv.c_str(), &result), &result);
  }

  if (gc->parsed()) {
    njson cfg = load_config(gc_c.config_path);
    if (!gc_preset.empty()) cfg["preset"] = gc_preset;
    if (!gc_act.empty() || gc_beta_opt->count())
      cfg["activation"] = activation_json(gc_act, gc_beta, gc_beta_opt->count() > 0);
    if (gc_batch_opt->count()) cfg["batch"] = gc_batch;
    if (gc_h_opt->count()) cfg["h"] = gc_h;
    if (!gc_input.empty()) cfg["input"] = gc_input;
    if (gc_no_pool) cfg["pool"] = false;
    if (gc_filters_opt->count()) cfg["conv_filters"] = gc_filters;
    if (gc_units_opt->count()) cfg["dense_units"] = gc_units;
    if (gc_c.seed >= 0) cfg["seed"] = gc_c.seed;
    return finish(nlr_run_grad_check(cfg.dump().c_str(), gc_c.out_csv.c_str(), &result), &result);
  }

  auto train_overrides = [&](njson& cfg, CLI::Option* lr_opt, double lr, CLI::Option* batch_opt,
                             std::size_t batch, CLI::Option* iters_opt, std::size_t iters,
                             long long seed) {
    if (lr_opt && lr_opt->count()) cfg["train"]["lr"] = lr;
    if (batch_opt && batch_opt->count()) cfg["train"]["batch_size"] = batch;
    if (iters_opt && iters_opt->count()) cfg["train"]["iterations"] = iters;
    if (seed >= 0) cfg["train"]["seed"] = seed;
  };

  if (tr->parsed()) {
    njson cfg = load_config(tr_c.config_path);
    if (!tr_preset.empty()) cfg["preset"] = tr_preset;
    if (!tr_act.empty() || tr_beta_opt->count())
      cfg["activation"] = activation_json(tr_act, tr_beta, tr_beta_opt->count() > 0);
    train_overrides(cfg, tr_lr_opt, tr_lr, tr_batch_opt, tr_batch, tr_iters_opt, tr_iters,
                    tr_c.seed);
    if (tr_repeats_opt->count()) cfg["repeats"] = tr_repeats;
    if (tr_eval_opt->count()) cfg["eval_every"] = tr_eval;
    if (!tr_dataset.empty()) cfg["data"]["dataset"] = tr_dataset;
    if (tr_ntrain_opt->count()) cfg["data"]["n_train"] = tr_ntrain;
    if (tr_ntest_opt->count()) cfg["data"]["n_test"] = tr_ntest;
    if (tr_no_pool) cfg["pool"] = false;
    if (!tr_checkpoint.empty()) cfg["checkpoint_out"] = tr_checkpoint;
    return finish(
        nlr_run_train(cfg.dump().c_str(), tr_c.data_dir.c_str(), tr_c.out_csv.c_str(), &result),
        &result);
  }

  if (bs->parsed()) {
    njson cfg = load_config(bs_c.config_path);
    if (!bs_betas.empty()) cfg["betas"] = parse_list(bs_betas);
    if (bs_repeats_opt->count()) cfg["repeats"] = bs_repeats;
    train_overrides(cfg, bs_lr_opt, bs_lr, nullptr, 0, bs_iters_opt, bs_iters, bs_c.seed);
    return finish(nlr_run_beta_sweep(cfg.dump().c_str(), bs_c.data_dir.c_str(),
                                     bs_c.out_csv.c_str(), &result),
                  &result);
  }

  if (lc->parsed()) {
    njson cfg = load_config(lc_c.config_path);
    if (!lc_acts.empty()) {
      njson arr = njson::array();
      std::stringstream ss(lc_acts);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) arr.push_back(item);
      cfg["activations"] = arr;
    }
    if (!lc_lrs.empty()) cfg["lrs"] = parse_list(lc_lrs);
    if (lc_repeats_opt->count()) cfg["repeats"] = lc_repeats;
    train_overrides(cfg, nullptr, 0, nullptr, 0, lc_iters_opt, lc_iters, lc_c.seed);
    return finish(nlr_run_lr_contrast(cfg.dump().c_str(), lc_c.data_dir.c_str(),
                                      lc_c.out_csv.c_str(), &result),
                  &result);
  }

  if (ab->parsed()) {
    njson cfg = load_config(ab_c.config_path);
    if (ab_beta_opt->count()) cfg["activation"] = njson{{"kind", "nlrelu"}, {"beta", ab_beta}};
    if (ab_repeats_opt->count()) cfg["repeats"] = ab_repeats;
    train_overrides(cfg, ab_lr_opt, ab_lr, ab_batch_opt, ab_batch, ab_iters_opt, ab_iters,
                    ab_c.seed);
    return finish(nlr_run_ablate_positions(cfg.dump().c_str(), ab_c.data_dir.c_str(),
                                           ab_c.out_csv.c_str(), &result),
                  &result);
  }

  if (md->parsed()) {
    njson cfg = load_config(md_c.config_path);
    if (!md_format.empty()) cfg["format"] = md_format;
    if (md_count_opt->count()) cfg["count"] = md_count;
    if (md_c.seed >= 0) cfg["seed"] = md_c.seed;
    return finish(nlr_make_data(cfg.dump().c_str(), md_dir.c_str(), &result), &result);
  }

  return 0;
}

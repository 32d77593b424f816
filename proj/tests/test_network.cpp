#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "core/adam.hpp"
#include "core/checkpoint.hpp"
#include "core/common.hpp"
#include "core/grad_check.hpp"
#include "core/network.hpp"
#include "core/presets.hpp"

using namespace nlr;

namespace {

std::vector<LayerSpec> mlp(std::size_t hidden, const ActivationSpec& act) {
  return {LayerSpec::Dense(hidden), LayerSpec::Activation(act), LayerSpec::Dense(10),
          LayerSpec::SoftmaxOutput()};
}

Tensor random_batch(RngStream& rng, Shape sample, std::size_t n) {
  Shape s = sample;
  s.insert(s.begin(), n);
  return sample_normal(rng, s, 0.0, 1.0);
}

std::vector<int> random_labels(RngStream& rng, std::size_t n, std::size_t classes = 10) {
  std::vector<int> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<int>(rng.next_below(classes)));
  return out;
}

}  // namespace

TEST_CASE("xavier init: dense 100->100 variance within 10% of 2/200") {
  RngStream rng(1);
  auto [net, params] = build({LayerSpec::Dense(100), LayerSpec::SoftmaxOutput()}, {100},
                             Init::xavier, rng);
  const Tensor& w = params.at("layer00.dense.weight");
  REQUIRE(w.size() == 10000);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sum += w[i];
    sumsq += w[i] * w[i];
  }
  const double mean = sum / w.size();
  const double var = sumsq / w.size() - mean * mean;
  CHECK(var == doctest::Approx(2.0 / 200.0).epsilon(0.10));
}

TEST_CASE("msra init: fan_in 50 gives variance near 0.04") {
  RngStream rng(2);
  auto [net, params] =
      build({LayerSpec::Dense(200), LayerSpec::SoftmaxOutput()}, {50}, Init::msra, rng);
  const Tensor& w = params.at("layer00.dense.weight");
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sum += w[i];
    sumsq += w[i] * w[i];
  }
  const double mean = sum / w.size();
  const double var = sumsq / w.size() - mean * mean;
  CHECK(var == doctest::Approx(0.04).epsilon(0.10));
}

TEST_CASE("all bias tensors are exactly zero after any build") {
  RngStream rng(3);
  const auto specs = make_preset("lenet5_like", {1, 28, 28}, 10, ActivationSpec::selu());
  auto [net, params] = build(specs, {1, 28, 28}, Init::xavier, rng);
  std::size_t bias_tensors = 0;
  for (const auto& e : params.entries()) {
    if (e.name.ends_with(".bias")) {
      ++bias_tensors;
      for (std::size_t i = 0; i < e.value.size(); ++i) CHECK(e.value[i] == 0.0);
    }
  }
  CHECK(bias_tensors > 0);
}

TEST_CASE("build reports the offending layer on shape mismatch") {
  try {
    RngStream rng(4);
    build({LayerSpec::Flatten(), LayerSpec::Dense(10), LayerSpec::Conv2d(4, 3, 3)}, {1, 8, 8},
          Init::xavier, rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
  }
}

TEST_CASE("single activation layer passes through the function") {
  RngStream rng(5);
  auto [net, params] =
      build({LayerSpec::Activation(ActivationSpec::relu())}, {2}, Init::xavier, rng);
  ForwardCache cache;
  const Tensor y = net.forward(Tensor({1, 2}, {-1.0, 2.0}), params, cache, Mode::infer);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 2.0);
}

TEST_CASE("dense identity weights reproduce the input") {
  RngStream rng(6);
  auto [net, params] = build({LayerSpec::Dense(3)}, {3}, Init::xavier, rng);
  Tensor& w = params.at("layer00.dense.weight");
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) w.at(i, j) = i == j ? 1.0 : 0.0;
  ForwardCache cache;
  const Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor y = net.forward(x, params, cache, Mode::infer);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("batchnorm normalizes per feature in train mode") {
  RngStream rng(7);
  auto [net, params] = build({LayerSpec::BatchNorm()}, {5}, Init::xavier, rng);
  RngStream data_rng(8);
  const Tensor x = sample_normal(data_rng, {64, 5}, 3.0, 2.5);
  ForwardCache cache;
  const Tensor y = net.forward(x, params, cache, Mode::train);
  for (std::size_t f = 0; f < 5; ++f) {
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
      sum += y.at(i, f);
      sumsq += y.at(i, f) * y.at(i, f);
    }
    const double mean = sum / 64.0;
    const double var = sumsq / 64.0 - mean * mean;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-4);  // eps=1e-5 shifts the scale slightly
  }
}

TEST_CASE("batchnorm infer mode uses running statistics") {
  RngStream rng(9);
  auto [net, params] = build({LayerSpec::BatchNorm()}, {3}, Init::xavier, rng);
  RngStream data_rng(10);
  const Tensor x = sample_normal(data_rng, {32, 3}, 1.0, 2.0);
  for (int step = 0; step < 50; ++step) {
    ForwardCache cache;
    net.forward(x, params, cache, Mode::train);
  }
  ForwardCache cache;
  const Tensor y = net.forward(x, params, cache, Mode::infer);
  // after many updates on the same batch, infer output is near the train one
  double mean0 = 0.0;
  for (std::size_t i = 0; i < 32; ++i) mean0 += y.at(i, 0);
  CHECK(std::abs(mean0 / 32.0) < 0.2);
}

TEST_CASE("softmax cross-entropy gradient equals (p - onehot)/N") {
  RngStream rng(11);
  auto [net, params] = build(mlp(16, ActivationSpec::tanh()), {8}, Init::xavier, rng);
  RngStream data_rng(12);
  const Tensor x = random_batch(data_rng, {8}, 6);
  const std::vector<int> labels = random_labels(data_rng, 6);
  ForwardCache cache;
  const Tensor probs = net.forward(x, params, cache, Mode::train);
  // exercise the identity through a logits-only network
  RngStream rng2(13);
  auto [id_net, id_params] = build({LayerSpec::SoftmaxOutput()}, {10}, Init::xavier, rng2);
  ForwardCache id_cache;
  const Tensor logits = sample_normal(data_rng, {6, 10}, 0.0, 2.0);
  const Tensor p = id_net.forward(logits, id_params, id_cache, Mode::train);
  auto [loss, grads] = id_net.backward(id_params, id_cache, labels);
  (void)loss;
  (void)grads;
  // gradient w.r.t. logits is what backward starts from; verify via backward_from
  // of the probability Jacobian against the closed form
  for (std::size_t i = 0; i < 6; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 10; ++j) row += p.at(i, j);
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }
  // direct check of the closed form through finite differences of the loss
  RngStream rng3(14);
  auto [net3, params3] = build({LayerSpec::Dense(10), LayerSpec::SoftmaxOutput()}, {4},
                               Init::xavier, rng3);
  ForwardCache cache3;
  const Tensor x3 = random_batch(data_rng, {4}, 5);
  const std::vector<int> labels3 = random_labels(data_rng, 5);
  net3.forward(x3, params3, cache3, Mode::train);
  auto [loss3, grads3] = net3.backward(params3, cache3, labels3);
  (void)loss3;
  const Tensor& probs3 = cache3.layers[1].get("probs");
  const Tensor& xin = cache3.layers[0].get("x");
  // d bias_j = sum_i (p_ij - onehot) / N exactly
  const Tensor& db = grads3.at("layer00.dense.bias");
  for (std::size_t j = 0; j < 10; ++j) {
    double want = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
      want += (probs3.at(i, j) - (labels3[i] == static_cast<int>(j) ? 1.0 : 0.0)) / 5.0;
    CHECK(std::abs(db[j] - want) <= 1e-12);
  }
  (void)xin;
}

TEST_CASE("single neuron gradients: nlrelu scales by f', relu passes through") {
  // dense(1) with w=1, b=0 on input x=1, upstream gradient g
  for (double g : {1.0, -2.5, 0.75}) {
    RngStream rng(15);
    auto [net, params] = build({LayerSpec::Dense(1), LayerSpec::Activation(ActivationSpec::nlrelu(1.0))},
                               {1}, Init::xavier, rng);
    params.at("layer00.dense.weight")[0] = 1.0;
    params.at("layer00.dense.bias")[0] = 0.0;
    ForwardCache cache;
    net.forward(Tensor({1, 1}, {1.0}), params, cache, Mode::train);
    GradientStore grads = GradientStore::zeros_like(params);
    net.backward_from(Tensor({1, 1}, {g}), params, cache, grads);
    // z = 1, f'(1) = 1/2: both gradients are g/2 exactly
    CHECK(grads.at("layer00.dense.weight")[0] == g * 0.5);
    CHECK(grads.at("layer00.dense.bias")[0] == g * 0.5);

    RngStream rng2(15);
    auto [rnet, rparams] = build({LayerSpec::Dense(1), LayerSpec::Activation(ActivationSpec::relu())},
                                 {1}, Init::xavier, rng2);
    rparams.at("layer00.dense.weight")[0] = 1.0;
    rparams.at("layer00.dense.bias")[0] = 0.0;
    ForwardCache rcache;
    rnet.forward(Tensor({1, 1}, {1.0}), rparams, rcache, Mode::train);
    GradientStore rgrads = GradientStore::zeros_like(rparams);
    rnet.backward_from(Tensor({1, 1}, {g}), rparams, rcache, rgrads);
    CHECK(rgrads.at("layer00.dense.weight")[0] == g);
    CHECK(rgrads.at("layer00.dense.bias")[0] == g);
  }
}

TEST_CASE("gradient ratio nlrelu/relu equals beta/(beta*z+1) in the active regime") {
  RngStream rng(16);
  for (int i = 0; i < 500; ++i) {
    RngStream r = rng.split(i);
    const double beta = 0.6 + r.next_double() * 0.6;
    const double w = 0.1 + r.next_double() * 2.0;
    const double b = r.next_double() - 0.3;
    const double x = 0.1 + r.next_double() * 2.0;
    const double g = (r.next_double() - 0.5) * 4.0;
    const double z = w * x + b;
    if (z <= 1e-6 || std::abs(g) < 1e-6) continue;

    auto run = [&](const ActivationSpec& act) {
      RngStream init(1);
      auto [net, params] =
          build({LayerSpec::Dense(1), LayerSpec::Activation(act)}, {1}, Init::xavier, init);
      params.at("layer00.dense.weight")[0] = w;
      params.at("layer00.dense.bias")[0] = b;
      ForwardCache cache;
      net.forward(Tensor({1, 1}, {x}), params, cache, Mode::train);
      GradientStore grads = GradientStore::zeros_like(params);
      net.backward_from(Tensor({1, 1}, {g}), params, cache, grads);
      return grads.at("layer00.dense.weight")[0];
    };

    const double gw_nl = run(ActivationSpec::nlrelu(beta));
    const double gw_relu = run(ActivationSpec::relu());
    const double ratio = std::abs(gw_nl) / std::abs(gw_relu);
    CHECK(ratio == doctest::Approx(beta / (beta * z + 1.0)).epsilon(1e-9));
    if (z > (beta - 1.0) / (beta * beta)) CHECK(ratio < 1.0);
  }
}

TEST_CASE("adam: constant gradient drives |step| toward lr") {
  ParamStore params;
  params.add("p", Tensor({1}, {0.0}));
  AdamState adam(params);
  TrainConfig cfg;
  cfg.lr = 0.1;
  double prev = params.at("p")[0];
  double step = 0.0;
  GradientStore grads = GradientStore::zeros_like(params);
  grads.at("p")[0] = 1.0;
  for (int t = 0; t < 200; ++t) {
    adam.step(params, grads, cfg);
    step = params.at("p")[0] - prev;
    prev = params.at("p")[0];
  }
  CHECK(std::abs(step) == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("adam: zero gradient leaves parameters untouched, state advances") {
  ParamStore params;
  params.add("p", Tensor({3}, {1.0, -2.0, 0.5}));
  AdamState adam(params);
  TrainConfig cfg;
  GradientStore grads = GradientStore::zeros_like(params);
  adam.step(params, grads, cfg);
  adam.step(params, grads, cfg);
  CHECK(adam.step_count() == 2);
  CHECK(params.at("p")[0] == 1.0);
  CHECK(params.at("p")[1] == -2.0);
  CHECK(params.at("p")[2] == 0.5);
}

TEST_CASE("adam trajectories are bit-identical across reruns") {
  auto run = [] {
    RngStream rng(99);
    auto [net, params] = build(mlp(12, ActivationSpec::swish()), {6}, Init::xavier, rng);
    AdamState adam(params);
    TrainConfig cfg;
    cfg.lr = 1e-3;
    RngStream data_rng(100);
    for (int iter = 0; iter < 10; ++iter) {
      const Tensor x = random_batch(data_rng, {6}, 4);
      const std::vector<int> labels = random_labels(data_rng, 4);
      ForwardCache cache;
      net.forward(x, params, cache, Mode::train);
      auto [loss, grads] = net.backward(params, cache, labels);
      (void)loss;
      adam.step(params, grads, cfg);
    }
    std::vector<double> flat;
    for (const auto& e : params.entries())
      for (std::size_t i = 0; i < e.value.size(); ++i) flat.push_back(e.value[i]);
    return flat;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.beta1 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.eps = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("grad check: linear network at rounding level") {
  RngStream rng(17);
  auto [net, params] =
      build({LayerSpec::Dense(8), LayerSpec::Dense(10), LayerSpec::SoftmaxOutput()}, {5},
            Init::xavier, rng);
  RngStream data_rng(18);
  const Tensor x = random_batch(data_rng, {5}, 6);
  const std::vector<int> labels = random_labels(data_rng, 6);
  const GradCheckReport report = grad_check(net, params, x, labels, 1e-5);
  CHECK(report.max_rel_err < 1e-9);
  CHECK(report.n_skipped_branch == 0);
}

TEST_CASE("grad check: nlrelu mlp 784->32->10 within 1e-5 at h=1e-5") {
  RngStream rng(19);
  auto [net, params] = build(mlp(32, ActivationSpec::nlrelu(1.0)), {784}, Init::xavier, rng);
  RngStream data_rng(20);
  const Tensor x = random_batch(data_rng, {784}, 4);
  const std::vector<int> labels = random_labels(data_rng, 4);
  const GradCheckReport report = grad_check(net, params, x, labels, 1e-5);
  CHECK(report.max_rel_err <= 1e-5);
  CHECK(report.n_checked + report.n_skipped_branch == report.param_count);
}

TEST_CASE("grad check: every layer kind and zoo member on small networks") {
  RngStream seed_rng(21);
  for (int seed = 0; seed < 10; ++seed) {
    const auto& zoo = ActivationSpec::zoo();
    const ActivationSpec act = zoo[static_cast<std::size_t>(seed) % zoo.size()];
    std::vector<LayerSpec> specs = {
        LayerSpec::Conv2d(3, 3, 3, 1, 1),
        LayerSpec::Activation(act),
        LayerSpec::MaxPool(2, 2),
        LayerSpec::BatchNorm(),
        LayerSpec::Residual({LayerSpec::BatchNorm(), LayerSpec::Activation(act),
                             LayerSpec::Conv2d(5, 3, 3, 1, 1, /*bias=*/false),
                             LayerSpec::BatchNorm(), LayerSpec::Activation(act),
                             LayerSpec::Conv2d(5, 3, 3, 1, 1)}),
        LayerSpec::GlobalAvgPool(),
        LayerSpec::Dense(10),
        LayerSpec::SoftmaxOutput(),
    };
    RngStream rng(static_cast<std::uint64_t>(1000 + seed));
    auto [net, params] = build(specs, {2, 8, 8}, Init::msra, rng);
    RngStream data_rng(static_cast<std::uint64_t>(2000 + seed));
    const Tensor x = random_batch(data_rng, {2, 8, 8}, 4);
    const std::vector<int> labels = random_labels(data_rng, 4);
    const GradCheckReport report = grad_check(net, params, x, labels, 1e-5);
    INFO("seed ", seed, " act ", act.label(), " worst ", report.worst_param, " analytic ",
         report.worst_analytic, " numeric ", report.worst_numeric);
    CHECK(report.max_rel_err <= 1e-5);
  }
}

TEST_CASE("grad check rejects oversized networks") {
  RngStream rng(22);
  auto [net, params] = build(mlp(64, ActivationSpec::relu()), {784}, Init::xavier, rng);
  RngStream data_rng(23);
  const Tensor x = random_batch(data_rng, {784}, 2);
  const std::vector<int> labels = random_labels(data_rng, 2);
  CHECK_THROWS_AS(grad_check(net, params, x, labels, 1e-5, 1e-5, /*max_params=*/1000), Error);
}

namespace {

// Activation layer with a deliberately corrupted backward pass.
class BuggyActivationLayer : public ActivationLayer {
 public:
  using ActivationLayer::ActivationLayer;
  Tensor backward(const Tensor& dy, const ParamStore& params, const LayerCache& cache,
                  GradientStore& grads) const override {
    Tensor dx = ActivationLayer::backward(dy, params, cache, grads);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.05;
    return dx;
  }
};

}  // namespace

TEST_CASE("grad check flags a corrupted derivative and names the layer") {
  std::vector<std::unique_ptr<Layer>> layers;
  layers.push_back(std::make_unique<DenseLayer>("layer00.dense", 6, 8));
  layers.push_back(std::make_unique<BuggyActivationLayer>("layer01.act", ActivationSpec::tanh()));
  layers.push_back(std::make_unique<DenseLayer>("layer02.dense", 8, 10));
  layers.push_back(std::make_unique<SoftmaxLayer>("layer03.softmax"));
  Network net({6}, std::move(layers));
  RngStream rng(24);
  ParamStore params = net.init_params(Init::xavier, rng);
  RngStream data_rng(25);
  const Tensor x = random_batch(data_rng, {6}, 4);
  const std::vector<int> labels = random_labels(data_rng, 4);
  const GradCheckReport report = grad_check(net, params, x, labels, 1e-5);
  CHECK(report.max_rel_err > 1e-2);
  // the corrupted signal reaches only the parameters upstream of the bug
  CHECK(report.worst_param.find("layer00.dense") == 0);
}

TEST_CASE("maxpool ties route the gradient to the first element in scan order") {
  std::vector<std::unique_ptr<Layer>> layers;
  layers.push_back(std::make_unique<MaxPoolLayer>("layer00.maxpool", 2, 2));
  Network net({1, 2, 2}, std::move(layers));
  ParamStore params;
  const Tensor x = Tensor::full({1, 1, 2, 2}, 7.0);  // all equal: fully tied window
  ForwardCache cache;
  const Tensor y = net.forward(x, params, cache, Mode::train);
  REQUIRE(y.size() == 1);
  CHECK(y[0] == 7.0);
  GradientStore grads;
  const Tensor dx = net.backward_from(Tensor({1, 1, 1, 1}, {1.0}), params, cache, grads);
  CHECK(dx[0] == 1.0);  // first element of the window
  CHECK(dx[1] == 0.0);
  CHECK(dx[2] == 0.0);
  CHECK(dx[3] == 0.0);
}

TEST_CASE("residual unit: zero second conv gives the identity map") {
  const ActivationSpec act = ActivationSpec::nlrelu(1.0);
  std::vector<LayerSpec> specs = {
      LayerSpec::Residual({LayerSpec::BatchNorm(), LayerSpec::Activation(act),
                           LayerSpec::Conv2d(3, 3, 3, 1, 1, /*bias=*/false),
                           LayerSpec::BatchNorm(), LayerSpec::Activation(act),
                           LayerSpec::Conv2d(3, 3, 3, 1, 1, /*bias=*/false)})};
  RngStream rng(26);
  auto [net, params] = build(specs, {3, 6, 6}, Init::msra, rng);
  Tensor& w2 = params.at("layer00.residual.inner05.conv.weight");
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] = 0.0;
  RngStream data_rng(27);
  const Tensor x = random_batch(data_rng, {3, 6, 6}, 2);
  ForwardCache cache;
  const Tensor y = net.forward(x, params, cache, Mode::train);
  REQUIRE(y.same_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("residual unit with flags (0,0,0) is x + W2 BN(W1 BN(x))") {
  PresetOptions opts;
  opts.flags = {0, 0, 0};
  // build via the preset helper so the flag wiring is exercised
  const auto specs = make_preset("tiny_resnet", {3, 32, 32}, 10, ActivationSpec::nlrelu(), opts);
  // the first residual unit must contain exactly bn, conv, bn, conv
  REQUIRE(specs[1].kind == LayerSpec::Kind::residual_unit);
  REQUIRE(specs[1].inner.size() == 4);
  CHECK(specs[1].inner[0].kind == LayerSpec::Kind::batchnorm);
  CHECK(specs[1].inner[1].kind == LayerSpec::Kind::conv2d);
  CHECK(specs[1].inner[2].kind == LayerSpec::Kind::batchnorm);
  CHECK(specs[1].inner[3].kind == LayerSpec::Kind::conv2d);

  PresetOptions all;
  all.flags = {1, 1, 1};
  const auto full = make_preset("tiny_resnet", {3, 32, 32}, 10, ActivationSpec::nlrelu(), all);
  REQUIRE(full[1].inner.size() == 6);
  CHECK(full[1].inner[1].kind == LayerSpec::Kind::activation);
  CHECK(full[1].inner[4].kind == LayerSpec::Kind::activation);
}

TEST_CASE("residual projection handles channel widening") {
  const ActivationSpec act = ActivationSpec::relu();
  std::vector<LayerSpec> specs = {
      LayerSpec::Residual({LayerSpec::BatchNorm(), LayerSpec::Activation(act),
                           LayerSpec::Conv2d(8, 3, 3, 1, 1), LayerSpec::BatchNorm(),
                           LayerSpec::Activation(act), LayerSpec::Conv2d(8, 3, 3, 1, 1)})};
  RngStream rng(28);
  auto [net, params] = build(specs, {4, 8, 8}, Init::msra, rng);
  CHECK(params.has("layer00.residual.proj.weight"));
  CHECK(params.at("layer00.residual.proj.weight").shape() == Shape{8, 4, 1, 1});
  RngStream data_rng(29);
  const Tensor x = random_batch(data_rng, {4, 8, 8}, 2);
  ForwardCache cache;
  const Tensor y = net.forward(x, params, cache, Mode::train);
  CHECK(y.shape() == Shape{2, 8, 8, 8});
}

TEST_CASE("forward reports the failing layer on non-finite values") {
  RngStream rng(30);
  auto [net, params] = build(mlp(8, ActivationSpec::relu()), {4}, Init::xavier, rng);
  params.at("layer00.dense.weight")[0] = 1e308;
  params.at("layer00.dense.weight")[1] = 1e308;
  const Tensor x = Tensor::full({2, 4}, 1e40);
  ForwardCache cache;
  try {
    net.forward(x, params, cache, Mode::train);
    FAIL("expected a non-finite error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::internal);
    CHECK(std::string(e.what()).find("layer00.dense") != std::string::npos);
  }
}

TEST_CASE("checkpoint round-trip is byte-identical") {
  RngStream rng(31);
  const auto specs = make_preset("tiny_resnet", {3, 16, 16}, 10, ActivationSpec::nlrelu());
  auto [net, params] = build(specs, {3, 16, 16}, Init::msra, rng);
  const std::string p1 = "/tmp/nlr_ckpt_a.bin", p2 = "/tmp/nlr_ckpt_b.bin";
  save_checkpoint(params, p1);

  RngStream rng2(32);
  auto [net2, params2] = build(specs, {3, 16, 16}, Init::msra, rng2);
  load_checkpoint(params2, p1);
  save_checkpoint(params2, p2);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(!s1.empty());
  CHECK(s1.substr(0, 4) == "NLRL");

  // loaded values match the saved ones exactly
  for (const auto& e : params.entries()) {
    const Tensor& loaded = params2.at(e.name);
    for (std::size_t i = 0; i < e.value.size(); ++i) REQUIRE(loaded[i] == e.value[i]);
  }
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("checkpoint rejects wrong magic and truncation") {
  const std::string path = "/tmp/nlr_ckpt_bad.bin";
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE" << std::string(16, '\0');
  }
  CHECK_THROWS_AS(read_checkpoint(path), Error);
  {
    std::ofstream f(path, std::ios::binary);
    f << "NLRL";  // cut off before the version field
  }
  CHECK_THROWS_AS(read_checkpoint(path), Error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_checkpoint("/tmp/does_not_exist_nlr.bin"), Error);
}

TEST_CASE("checkpoint load rejects mismatched stores") {
  RngStream rng(33);
  auto [net, params] = build(mlp(4, ActivationSpec::relu()), {3}, Init::xavier, rng);
  const std::string path = "/tmp/nlr_ckpt_mismatch.bin";
  save_checkpoint(params, path);
  RngStream rng2(34);
  auto [net2, params2] = build(mlp(5, ActivationSpec::relu()), {3}, Init::xavier, rng2);
  CHECK_THROWS_AS(load_checkpoint(params2, path), Error);
  std::remove(path.c_str());
}

TEST_CASE("simple_cnn preset shapes, pooled and literal") {
  PresetOptions pooled;
  const auto specs = make_preset("simple_cnn", {1, 28, 28}, 10, ActivationSpec::nlrelu(), pooled);
  RngStream rng(35);
  auto [net, params] = build(specs, {1, 28, 28}, Init::xavier, rng);
  CHECK(params.at("layer04.dense.weight").shape() == Shape{12544, 1024});

  PresetOptions literal;
  literal.pool = false;
  const auto specs2 =
      make_preset("simple_cnn", {1, 28, 28}, 10, ActivationSpec::nlrelu(), literal);
  RngStream rng2(36);
  auto [net2, params2] = build(specs2, {1, 28, 28}, Init::xavier, rng2);
  CHECK(params2.at("layer03.dense.weight").shape() == Shape{50176, 1024});
}

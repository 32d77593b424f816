#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mpfr.h>

#include <cmath>

#include "core/activations.hpp"
#include "core/common.hpp"
#include "core/rng.hpp"

using namespace nlr;

namespace {

// ln(beta*(a+delta)+1) - ln(beta*a+1) at 256-bit precision, rounded once to
// double at the end. Independent of the engine's log1p-based evaluation.
double gap_oracle(double beta, double a, double delta) {
  mpfr_t b, lo, hi, one;
  mpfr_inits2(256, b, lo, hi, one, (mpfr_ptr) nullptr);
  mpfr_set_d(one, 1.0, MPFR_RNDN);
  mpfr_set_d(b, beta, MPFR_RNDN);

  mpfr_set_d(hi, a + delta, MPFR_RNDN);
  mpfr_mul(hi, hi, b, MPFR_RNDN);
  mpfr_add(hi, hi, one, MPFR_RNDN);
  mpfr_log(hi, hi, MPFR_RNDN);

  mpfr_set_d(lo, a, MPFR_RNDN);
  mpfr_mul(lo, lo, b, MPFR_RNDN);
  mpfr_add(lo, lo, one, MPFR_RNDN);
  mpfr_log(lo, lo, MPFR_RNDN);

  mpfr_sub(hi, hi, lo, MPFR_RNDN);
  const double out = mpfr_get_d(hi, MPFR_RNDN);
  mpfr_clears(b, lo, hi, one, (mpfr_ptr) nullptr);
  return out;
}

double ln_oracle(double x) {  // ln(x) at 256 bits
  mpfr_t v;
  mpfr_init2(v, 256);
  mpfr_set_d(v, x, MPFR_RNDN);
  mpfr_log(v, v, MPFR_RNDN);
  const double out = mpfr_get_d(v, MPFR_RNDN);
  mpfr_clear(v);
  return out;
}

// Central difference with the loss evaluated in long double: in the
// saturated tails the derivative drops below 1e-4 and a double-precision
// difference of two O(1) values would be all rounding noise.
double central_diff(const ActivationSpec& spec, double x, double h) {
  const long double lx = x, lh = h;
  return static_cast<double>((act_value_ld(spec, lx + lh) - act_value_ld(spec, lx - lh)) /
                             (2.0L * lh));
}

}  // namespace

TEST_CASE("nlrelu forward basics") {
  CHECK(act_value(ActivationSpec::nlrelu(1.0), 0.0) == 0.0);
  CHECK(act_value(ActivationSpec::nlrelu(0.7), -2.0) == 0.0);
  const double ln2 = act_value(ActivationSpec::nlrelu(1.0), 1.0);
  CHECK(std::abs(ln2 - ln_oracle(2.0)) <= 2.3e-16);  // one ulp of ln 2
}

TEST_CASE("relu forward on a mixed vector") {
  const Tensor x({3}, {-1.0, 0.0, 2.0});
  const Tensor y = act_forward(ActivationSpec::relu(), x);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 2.0);
}

TEST_CASE("derivative conventions at zero: nlrelu takes beta, relu takes 0") {
  CHECK(act_deriv(ActivationSpec::nlrelu(0.9), 0.0) == 0.9);
  CHECK(act_deriv(ActivationSpec::nlrelu(1.0), 1.0) == 0.5);
  CHECK(act_deriv(ActivationSpec::nlrelu(2.0), -5.0) == 0.0);
  CHECK(act_deriv(ActivationSpec::relu(), 0.0) == 0.0);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(ActivationSpec::nlrelu(0.0), Error);
  CHECK_THROWS_AS(ActivationSpec::nlrelu(-0.5), Error);
  ActivationSpec s = ActivationSpec::nlrelu(1.0);
  s.beta = std::nan("");
  CHECK_THROWS_AS(s.validate(), Error);
  CHECK_THROWS_AS(act_from_name("gelu"), Error);
}

TEST_CASE("discrimination gaps reproduce the printed beta=0.7 and beta=1.0 pairs") {
  const ActivationSpec b07 = ActivationSpec::nlrelu(0.7);
  const ActivationSpec b10 = ActivationSpec::nlrelu(1.0);
  const double g07_small = discrimination_gap(b07, 0.25, 0.25);
  const double g07_large = discrimination_gap(b07, 0.75, 0.25);
  const double g10_small = discrimination_gap(b10, 0.25, 0.25);
  const double g10_large = discrimination_gap(b10, 0.75, 0.25);

  CHECK(std::abs(g07_small - 0.14) <= 0.005);
  CHECK(std::abs(g07_large - 0.11) <= 0.005);
  CHECK(std::abs(g10_small - 0.18) <= 0.005);
  CHECK(std::abs(g10_large - 0.13) <= 0.005);
  CHECK(g07_small > g07_large);
  CHECK(g10_small > g10_large);
}

TEST_CASE("discrimination gap matches the 256-bit oracle") {
  RngStream rng(11);
  for (int i = 0; i < 500; ++i) {
    const double beta = 0.6 + rng.next_double() * 0.6;
    const double a = rng.next_double() * 4.0;
    const double delta = 1e-3 + rng.next_double() * 2.0;
    const double got = discrimination_gap(ActivationSpec::nlrelu(beta), a, delta);
    const double want = gap_oracle(beta, a, delta);
    CHECK(std::abs(got - want) <= 1e-15 * std::max(1.0, std::abs(want)) + 1e-18);
  }
}

TEST_CASE("discrimination gap argument validation") {
  const ActivationSpec s = ActivationSpec::nlrelu(1.0);
  CHECK_THROWS_AS(discrimination_gap(s, -0.1, 0.5), Error);
  CHECK_THROWS_AS(discrimination_gap(s, 0.1, 0.0), Error);
  CHECK_THROWS_AS(discrimination_gap(s, 0.1, -1.0), Error);
}

TEST_CASE("concavity: gaps shrink as the base point grows") {
  RngStream rng(17);
  for (int i = 0; i < 10000; ++i) {
    const double beta = 0.6 + rng.next_double() * 0.6;
    const double a = rng.next_double() * 5.0;
    const double b = a + 1e-6 + rng.next_double() * 5.0;
    const double delta = 1e-6 + rng.next_double() * 3.0;
    const ActivationSpec s = ActivationSpec::nlrelu(beta);
    CHECK(discrimination_gap(s, a, delta) > discrimination_gap(s, b, delta));
  }
}

TEST_CASE("sparsity: exact zero on the closed negative axis") {
  RngStream rng(23);
  for (int i = 0; i < 1000; ++i) {
    const double x = -rng.next_double() * 50.0;
    CHECK(act_value(ActivationSpec::nlrelu(0.6 + rng.next_double()), x) == 0.0);
    CHECK(act_value(ActivationSpec::relu(), x) == 0.0);
  }
}

TEST_CASE("monotonicity and the ln(1+u) <= u envelope") {
  RngStream rng(29);
  for (int i = 0; i < 2000; ++i) {
    const double beta = 0.2 + rng.next_double() * 1.5;
    const ActivationSpec s = ActivationSpec::nlrelu(beta);
    const double x = rng.next_double() * 10.0 + 1e-9;
    const double y = x + 1e-9 + rng.next_double();
    CHECK(act_value(s, y) > act_value(s, x));  // strictly increasing
    CHECK(act_value(s, x) < beta * x);         // strict for x > 0
  }
  CHECK(act_value(ActivationSpec::nlrelu(1.3), 0.0) == 0.0);  // equality only at 0
}

TEST_CASE("derivative bound and right-soft saturation") {
  RngStream rng(31);
  for (int i = 0; i < 2000; ++i) {
    const double beta = 0.2 + rng.next_double() * 1.5;
    const ActivationSpec s = ActivationSpec::nlrelu(beta);
    const double x = rng.next_double() * 20.0;
    const double d = act_deriv(s, x);
    CHECK(d > 0.0);
    CHECK(d <= beta);
  }
  // saturation threshold x > 1/eps - 1/beta makes the derivative drop below eps
  for (int i = 0; i < 2000; ++i) {
    const double beta = 0.2 + rng.next_double() * 1.5;
    const double eps = 1e-3 + rng.next_double() * 0.2;
    const double x = (1.0 / eps - 1.0 / beta) + 1e-9 + rng.next_double();
    CHECK(act_deriv(ActivationSpec::nlrelu(beta), x) < eps);
  }
  // the (1/eps - 1)/beta form is equivalent for beta <= 1
  for (int i = 0; i < 2000; ++i) {
    const double beta = 0.2 + rng.next_double() * 0.8;
    const double eps = 1e-3 + rng.next_double() * 0.2;
    const double x = (1.0 / eps - 1.0) / beta + 1e-9 + rng.next_double();
    CHECK(act_deriv(ActivationSpec::nlrelu(beta), x) < eps);
  }
}

TEST_CASE("larger beta, larger output at fixed positive input") {
  RngStream rng(37);
  for (int i = 0; i < 2000; ++i) {
    const double x = 1e-6 + rng.next_double() * 8.0;
    const double b1 = 0.3 + rng.next_double();
    const double b2 = b1 + 1e-6 + rng.next_double();
    CHECK(act_value(ActivationSpec::nlrelu(b2), x) > act_value(ActivationSpec::nlrelu(b1), x));
  }
}

TEST_CASE("analytic derivatives match central differences for the whole zoo") {
  RngStream rng(41);
  for (const ActivationSpec& spec : ActivationSpec::zoo()) {
    double worst = 0.0;
    int checked = 0;
    while (checked < 1000) {
      double x = (rng.next_double() - 0.5) * 12.0;
      if (spec.has_kink() && std::abs(x) < 1e-3) continue;  // non-differentiable neighborhood
      const double a = act_deriv(spec, x);
      const double n = central_diff(spec, x, 1e-6);
      const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
      worst = std::max(worst, rel);
      ++checked;
    }
    INFO(spec.label());
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("zoo spot values") {
  CHECK(act_deriv(ActivationSpec::sigmoid(), 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(act_value(ActivationSpec::sigmoid(), 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(act_value(ActivationSpec::softplus(), 0.0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(act_value(ActivationSpec::tanh(), 0.0) == 0.0);
  CHECK(act_value(ActivationSpec::lrelu(0.01), -3.0) == doctest::Approx(-0.03).epsilon(1e-15));
  CHECK(act_value(ActivationSpec::prelu(0.25), -2.0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(act_value(ActivationSpec::elu(1.0), -50.0) == doctest::Approx(-1.0).epsilon(1e-12));
  const ActivationSpec selu = ActivationSpec::selu();
  CHECK(selu.selu_lambda == doctest::Approx(1.0507009873554805).epsilon(1e-15));
  CHECK(selu.selu_alpha == doctest::Approx(1.6732632423543772).epsilon(1e-15));
  CHECK(act_value(ActivationSpec::swish(), 0.0) == 0.0);
  CHECK(act_deriv(ActivationSpec::swish(), 0.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("softplus stays finite and exact far out") {
  CHECK(std::isfinite(act_value(ActivationSpec::softplus(), 800.0)));
  CHECK(act_value(ActivationSpec::softplus(), 800.0) == doctest::Approx(800.0).epsilon(1e-15));
  CHECK(act_value(ActivationSpec::softplus(), -800.0) == 0.0);
  CHECK(std::isfinite(act_deriv(ActivationSpec::softplus(), -800.0)));
}

TEST_CASE("emit_curve grids and errors") {
  const auto pts = emit_curve(ActivationSpec::nlrelu(1.0), 0.0, 10.0, 101, CurveKind::derivative);
  REQUIRE(pts.size() == 101);
  CHECK(pts.front().x == 0.0);
  CHECK(pts.back().x == 10.0);
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].y < pts[i - 1].y);  // decreasing

  const auto relu_pts = emit_curve(ActivationSpec::relu(), 1.0, 10.0, 10, CurveKind::derivative);
  for (const auto& p : relu_pts) CHECK(p.y == 1.0);

  const auto sig = emit_curve(ActivationSpec::sigmoid(), -1.0, 1.0, 3, CurveKind::derivative);
  CHECK(sig[1].x == 0.0);
  CHECK(sig[1].y == doctest::Approx(0.25).epsilon(1e-15));

  CHECK_THROWS_AS(emit_curve(ActivationSpec::relu(), 1.0, 1.0, 5, CurveKind::value), Error);
  CHECK_THROWS_AS(emit_curve(ActivationSpec::relu(), 0.0, 1.0, 1, CurveKind::value), Error);
}

TEST_CASE("extended-precision forward agrees with the double path") {
  RngStream rng(47);
  for (const ActivationSpec& spec : ActivationSpec::zoo()) {
    for (int i = 0; i < 200; ++i) {
      const double x = (rng.next_double() - 0.5) * 10.0;
      const double d = act_value(spec, x);
      const double ld = static_cast<double>(act_value_ld(spec, static_cast<long double>(x)));
      CHECK(std::abs(d - ld) <= 1e-14 * std::max(1.0, std::abs(d)));
    }
  }
}

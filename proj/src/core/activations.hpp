#pragma once

#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace nlr {

enum class Act { nlrelu, relu, softplus, sigmoid, tanh, lrelu, prelu, elu, selu, swish };

const char* act_name(Act kind);
Act act_from_name(const std::string& name);  // throws config error on unknown name

// One activation function plus its parameters. Only the fields relevant to
// `kind` matter; the rest keep their defaults so a spec can be echoed into
// CSV comments without ambiguity.
struct ActivationSpec {
  Act kind = Act::relu;
  double beta = 1.0;           // nlrelu scale, > 0
  double slope = 0.01;         // lrelu negative slope
  double initial_slope = 0.25; // prelu starting slope (trainable in a network)
  double alpha = 1.0;          // elu
  double selu_lambda = 1.0507009873554804934193349852946;
  double selu_alpha = 1.6732632423543772848170429916717;
  double swish_beta = 1.0;     // fixed; kept explicit for the record

  static ActivationSpec nlrelu(double beta = 1.0);
  static ActivationSpec relu();
  static ActivationSpec softplus();
  static ActivationSpec sigmoid();
  static ActivationSpec tanh();
  static ActivationSpec lrelu(double slope = 0.01);
  static ActivationSpec prelu(double initial_slope = 0.25);
  static ActivationSpec elu(double alpha = 1.0);
  static ActivationSpec selu();
  static ActivationSpec swish();

  // All ten members with default parameters, in a fixed order.
  static std::vector<ActivationSpec> zoo();

  void validate() const;        // throws config error on bad parameters
  std::string label() const;    // e.g. "nlrelu(beta=0.7)" for CSV echoes

  // True if the function has a non-differentiable point at x = 0.
  bool has_kink() const;
};

// Scalar forward / first derivative.
//
// nlrelu: ln(beta*max(0,x) + 1); derivative beta/(beta*x+1) for x >= 0 and 0
// for x < 0 (x = 0 takes the upper branch, so the derivative there is beta).
// relu's derivative at 0 is 0 by convention; the asymmetry is deliberate.
// prelu uses spec.initial_slope here; inside a network the trained slope
// parameter takes its place.
double act_value(const ActivationSpec& spec, double x);
double act_deriv(const ActivationSpec& spec, double x);

// Extended-precision forward, used by the finite-difference engine where
// double rounding in a perturbed pass would swamp small loss differences.
long double act_value_ld(const ActivationSpec& spec, long double x);

// Elementwise tensor application.
Tensor act_forward(const ActivationSpec& spec, const Tensor& x);
Tensor act_derivative(const ActivationSpec& spec, const Tensor& x);

// forward(a + delta) - forward(a); requires a >= 0 and delta > 0.
// For nlrelu this is the output gap produced by an input gap of delta, which
// shrinks as a grows (the small-value discrimination property).
double discrimination_gap(const ActivationSpec& spec, double a, double delta);

enum class CurveKind { value, derivative };

struct CurvePoint {
  double x;
  double y;
};

// n_points evenly spaced samples over [x_min, x_max], endpoints included.
std::vector<CurvePoint> emit_curve(const ActivationSpec& spec, double x_min, double x_max,
                                   std::size_t n_points, CurveKind which);

}  // namespace nlr

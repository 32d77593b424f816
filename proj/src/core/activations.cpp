#include "core/activations.hpp"

#include <cmath>
#include <sstream>

#include "core/common.hpp"

namespace nlr {

const char* act_name(Act kind) {
  switch (kind) {
    case Act::nlrelu: return "nlrelu";
    case Act::relu: return "relu";
    case Act::softplus: return "softplus";
    case Act::sigmoid: return "sigmoid";
    case Act::tanh: return "tanh";
    case Act::lrelu: return "lrelu";
    case Act::prelu: return "prelu";
    case Act::elu: return "elu";
    case Act::selu: return "selu";
    case Act::swish: return "swish";
  }
  throw_internal("act_name: bad enum value");
}

Act act_from_name(const std::string& name) {
  for (Act a : {Act::nlrelu, Act::relu, Act::softplus, Act::sigmoid, Act::tanh, Act::lrelu,
                Act::prelu, Act::elu, Act::selu, Act::swish}) {
    if (name == act_name(a)) return a;
  }
  throw_config("unknown activation kind '" + name + "'");
}

ActivationSpec ActivationSpec::nlrelu(double beta) {
  ActivationSpec s;
  s.kind = Act::nlrelu;
  s.beta = beta;
  s.validate();
  return s;
}
ActivationSpec ActivationSpec::relu() { return ActivationSpec{Act::relu}; }
ActivationSpec ActivationSpec::softplus() { return ActivationSpec{Act::softplus}; }
ActivationSpec ActivationSpec::sigmoid() { return ActivationSpec{Act::sigmoid}; }
ActivationSpec ActivationSpec::tanh() { return ActivationSpec{Act::tanh}; }
ActivationSpec ActivationSpec::lrelu(double slope) {
  ActivationSpec s;
  s.kind = Act::lrelu;
  s.slope = slope;
  s.validate();
  return s;
}
ActivationSpec ActivationSpec::prelu(double initial_slope) {
  ActivationSpec s;
  s.kind = Act::prelu;
  s.initial_slope = initial_slope;
  s.validate();
  return s;
}
ActivationSpec ActivationSpec::elu(double alpha) {
  ActivationSpec s;
  s.kind = Act::elu;
  s.alpha = alpha;
  s.validate();
  return s;
}
ActivationSpec ActivationSpec::selu() { return ActivationSpec{Act::selu}; }
ActivationSpec ActivationSpec::swish() { return ActivationSpec{Act::swish}; }

std::vector<ActivationSpec> ActivationSpec::zoo() {
  return {nlrelu(), relu(), softplus(), sigmoid(), tanh(),
          lrelu(),  prelu(), elu(),      selu(),    swish()};
}

void ActivationSpec::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(beta) || !finite(slope) || !finite(initial_slope) || !finite(alpha) ||
      !finite(selu_lambda) || !finite(selu_alpha) || !finite(swish_beta))
    throw_config("activation parameters must be finite");
  if (kind == Act::nlrelu && beta <= 0.0)
    throw_config("nlrelu: beta must be positive, got " + std::to_string(beta));
}

std::string ActivationSpec::label() const {
  std::ostringstream os;
  os << act_name(kind);
  switch (kind) {
    case Act::nlrelu: os << "(beta=" << beta << ")"; break;
    case Act::lrelu: os << "(slope=" << slope << ")"; break;
    case Act::prelu: os << "(initial_slope=" << initial_slope << ")"; break;
    case Act::elu: os << "(alpha=" << alpha << ")"; break;
    default: break;
  }
  return os.str();
}

bool ActivationSpec::has_kink() const {
  switch (kind) {
    case Act::nlrelu:
    case Act::relu:
    case Act::lrelu:
    case Act::prelu:
    case Act::elu:
    case Act::selu:
      return true;
    default:
      return false;
  }
}

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// softplus(x) = max(x,0) + log1p(exp(-|x|)); avoids exp overflow for large x.
double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

double act_value(const ActivationSpec& spec, double x) {
  switch (spec.kind) {
    case Act::nlrelu: return x > 0.0 ? std::log1p(spec.beta * x) : 0.0;
    case Act::relu: return x > 0.0 ? x : 0.0;
    case Act::softplus: return stable_softplus(x);
    case Act::sigmoid: return stable_sigmoid(x);
    case Act::tanh: return std::tanh(x);
    case Act::lrelu: return x > 0.0 ? x : spec.slope * x;
    case Act::prelu: return x > 0.0 ? x : spec.initial_slope * x;
    case Act::elu: return x > 0.0 ? x : spec.alpha * std::expm1(x);
    case Act::selu:
      return x > 0.0 ? spec.selu_lambda * x : spec.selu_lambda * spec.selu_alpha * std::expm1(x);
    case Act::swish: return x * stable_sigmoid(spec.swish_beta * x);
  }
  throw_internal("act_value: bad enum value");
}

double act_deriv(const ActivationSpec& spec, double x) {
  switch (spec.kind) {
    case Act::nlrelu: return x >= 0.0 ? spec.beta / (spec.beta * x + 1.0) : 0.0;
    case Act::relu: return x > 0.0 ? 1.0 : 0.0;
    case Act::softplus: return stable_sigmoid(x);
    case Act::sigmoid: {
      const double s = stable_sigmoid(x);
      return s * (1.0 - s);
    }
    case Act::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Act::lrelu: return x > 0.0 ? 1.0 : spec.slope;
    case Act::prelu: return x > 0.0 ? 1.0 : spec.initial_slope;
    case Act::elu: return x > 0.0 ? 1.0 : spec.alpha * std::exp(x);
    case Act::selu:
      return x > 0.0 ? spec.selu_lambda : spec.selu_lambda * spec.selu_alpha * std::exp(x);
    case Act::swish: {
      const double s = stable_sigmoid(spec.swish_beta * x);
      return s + spec.swish_beta * x * s * (1.0 - s);
    }
  }
  throw_internal("act_deriv: bad enum value");
}

long double act_value_ld(const ActivationSpec& spec, long double x) {
  const auto sig = [](long double v) -> long double {
    if (v >= 0.0L) return 1.0L / (1.0L + expl(-v));
    const long double e = expl(v);
    return e / (1.0L + e);
  };
  switch (spec.kind) {
    case Act::nlrelu: return x > 0.0L ? log1pl(static_cast<long double>(spec.beta) * x) : 0.0L;
    case Act::relu: return x > 0.0L ? x : 0.0L;
    case Act::softplus: return std::max(x, 0.0L) + log1pl(expl(-fabsl(x)));
    case Act::sigmoid: return sig(x);
    case Act::tanh: return tanhl(x);
    case Act::lrelu: return x > 0.0L ? x : static_cast<long double>(spec.slope) * x;
    case Act::prelu: return x > 0.0L ? x : static_cast<long double>(spec.initial_slope) * x;
    case Act::elu: return x > 0.0L ? x : static_cast<long double>(spec.alpha) * expm1l(x);
    case Act::selu:
      return x > 0.0L ? static_cast<long double>(spec.selu_lambda) * x
                      : static_cast<long double>(spec.selu_lambda) *
                            static_cast<long double>(spec.selu_alpha) * expm1l(x);
    case Act::swish: return x * sig(static_cast<long double>(spec.swish_beta) * x);
  }
  throw_internal("act_value_ld: bad enum value");
}

Tensor act_forward(const ActivationSpec& spec, const Tensor& x) {
  spec.validate();
  Tensor out(x.shape());
  double* o = out.data();
  const double* p = x.data();
  for (std::size_t i = 0, n = x.size(); i < n; ++i) o[i] = act_value(spec, p[i]);
  require_finite(out, "act_forward");
  return out;
}

Tensor act_derivative(const ActivationSpec& spec, const Tensor& x) {
  spec.validate();
  Tensor out(x.shape());
  double* o = out.data();
  const double* p = x.data();
  for (std::size_t i = 0, n = x.size(); i < n; ++i) o[i] = act_deriv(spec, p[i]);
  require_finite(out, "act_derivative");
  return out;
}

double discrimination_gap(const ActivationSpec& spec, double a, double delta) {
  spec.validate();
  if (a < 0.0) throw_config("discrimination_gap: a must be >= 0");
  if (delta <= 0.0) throw_config("discrimination_gap: delta must be > 0");
  return act_value(spec, a + delta) - act_value(spec, a);
}

std::vector<CurvePoint> emit_curve(const ActivationSpec& spec, double x_min, double x_max,
                                   std::size_t n_points, CurveKind which) {
  spec.validate();
  if (!(x_min < x_max)) throw_config("emit_curve: x_min must be below x_max");
  if (n_points < 2) throw_config("emit_curve: n_points must be at least 2");
  std::vector<CurvePoint> pts;
  pts.reserve(n_points);
  const double step = (x_max - x_min) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double x = (i + 1 == n_points) ? x_max : x_min + step * static_cast<double>(i);
    const double y = which == CurveKind::value ? act_value(spec, x) : act_deriv(spec, x);
    pts.push_back({x, y});
  }
  return pts;
}

}  // namespace nlr

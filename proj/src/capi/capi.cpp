#include "nlrelu/nlrelu.h"

#include <cstring>
#include <string>

#include "core/activations.hpp"
#include "core/common.hpp"
#include "core/dataset.hpp"
#include "core/harness.hpp"

namespace {

thread_local std::string g_last_error;

nlr_status fail(nlr_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename F>
nlr_status guarded(F&& f) {
  try {
    f();
    return NLR_OK;
  } catch (const nlr::Error& e) {
    return fail(static_cast<nlr_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::exception& e) {
    return fail(NLR_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string arg(const char* s) { return s ? std::string(s) : std::string(); }

}  // namespace

struct nlr_activation {
  nlr::ActivationSpec spec;
};

struct nlr_dataset {
  nlr::Dataset data;
};

extern "C" {

const char* nlr_version(void) { return "1.0.0"; }

const char* nlr_last_error(void) { return g_last_error.c_str(); }

void nlr_string_free(char* s) { delete[] s; }

nlr_status nlr_activation_create(const char* spec_json, nlr_activation** out) {
  if (!out) return fail(NLR_ERR_CONFIG, "nlr_activation_create: out is NULL");
  return guarded([&] { *out = new nlr_activation{nlr::parse_activation_text(arg(spec_json))}; });
}

void nlr_activation_destroy(nlr_activation* act) { delete act; }

nlr_status nlr_activation_value(const nlr_activation* act, const double* x, double* y, size_t n) {
  if (!act || (!x && n) || (!y && n))
    return fail(NLR_ERR_CONFIG, "nlr_activation_value: NULL argument");
  return guarded([&] {
    for (size_t i = 0; i < n; ++i) y[i] = nlr::act_value(act->spec, x[i]);
  });
}

nlr_status nlr_activation_derivative(const nlr_activation* act, const double* x, double* y,
                                     size_t n) {
  if (!act || (!x && n) || (!y && n))
    return fail(NLR_ERR_CONFIG, "nlr_activation_derivative: NULL argument");
  return guarded([&] {
    for (size_t i = 0; i < n; ++i) y[i] = nlr::act_deriv(act->spec, x[i]);
  });
}

nlr_status nlr_activation_gap(const nlr_activation* act, double a, double delta, double* out) {
  if (!act || !out) return fail(NLR_ERR_CONFIG, "nlr_activation_gap: NULL argument");
  return guarded([&] { *out = nlr::discrimination_gap(act->spec, a, delta); });
}

nlr_status nlr_dataset_load_mnist(const char* images_path, const char* labels_path,
                                  nlr_dataset** out) {
  if (!out || !images_path || !labels_path)
    return fail(NLR_ERR_CONFIG, "nlr_dataset_load_mnist: NULL argument");
  return guarded([&] { *out = new nlr_dataset{nlr::load_mnist(images_path, labels_path)}; });
}

nlr_status nlr_dataset_load_cifar10(const char* const* batch_paths, size_t n_paths,
                                    nlr_dataset** out) {
  if (!out || (!batch_paths && n_paths))
    return fail(NLR_ERR_CONFIG, "nlr_dataset_load_cifar10: NULL argument");
  return guarded([&] {
    std::vector<std::string> paths;
    for (size_t i = 0; i < n_paths; ++i) paths.push_back(arg(batch_paths[i]));
    *out = new nlr_dataset{nlr::load_cifar10(paths)};
  });
}

nlr_status nlr_dataset_count(const nlr_dataset* ds, size_t* out) {
  if (!ds || !out) return fail(NLR_ERR_CONFIG, "nlr_dataset_count: NULL argument");
  *out = ds->data.n();
  return NLR_OK;
}

nlr_status nlr_dataset_dims(const nlr_dataset* ds, size_t dims[3]) {
  if (!ds || !dims) return fail(NLR_ERR_CONFIG, "nlr_dataset_dims: NULL argument");
  return guarded([&] {
    const nlr::Shape s = ds->data.sample_shape();
    dims[0] = s[0];
    dims[1] = s[1];
    dims[2] = s[2];
  });
}

void nlr_dataset_destroy(nlr_dataset* ds) { delete ds; }

#define NLR_DEFINE_RUNNER(c_name, core_fn)                                             \
  nlr_status c_name(const char* config_json, const char* out_csv, char** result_json) { \
    return guarded([&] {                                                               \
      const std::string result = nlr::core_fn(arg(config_json), arg(out_csv));         \
      if (result_json) *result_json = dup_string(result);                              \
    });                                                                                \
  }

NLR_DEFINE_RUNNER(nlr_run_curve, run_curve)
NLR_DEFINE_RUNNER(nlr_run_bias_shift, run_bias_shift)
NLR_DEFINE_RUNNER(nlr_run_grad_check, run_grad_check)

#define NLR_DEFINE_DATA_RUNNER(c_name, core_fn)                                     \
  nlr_status c_name(const char* config_json, const char* data_dir, const char* out_csv, \
                    char** result_json) {                                           \
    return guarded([&] {                                                            \
      const std::string result =                                                    \
          nlr::core_fn(arg(config_json), arg(data_dir), arg(out_csv));              \
      if (result_json) *result_json = dup_string(result);                           \
    });                                                                             \
  }

NLR_DEFINE_DATA_RUNNER(nlr_run_train, run_train)
NLR_DEFINE_DATA_RUNNER(nlr_run_beta_sweep, run_beta_sweep)
NLR_DEFINE_DATA_RUNNER(nlr_run_lr_contrast, run_lr_contrast)
NLR_DEFINE_DATA_RUNNER(nlr_run_ablate_positions, run_ablate_positions)

nlr_status nlr_make_data(const char* config_json, const char* out_dir, char** result_json) {
  return guarded([&] {
    const std::string result = nlr::run_make_data(arg(config_json), arg(out_dir));
    if (result_json) *result_json = dup_string(result);
  });
}

}  // extern "C"

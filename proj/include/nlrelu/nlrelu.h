/*
 * nlrelu: C API for the NLReLU activation micro-engine.
 *
 * All functions return nlr_status; on failure nlr_last_error() holds a
 * thread-local message describing what went wrong (valid until the next
 * failing call on the same thread). Strings returned through char** out
 * parameters are heap-allocated JSON documents; release them with
 * nlr_string_free().
 *
 * Command runners take the same JSON configuration documents the CLI
 * accepts; unknown keys are rejected. An empty or NULL config selects the
 * documented defaults. CSV/output paths may be NULL or empty to skip file
 * output.
 */
#ifndef NLRELU_H
#define NLRELU_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nlr_status {
  NLR_OK = 0,
  NLR_ERR_CONFIG = 1,   /* invalid configuration or arguments */
  NLR_ERR_IO = 2,       /* dataset or file problem */
  NLR_ERR_INTERNAL = 3, /* broken invariant, non-finite values */
} nlr_status;

const char* nlr_version(void);
const char* nlr_last_error(void);
void nlr_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Activation handles                                                  */
/* ------------------------------------------------------------------ */

typedef struct nlr_activation nlr_activation;

/* spec_json: {"kind": "nlrelu", "beta": 1.0} or a bare name like "relu".
 * Kinds: nlrelu relu softplus sigmoid tanh lrelu prelu elu selu swish. */
nlr_status nlr_activation_create(const char* spec_json, nlr_activation** out);
void nlr_activation_destroy(nlr_activation* act);

nlr_status nlr_activation_value(const nlr_activation* act, const double* x, double* y, size_t n);
nlr_status nlr_activation_derivative(const nlr_activation* act, const double* x, double* y,
                                     size_t n);
/* forward(a + delta) - forward(a); a >= 0, delta > 0. */
nlr_status nlr_activation_gap(const nlr_activation* act, double a, double delta, double* out);

/* ------------------------------------------------------------------ */
/* Dataset handles                                                     */
/* ------------------------------------------------------------------ */

typedef struct nlr_dataset nlr_dataset;

nlr_status nlr_dataset_load_mnist(const char* images_path, const char* labels_path,
                                  nlr_dataset** out);
nlr_status nlr_dataset_load_cifar10(const char* const* batch_paths, size_t n_paths,
                                    nlr_dataset** out);
nlr_status nlr_dataset_count(const nlr_dataset* ds, size_t* out);
/* dims: {channels, height, width} */
nlr_status nlr_dataset_dims(const nlr_dataset* ds, size_t dims[3]);
void nlr_dataset_destroy(nlr_dataset* ds);

/* ------------------------------------------------------------------ */
/* Command runners (one per CLI subcommand)                            */
/* ------------------------------------------------------------------ */

nlr_status nlr_run_curve(const char* config_json, const char* out_csv, char** result_json);
nlr_status nlr_run_bias_shift(const char* config_json, const char* out_csv, char** result_json);
nlr_status nlr_run_grad_check(const char* config_json, const char* out_csv, char** result_json);
nlr_status nlr_run_train(const char* config_json, const char* data_dir, const char* out_csv,
                         char** result_json);
nlr_status nlr_run_beta_sweep(const char* config_json, const char* data_dir, const char* out_csv,
                              char** result_json);
nlr_status nlr_run_lr_contrast(const char* config_json, const char* data_dir, const char* out_csv,
                               char** result_json);
nlr_status nlr_run_ablate_positions(const char* config_json, const char* data_dir,
                                    const char* out_csv, char** result_json);
nlr_status nlr_make_data(const char* config_json, const char* out_dir, char** result_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* NLRELU_H */

/* C interface to the spinread library.
 *
 * Objects are opaque handles created by sr_*_create/load/... functions and
 * released with the matching sr_*_free. Every fallible call returns an
 * sr_status; on failure sr_last_error() describes the problem for the calling
 * thread. Array getters copy into caller buffers and fail with SR_ERR_SHAPE
 * when the capacity is smaller than the matching sr_*_size(). */
#ifndef SPINREAD_H
#define SPINREAD_H

#include <stddef.h>
#include <stdint.h>

#if defined(SPINREAD_BUILDING)
#define SR_API __attribute__((visibility("default")))
#else
#define SR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sr_status {
  SR_OK = 0,
  SR_ERR_SHAPE = 1,
  SR_ERR_DOMAIN = 2,
  SR_ERR_DEGENERATE_BOUNDARY = 3,
  SR_ERR_DEGENERATE_TRAINING = 4,
  SR_ERR_DIVERGENCE = 5,
  SR_ERR_FIT_FAILURE = 6,
  SR_ERR_STATE = 7,
  SR_ERR_PARSE = 8,
  SR_ERR_IO = 9,
  SR_ERR_NULL_ARGUMENT = 10,
  SR_ERR_INTERNAL = 11
} sr_status;

typedef struct sr_profile sr_profile;
typedef struct sr_trace sr_trace;
typedef struct sr_sweep sr_sweep;
typedef struct sr_model sr_model;
typedef struct sr_rabi sr_rabi;
typedef struct sr_report sr_report;

SR_API const char* sr_version(void);
/* Version shared by every file schema the library reads and writes. */
SR_API int sr_format_version(void);
SR_API const char* sr_status_name(sr_status status);
/* Message of the last failed call on this thread; "" if none. */
SR_API const char* sr_last_error(void);
/* Line of the last parse error on this thread, 0 otherwise. */
SR_API size_t sr_last_error_line(void);

/* Simulator ---------------------------------------------------------------- */

typedef struct sr_params {
  double steady_rate;
  double bright_boost;
  double dark_dip;
  double tau_bright_ns;
  double tau_isc_ns;
  double prompt_excess;
  double tau_prompt_ns;
  double trace_length_ns;
  double bin_width_ns;
} sr_params;

SR_API void sr_params_default(sr_params* out);
SR_API void sr_params_paper_like(sr_params* out);
SR_API sr_status sr_params_validate(const sr_params* params);
SR_API sr_status sr_calibrate(const sr_params* base, double mean_photons, double max_contrast,
                              sr_params* out);
SR_API sr_status sr_max_gate_contrast(const sr_params* params, double* out);

SR_API uint64_t sr_derive_seed(uint64_t base_seed, uint64_t index);

SR_API sr_status sr_profiles_create(const sr_params* params, sr_profile** bright,
                                    sr_profile** dark);
SR_API sr_status sr_profile_mix(double population, const sr_profile* bright,
                                const sr_profile* dark, sr_profile** out);
SR_API size_t sr_profile_size(const sr_profile* profile);
SR_API sr_status sr_profile_rates(const sr_profile* profile, double* out, size_t capacity);
SR_API void sr_profile_free(sr_profile* profile);

/* Traces ------------------------------------------------------------------- */

SR_API sr_status sr_trace_create(const uint64_t* counts, size_t bins, double bin_width_ns,
                                 uint64_t repetitions, const char* label, sr_trace** out);
SR_API sr_status sr_trace_simulate(const sr_profile* profile, uint64_t repetitions,
                                   uint64_t seed, const char* label, sr_trace** out);
SR_API sr_status sr_trace_load(const char* path, sr_trace** out);
SR_API sr_status sr_trace_save(const sr_trace* trace, const char* path);
SR_API size_t sr_trace_size(const sr_trace* trace);
SR_API uint64_t sr_trace_repetitions(const sr_trace* trace);
SR_API double sr_trace_bin_width(const sr_trace* trace);
SR_API const char* sr_trace_label(const sr_trace* trace);
SR_API sr_status sr_trace_counts(const sr_trace* trace, uint64_t* out, size_t capacity);
SR_API sr_status sr_differential(const sr_trace* bright, const sr_trace* dark, double* out,
                                 size_t capacity);
/* (sum bright - sum dark) / sum bright per measurement; negative if swapped. */
SR_API sr_status sr_boundary_contrast(const sr_trace* bright, const sr_trace* dark, double* out);
SR_API void sr_trace_free(sr_trace* trace);

/* Gated readout ------------------------------------------------------------ */

typedef struct sr_gate_metrics {
  size_t start_bin;
  size_t width_bins;
  double L0;
  double L1;
  double contrast;
  double total_variance;
  int degenerate;
} sr_gate_metrics;

SR_API sr_status sr_gated_population(double x_sum, double L0, double L1, double* p,
                                     double* sigma2);
SR_API sr_status sr_contrast(double L0, double L1, double* out);
SR_API sr_status sr_total_variance(double L0, double L1, double* out);

SR_API sr_status sr_sweep_run(const sr_trace* bright, const sr_trace* dark, size_t start_bin,
                              sr_sweep** out);
SR_API size_t sr_sweep_size(const sr_sweep* sweep);
SR_API sr_status sr_sweep_row(const sr_sweep* sweep, size_t index, sr_gate_metrics* out);
/* Fails with SR_ERR_DEGENERATE_BOUNDARY when every width is degenerate. */
SR_API sr_status sr_sweep_optima(const sr_sweep* sweep, size_t* max_contrast_width,
                                 size_t* min_variance_width);
SR_API sr_status sr_sweep_save(const sr_sweep* sweep, const char* path);
SR_API void sr_sweep_free(sr_sweep* sweep);

/* Weighted readout model --------------------------------------------------- */

typedef enum sr_init { SR_INIT_GATED = 0, SR_INIT_ZEROS = 1 } sr_init;

typedef struct sr_train_config {
  double weight_factor;
  double learning_rate; /* in units of 1 / (largest Hessian eigenvalue) */
  uint64_t max_iterations;
  double relative_tolerance;
  uint64_t window;
  sr_init init;
  int accelerate;
} sr_train_config;

typedef struct sr_loss {
  double prediction_term;
  double variance_term;
  double total;
} sr_loss;

SR_API void sr_train_config_default(sr_train_config* out);

SR_API sr_status sr_model_train_boundary(const sr_trace* bright, const sr_trace* dark,
                                         const sr_train_config* config, sr_model** out);
/* Needs a fit attached with sr_rabi_attach_fit. */
SR_API sr_status sr_model_train_rabi(const sr_rabi* dataset, const sr_train_config* config,
                                     sr_model** out);
/* Equal-weight model reproducing the gated readout of a window calibrated on
 * the two boundary traces. */
SR_API sr_status sr_model_gated(const sr_trace* bright, const sr_trace* dark, size_t start_bin,
                                size_t width_bins, sr_model** out);
SR_API sr_status sr_model_load(const char* path, sr_model** out);
SR_API sr_status sr_model_save(const sr_model* model, const char* path);
SR_API size_t sr_model_size(const sr_model* model);
SR_API double sr_model_intercept(const sr_model* model);
SR_API sr_status sr_model_weights(const sr_model* model, double* out, size_t capacity);
SR_API sr_status sr_model_training_loss(const sr_model* model, sr_loss* out);
SR_API sr_status sr_model_predict(const sr_model* model, const sr_trace* trace, double* p,
                                  double* sigma2);
SR_API void sr_model_free(sr_model* model);

/* Rabi datasets ------------------------------------------------------------ */

typedef struct sr_fit {
  double offset;
  double amplitude;
  double frequency; /* cycles per ns */
  double phase;
  double residual_rms;
} sr_fit;

typedef struct sr_schedule {
  size_t count;
  double step_ns;
  double period_ns;
} sr_schedule;

SR_API void sr_schedule_default(sr_schedule* out);
/* Ideal population 0.5 + 0.5 cos(2 pi t / period) at each scheduled duration. */
SR_API sr_status sr_schedule_populations(const sr_schedule* schedule, double* durations,
                                         double* populations, size_t capacity);

SR_API sr_status sr_rabi_simulate(const sr_profile* bright, const sr_profile* dark,
                                  const sr_schedule* schedule, uint64_t repetitions,
                                  uint64_t seed, unsigned threads, sr_rabi** out);
SR_API sr_status sr_rabi_load(const char* path, sr_rabi** out);
/* seed may be NULL. */
SR_API sr_status sr_rabi_save(const sr_rabi* dataset, const char* path, const uint64_t* seed);
SR_API size_t sr_rabi_size(const sr_rabi* dataset);
SR_API sr_status sr_rabi_durations(const sr_rabi* dataset, double* out, size_t capacity);
SR_API sr_status sr_rabi_readout(const sr_rabi* dataset, const sr_model* model, double* p,
                                 size_t capacity);
/* Attaches a fit and its peak/trough-anchored targets in [0, 1]. */
SR_API sr_status sr_rabi_attach_fit(sr_rabi* dataset, const sr_fit* fit);
SR_API sr_status sr_rabi_targets(const sr_rabi* dataset, double* out, size_t capacity);
SR_API void sr_rabi_free(sr_rabi* dataset);

/* Fails unless the fitted amplitude exceeds 3 times the residual rms. */
SR_API sr_status sr_fit_sinusoid(const double* durations, const double* p, size_t n,
                                 sr_fit* out);
/* Same with an explicit amplitude-to-rms threshold; 0 accepts any oscillation. */
SR_API sr_status sr_fit_sinusoid_ratio(const double* durations, const double* p, size_t n,
                                       double min_amplitude_ratio, sr_fit* out);
SR_API double sr_fit_evaluate(const sr_fit* fit, double t);
SR_API sr_status sr_fit_report_save(const char* path, const double* durations, const double* p,
                                    size_t n, const sr_fit* fit);
SR_API sr_status sr_fit_report_load(const char* path, sr_fit* out);

/* Known populations, duration_ns,population. Query the count with
 * sr_truth_load(path, NULL, NULL, 0, &n). */
SR_API sr_status sr_truth_save(const char* path, const double* durations,
                               const double* populations, size_t n);
SR_API sr_status sr_truth_load(const char* path, double* durations, double* populations,
                               size_t capacity, size_t* n);

/* Evaluation --------------------------------------------------------------- */

typedef struct sr_method_summary {
  char name[64];
  double avg_formula_variance;
  double empirical_mse;
  int mse_against_truth;
  double contrast; /* fluorescence contrast of the weighted signal */
  double swing;    /* fitted peak - fitted trough in population units */
} sr_method_summary;

/* Compares the max-C gate, min-V gate (both swept on the boundary traces) and
 * the model. truth may be NULL; otherwise it holds sr_rabi_size() values. */
SR_API sr_status sr_report_evaluate(const sr_rabi* test, const sr_model* model,
                                    const sr_trace* bright, const sr_trace* dark,
                                    size_t start_bin, const double* truth, sr_report** out);
SR_API size_t sr_report_method_count(const sr_report* report);
SR_API sr_status sr_report_method(const sr_report* report, size_t index, sr_method_summary* out);
SR_API sr_status sr_report_reduction(const sr_report* report, const char* method,
                                     const char* baseline, double* out);
SR_API sr_status sr_report_save(const sr_report* report, const char* path);
/* Human-readable summary; the pointer lives as long as the report. */
SR_API const char* sr_report_text(const sr_report* report);
SR_API void sr_report_free(sr_report* report);

/* Writes duration_ns,p_original,p_repaired,q_fit, p_original being the min-V
 * gate swept on the boundary traces. */
SR_API sr_status sr_repair_save(const sr_rabi* dataset, const sr_model* model,
                                const sr_trace* bright, const sr_trace* dark, size_t start_bin,
                                const char* path);

/* Run configuration -------------------------------------------------------- */

typedef struct sr_run_config {
  sr_params simulator;
  uint64_t boundary_repetitions;
  uint64_t rabi_repetitions;
  uint64_t test_repetitions;
  sr_schedule rabi;
  sr_train_config train;
  size_t start_bin;
  double fit_min_amplitude_ratio;
  uint64_t seed;
  unsigned threads;
} sr_run_config;

SR_API void sr_run_config_default(sr_run_config* out);
/* Applies a key=value config file on top of *config. */
SR_API sr_status sr_run_config_load(const char* path, sr_run_config* config);
/* Config text reproducing *config; release with sr_string_free. */
SR_API sr_status sr_run_config_format(const sr_run_config* config, char** out);

SR_API sr_status sr_write_text(const char* path, const char* text);
SR_API void sr_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* SPINREAD_H */

#include "spinread/spinread.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>

#include "spinread/calibration.hpp"
#include "spinread/config.hpp"
#include "spinread/error.hpp"
#include "spinread/evaluation.hpp"
#include "spinread/gate.hpp"
#include "spinread/io.hpp"
#include "spinread/rabi.hpp"
#include "spinread/regression.hpp"
#include "spinread/trace.hpp"

using namespace spinread;

struct sr_profile {
  EmissionProfile value;
};
struct sr_trace {
  TimeTrace value;
};
struct sr_sweep {
  SweepResult value;
};
struct sr_model {
  ReadoutModel value;
};
struct sr_rabi {
  RabiDataset value;
};
struct sr_report {
  EvalReport value;
  std::string text;
};

namespace {

thread_local std::string g_last_error;
thread_local std::size_t g_last_line = 0;

sr_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Shape: return SR_ERR_SHAPE;
    case ErrorKind::Domain: return SR_ERR_DOMAIN;
    case ErrorKind::DegenerateBoundary: return SR_ERR_DEGENERATE_BOUNDARY;
    case ErrorKind::DegenerateTraining: return SR_ERR_DEGENERATE_TRAINING;
    case ErrorKind::Divergence: return SR_ERR_DIVERGENCE;
    case ErrorKind::FitFailure: return SR_ERR_FIT_FAILURE;
    case ErrorKind::State: return SR_ERR_STATE;
    case ErrorKind::Parse: return SR_ERR_PARSE;
    case ErrorKind::Io: return SR_ERR_IO;
  }
  return SR_ERR_INTERNAL;
}

struct NullArgument {
  const char* name;
};

template <class F>
sr_status guard(F&& f) noexcept {
  g_last_error.clear();
  g_last_line = 0;
  try {
    f();
    return SR_OK;
  } catch (const NullArgument& e) {
    g_last_error = std::string("null argument: ") + e.name;
    return SR_ERR_NULL_ARGUMENT;
  } catch (const ParseError& e) {
    g_last_error = e.what();
    g_last_line = e.line();
    return SR_ERR_PARSE;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SR_ERR_INTERNAL;
  }
}

template <class T>
T& need(T* p, const char* name) {
  if (!p) throw NullArgument{name};
  return *p;
}

template <class T>
const T& need(const T* p, const char* name) {
  if (!p) throw NullArgument{name};
  return *p;
}

const char* need(const char* p, const char* name) {
  if (!p) throw NullArgument{name};
  return p;
}

template <class Src>
void copy_out(const Src& src, typename Src::value_type* out, std::size_t capacity) {
  if (!out) throw NullArgument{"out"};
  if (capacity < src.size()) {
    throw_shape("buffer holds " + std::to_string(capacity) + " values, " +
                std::to_string(src.size()) + " needed");
  }
  std::copy(src.begin(), src.end(), out);
}

PhotodynamicsParams from_c(const sr_params& p) {
  return {p.steady_rate,   p.bright_boost,  p.dark_dip,        p.tau_bright_ns, p.tau_isc_ns,
          p.prompt_excess, p.tau_prompt_ns, p.trace_length_ns, p.bin_width_ns};
}

sr_params to_c(const PhotodynamicsParams& p) {
  return {p.steady_rate,   p.bright_boost,  p.dark_dip,        p.tau_bright_ns, p.tau_isc_ns,
          p.prompt_excess, p.tau_prompt_ns, p.trace_length_ns, p.bin_width_ns};
}

TrainConfig from_c(const sr_train_config& c) {
  TrainConfig t;
  t.weight_factor = c.weight_factor;
  t.learning_rate = c.learning_rate;
  t.max_iterations = c.max_iterations;
  t.relative_tolerance = c.relative_tolerance;
  t.window = c.window;
  t.init = c.init == SR_INIT_ZEROS ? InitKind::Zeros : InitKind::GatedEqualWeights;
  t.accelerate = c.accelerate != 0;
  return t;
}

sr_train_config to_c(const TrainConfig& t) {
  return {t.weight_factor,
          t.learning_rate,
          t.max_iterations,
          t.relative_tolerance,
          t.window,
          t.init == InitKind::Zeros ? SR_INIT_ZEROS : SR_INIT_GATED,
          t.accelerate ? 1 : 0};
}

RabiSchedule from_c(const sr_schedule& s) { return {s.count, s.step_ns, s.period_ns}; }
sr_schedule to_c(const RabiSchedule& s) { return {s.count, s.step_ns, s.period_ns}; }

SinusoidFit from_c(const sr_fit& f) {
  return {f.offset, f.amplitude, f.frequency, f.phase, f.residual_rms};
}
sr_fit to_c(const SinusoidFit& f) {
  return {f.offset, f.amplitude, f.frequency, f.phase, f.residual_rms};
}

RunConfig from_c(const sr_run_config& c) {
  RunConfig r;
  r.simulator = from_c(c.simulator);
  r.boundary_repetitions = c.boundary_repetitions;
  r.rabi_repetitions = c.rabi_repetitions;
  r.test_repetitions = c.test_repetitions;
  r.rabi = from_c(c.rabi);
  r.train = from_c(c.train);
  r.start_bin = c.start_bin;
  r.fit.min_amplitude_ratio = c.fit_min_amplitude_ratio;
  r.seed = c.seed;
  r.threads = c.threads;
  return r;
}

sr_run_config to_c(const RunConfig& r) {
  return {to_c(r.simulator), r.boundary_repetitions, r.rabi_repetitions, r.test_repetitions,
          to_c(r.rabi),      to_c(r.train),          r.start_bin,        r.fit.min_amplitude_ratio,
          r.seed,            r.threads};
}

std::vector<double> samples_p(const double* p, std::size_t n) {
  if (n > 0) need(p, "p");
  return std::vector<double>(p, p + n);
}

}  // namespace

extern "C" {

const char* sr_version(void) { return SPINREAD_VERSION_STRING; }

int sr_format_version(void) { return io::kFormatVersion; }

const char* sr_status_name(sr_status status) {
  switch (status) {
    case SR_OK: return "ok";
    case SR_ERR_SHAPE: return to_string(ErrorKind::Shape);
    case SR_ERR_DOMAIN: return to_string(ErrorKind::Domain);
    case SR_ERR_DEGENERATE_BOUNDARY: return to_string(ErrorKind::DegenerateBoundary);
    case SR_ERR_DEGENERATE_TRAINING: return to_string(ErrorKind::DegenerateTraining);
    case SR_ERR_DIVERGENCE: return to_string(ErrorKind::Divergence);
    case SR_ERR_FIT_FAILURE: return to_string(ErrorKind::FitFailure);
    case SR_ERR_STATE: return to_string(ErrorKind::State);
    case SR_ERR_PARSE: return to_string(ErrorKind::Parse);
    case SR_ERR_IO: return to_string(ErrorKind::Io);
    case SR_ERR_NULL_ARGUMENT: return "null argument";
    case SR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sr_last_error(void) { return g_last_error.c_str(); }

size_t sr_last_error_line(void) { return g_last_line; }

// Simulator ------------------------------------------------------------------

void sr_params_default(sr_params* out) {
  if (out) *out = to_c(PhotodynamicsParams{});
}

void sr_params_paper_like(sr_params* out) {
  if (out) *out = to_c(paper_like_params());
}

sr_status sr_params_validate(const sr_params* params) {
  return guard([&] { from_c(need(params, "params")).validate(); });
}

sr_status sr_calibrate(const sr_params* base, double mean_photons, double max_contrast,
                       sr_params* out) {
  return guard([&] {
    need(out, "out") = to_c(calibrate(from_c(need(base, "base")), {mean_photons, max_contrast}));
  });
}

sr_status sr_max_gate_contrast(const sr_params* params, double* out) {
  return guard([&] { need(out, "out") = max_gate_contrast(from_c(need(params, "params"))); });
}

uint64_t sr_derive_seed(uint64_t base_seed, uint64_t index) {
  return derive_seed(base_seed, index);
}

sr_status sr_profiles_create(const sr_params* params, sr_profile** bright, sr_profile** dark) {
  return guard([&] {
    need(bright, "bright");
    need(dark, "dark");
    auto [b, d] = make_profiles(from_c(need(params, "params")));
    auto* pb = new sr_profile{std::move(b)};
    *dark = new sr_profile{std::move(d)};
    *bright = pb;
  });
}

sr_status sr_profile_mix(double population, const sr_profile* bright, const sr_profile* dark,
                         sr_profile** out) {
  return guard([&] {
    need(out, "out");
    *out = new sr_profile{
        mix_profile(population, need(bright, "bright").value, need(dark, "dark").value)};
  });
}

size_t sr_profile_size(const sr_profile* profile) { return profile ? profile->value.size() : 0; }

sr_status sr_profile_rates(const sr_profile* profile, double* out, size_t capacity) {
  return guard([&] { copy_out(need(profile, "profile").value.rates(), out, capacity); });
}

void sr_profile_free(sr_profile* profile) { delete profile; }

// Traces ---------------------------------------------------------------------

sr_status sr_trace_create(const uint64_t* counts, size_t bins, double bin_width_ns,
                          uint64_t repetitions, const char* label, sr_trace** out) {
  return guard([&] {
    if (bins > 0) need(counts, "counts");
    need(out, "out");
    *out = new sr_trace{TimeTrace(std::vector<std::uint64_t>(counts, counts + bins),
                                              bin_width_ns, repetitions, label ? label : "")};
  });
}

sr_status sr_trace_simulate(const sr_profile* profile, uint64_t repetitions, uint64_t seed,
                            const char* label, sr_trace** out) {
  return guard([&] {
    need(out, "out");
    *out = new sr_trace{
        simulate_trace(need(profile, "profile").value, repetitions, seed, label ? label : "")};
  });
}

sr_status sr_trace_load(const char* path, sr_trace** out) {
  return guard([&] { need(out, "out");
    *out = new sr_trace{io::load_trace(need(path, "path"))}; });
}

sr_status sr_trace_save(const sr_trace* trace, const char* path) {
  return guard([&] { io::save_trace(need(path, "path"), need(trace, "trace").value); });
}

size_t sr_trace_size(const sr_trace* trace) { return trace ? trace->value.size() : 0; }

uint64_t sr_trace_repetitions(const sr_trace* trace) {
  return trace ? trace->value.repetitions() : 0;
}

double sr_trace_bin_width(const sr_trace* trace) { return trace ? trace->value.bin_width_ns() : 0; }

const char* sr_trace_label(const sr_trace* trace) {
  return trace ? trace->value.label().c_str() : "";
}

sr_status sr_trace_counts(const sr_trace* trace, uint64_t* out, size_t capacity) {
  return guard([&] { copy_out(need(trace, "trace").value.counts(), out, capacity); });
}

sr_status sr_differential(const sr_trace* bright, const sr_trace* dark, double* out,
                          size_t capacity) {
  return guard([&] {
    copy_out(differential(need(bright, "bright").value, need(dark, "dark").value), out, capacity);
  });
}

sr_status sr_boundary_contrast(const sr_trace* bright, const sr_trace* dark, double* out) {
  return guard([&] {
    need(out, "out") = boundary_contrast(need(bright, "bright").value, need(dark, "dark").value);
  });
}

void sr_trace_free(sr_trace* trace) { delete trace; }

// Gated readout --------------------------------------------------------------

sr_status sr_gated_population(double x_sum, double L0, double L1, double* p, double* sigma2) {
  return guard([&] {
    const auto e = gated_population(x_sum, L0, L1);
    need(p, "p") = e.p;
    need(sigma2, "sigma2") = e.sigma2;
  });
}

sr_status sr_contrast(double L0, double L1, double* out) {
  return guard([&] { need(out, "out") = contrast(L0, L1); });
}

sr_status sr_total_variance(double L0, double L1, double* out) {
  return guard([&] { need(out, "out") = total_variance(L0, L1); });
}

sr_status sr_sweep_run(const sr_trace* bright, const sr_trace* dark, size_t start_bin,
                       sr_sweep** out) {
  return guard([&] {
    need(out, "out");
    *out =
        new sr_sweep{sweep_gate(need(bright, "bright").value, need(dark, "dark").value, start_bin)};
  });
}

size_t sr_sweep_size(const sr_sweep* sweep) { return sweep ? sweep->value.rows.size() : 0; }

sr_status sr_sweep_row(const sr_sweep* sweep, size_t index, sr_gate_metrics* out) {
  return guard([&] {
    const auto& rows = need(sweep, "sweep").value.rows;
    if (index >= rows.size()) throw_shape("sweep row " + std::to_string(index) + " out of range");
    const auto& m = rows[index];
    need(out, "out") = {m.window.start_bin, m.window.width_bins, m.L0, m.L1,
                        m.contrast,         m.total_variance,   m.degenerate ? 1 : 0};
  });
}

sr_status sr_sweep_optima(const sr_sweep* sweep, size_t* max_contrast_width,
                          size_t* min_variance_width) {
  return guard([&] {
    const auto& s = need(sweep, "sweep").value;
    if (!s.max_contrast || !s.min_variance) {
      throw_degenerate_boundary("every gate width is degenerate");
    }
    need(max_contrast_width, "max_contrast_width") = s.max_contrast->width_bins;
    need(min_variance_width, "min_variance_width") = s.min_variance->width_bins;
  });
}

sr_status sr_sweep_save(const sr_sweep* sweep, const char* path) {
  return guard(
      [&] { io::write_file(need(path, "path"), io::format_sweep(need(sweep, "sweep").value)); });
}

void sr_sweep_free(sr_sweep* sweep) { delete sweep; }

// Models ---------------------------------------------------------------------

void sr_train_config_default(sr_train_config* out) {
  if (out) *out = to_c(TrainConfig{});
}

sr_status sr_model_train_boundary(const sr_trace* bright, const sr_trace* dark,
                                  const sr_train_config* config, sr_model** out) {
  return guard([&] {
    need(out, "out");
    *out = new sr_model{train_boundary(
        need(bright, "bright").value, need(dark, "dark").value, from_c(need(config, "config")))};
  });
}

sr_status sr_model_train_rabi(const sr_rabi* dataset, const sr_train_config* config,
                              sr_model** out) {
  return guard([&] {
    need(out, "out");
    *out =
        new sr_model{train_rabi(need(dataset, "dataset").value, from_c(need(config, "config")))};
  });
}

sr_status sr_model_gated(const sr_trace* bright, const sr_trace* dark, size_t start_bin,
                         size_t width_bins, sr_model** out) {
  return guard([&] {
    const auto cal = calibrate_gate(need(bright, "bright").value, need(dark, "dark").value,
                                    {start_bin, width_bins});
    need(out, "out");
    *out = new sr_model{gated_equivalent(cal)};
  });
}

sr_status sr_model_load(const char* path, sr_model** out) {
  return guard([&] { need(out, "out");
    *out = new sr_model{io::load_model(need(path, "path"))}; });
}

sr_status sr_model_save(const sr_model* model, const char* path) {
  return guard([&] { io::save_model(need(path, "path"), need(model, "model").value); });
}

size_t sr_model_size(const sr_model* model) { return model ? model->value.size() : 0; }

double sr_model_intercept(const sr_model* model) {
  return model ? model->value.intercept() : 0.0;
}

sr_status sr_model_weights(const sr_model* model, double* out, size_t capacity) {
  return guard([&] { copy_out(need(model, "model").value.weights(), out, capacity); });
}

sr_status sr_model_training_loss(const sr_model* model, sr_loss* out) {
  return guard([&] {
    const auto& l = need(model, "model").value.training_loss();
    need(out, "out") = {l.prediction_term, l.variance_term, l.total};
  });
}

sr_status sr_model_predict(const sr_model* model, const sr_trace* trace, double* p,
                           double* sigma2) {
  return guard([&] {
    const auto& m = need(model, "model").value;
    const auto& t = need(trace, "trace").value;
    const double value = predict(m, t);
    const double var = prediction_variance(m, t);
    if (p) *p = value;
    if (sigma2) *sigma2 = var;
  });
}

void sr_model_free(sr_model* model) { delete model; }

// Rabi -----------------------------------------------------------------------

void sr_schedule_default(sr_schedule* out) {
  if (out) *out = to_c(RabiSchedule{});
}

sr_status sr_schedule_populations(const sr_schedule* schedule, double* durations,
                                  double* populations, size_t capacity) {
  return guard([&] {
    const auto s = from_c(need(schedule, "schedule"));
    copy_out(s.durations(), durations, capacity);
    copy_out(s.populations(), populations, capacity);
  });
}

sr_status sr_rabi_simulate(const sr_profile* bright, const sr_profile* dark,
                           const sr_schedule* schedule, uint64_t repetitions, uint64_t seed,
                           unsigned threads, sr_rabi** out) {
  return guard([&] {
    need(out, "out");
    *out = new sr_rabi{simulate_rabi(need(bright, "bright").value,
                                                 need(dark, "dark").value,
                                                 from_c(need(schedule, "schedule")), repetitions,
                                                 seed, threads == 0 ? 1 : threads)};
  });
}

sr_status sr_rabi_load(const char* path, sr_rabi** out) {
  return guard([&] { need(out, "out");
    *out = new sr_rabi{io::load_rabi(need(path, "path"))}; });
}

sr_status sr_rabi_save(const sr_rabi* dataset, const char* path, const uint64_t* seed) {
  return guard([&] {
    std::optional<std::uint64_t> s;
    if (seed) s = *seed;
    io::save_rabi(need(path, "path"), need(dataset, "dataset").value, s);
  });
}

size_t sr_rabi_size(const sr_rabi* dataset) { return dataset ? dataset->value.size() : 0; }

sr_status sr_rabi_durations(const sr_rabi* dataset, double* out, size_t capacity) {
  return guard([&] { copy_out(need(dataset, "dataset").value.durations(), out, capacity); });
}

sr_status sr_rabi_readout(const sr_rabi* dataset, const sr_model* model, double* p,
                          size_t capacity) {
  return guard([&] {
    std::vector<double> values;
    for (const auto& s : readout(need(dataset, "dataset").value, need(model, "model").value)) {
      values.push_back(s.p);
    }
    copy_out(values, p, capacity);
  });
}

sr_status sr_rabi_attach_fit(sr_rabi* dataset, const sr_fit* fit) {
  return guard([&] { attach_fit(need(dataset, "dataset").value, from_c(need(fit, "fit"))); });
}

sr_status sr_rabi_targets(const sr_rabi* dataset, double* out, size_t capacity) {
  return guard([&] {
    const auto& d = need(dataset, "dataset").value;
    if (!d.targets) throw Error(ErrorKind::State, "no fit attached to the Rabi dataset");
    copy_out(*d.targets, out, capacity);
  });
}

void sr_rabi_free(sr_rabi* dataset) { delete dataset; }

sr_status sr_fit_sinusoid(const double* durations, const double* p, size_t n, sr_fit* out) {
  return sr_fit_sinusoid_ratio(durations, p, n, FitOptions{}.min_amplitude_ratio, out);
}

sr_status sr_fit_sinusoid_ratio(const double* durations, const double* p, size_t n,
                                double min_amplitude_ratio, sr_fit* out) {
  return guard([&] {
    if (!(min_amplitude_ratio >= 0.0)) throw Error(ErrorKind::Domain, "min_amplitude_ratio must be >= 0");
    const auto t = samples_p(durations, n);
    const auto y = samples_p(p, n);
    std::vector<RabiSample> samples;
    for (std::size_t i = 0; i < n; ++i) samples.push_back({t[i], y[i]});
    need(out, "out") = to_c(fit_rabi(samples, FitOptions{min_amplitude_ratio}));
  });
}

double sr_fit_evaluate(const sr_fit* fit, double t) { return fit ? from_c(*fit)(t) : 0.0; }

sr_status sr_fit_report_save(const char* path, const double* durations, const double* p,
                             size_t n, const sr_fit* fit) {
  return guard([&] {
    const auto t = samples_p(durations, n);
    const auto y = samples_p(p, n);
    std::vector<RabiSample> samples;
    for (std::size_t i = 0; i < n; ++i) samples.push_back({t[i], y[i]});
    io::write_file(need(path, "path"), io::format_fit_report(samples, from_c(need(fit, "fit"))));
  });
}

sr_status sr_fit_report_load(const char* path, sr_fit* out) {
  return guard([&] {
    std::istringstream in(io::read_file(need(path, "path")));
    try {
      need(out, "out") = to_c(io::parse_fit_report(in).second);
    } catch (const ParseError& e) {
      throw ParseError(e.line(), std::string(path) + ": " + e.detail());
    }
  });
}

sr_status sr_truth_save(const char* path, const double* durations, const double* populations,
                        size_t n) {
  return guard([&] {
    const auto t = samples_p(durations, n);
    const auto y = samples_p(populations, n);
    io::write_file(need(path, "path"), io::format_truth(t, y));
  });
}

sr_status sr_truth_load(const char* path, double* durations, double* populations,
                        size_t capacity, size_t* n) {
  return guard([&] {
    const auto truth = io::load_truth(need(path, "path"));
    need(n, "n") = truth.size();
    if (!durations && !populations) return;
    if (capacity < truth.size()) throw_shape("truth buffer too small");
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (durations) durations[i] = truth[i].duration_ns;
      if (populations) populations[i] = truth[i].p;
    }
  });
}

// Evaluation -----------------------------------------------------------------

sr_status sr_report_evaluate(const sr_rabi* test, const sr_model* model, const sr_trace* bright,
                             const sr_trace* dark, size_t start_bin, const double* truth,
                             sr_report** out) {
  return guard([&] {
    const auto& data = need(test, "test").value;
    const auto gates = baseline_gates(need(bright, "bright").value, need(dark, "dark").value,
                                      start_bin);
    std::optional<std::span<const double>> t;
    if (truth) t = std::span<const double>(truth, data.size());
    auto report = evaluate(data, need(model, "model").value, gates, t);
    auto text = report_text(report);
    need(out, "out");
    *out = new sr_report{std::move(report), std::move(text)};
  });
}

size_t sr_report_method_count(const sr_report* report) {
  return report ? report->value.methods.size() : 0;
}

sr_status sr_report_method(const sr_report* report, size_t index, sr_method_summary* out) {
  return guard([&] {
    const auto& methods = need(report, "report").value.methods;
    if (index >= methods.size()) throw_shape("method index out of range");
    const auto& m = methods[index];
    auto& o = need(out, "out");
    std::memset(o.name, 0, sizeof(o.name));
    std::strncpy(o.name, m.name.c_str(), sizeof(o.name) - 1);
    o.avg_formula_variance = m.avg_formula_variance;
    o.empirical_mse = m.empirical_mse;
    o.mse_against_truth = m.mse_against_truth ? 1 : 0;
    o.contrast = m.contrast;
    o.swing = m.swing;
  });
}

sr_status sr_report_reduction(const sr_report* report, const char* method, const char* baseline,
                              double* out) {
  return guard([&] {
    need(out, "out") =
        need(report, "report").value.reduction(need(method, "method"), need(baseline, "baseline"));
  });
}

sr_status sr_report_save(const sr_report* report, const char* path) {
  return guard([&] {
    io::write_file(need(path, "path"), io::format_report(need(report, "report").value));
  });
}

const char* sr_report_text(const sr_report* report) { return report ? report->text.c_str() : ""; }

void sr_report_free(sr_report* report) { delete report; }

sr_status sr_repair_save(const sr_rabi* dataset, const sr_model* model, const sr_trace* bright,
                         const sr_trace* dark, size_t start_bin, const char* path) {
  return guard([&] {
    const auto gates = baseline_gates(need(bright, "bright").value, need(dark, "dark").value,
                                      start_bin);
    const auto rows =
        repair(need(dataset, "dataset").value, need(model, "model").value, gates.min_variance);
    io::write_file(need(path, "path"), io::format_repair(rows));
  });
}

// Configuration --------------------------------------------------------------

void sr_run_config_default(sr_run_config* out) {
  if (out) *out = to_c(RunConfig{});
}

sr_status sr_run_config_load(const char* path, sr_run_config* config) {
  return guard([&] {
    auto& c = need(config, "config");
    c = to_c(apply_config(load_config(need(path, "path")), from_c(c)));
  });
}

sr_status sr_run_config_format(const sr_run_config* config, char** out) {
  return guard([&] {
    const auto text = format_config(from_c(need(config, "config")));
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    need(out, "out") = buf;
  });
}

sr_status sr_write_text(const char* path, const char* text) {
  return guard([&] { io::write_file(need(path, "path"), need(text, "text")); });
}

void sr_string_free(char* text) { std::free(text); }

}  // extern "C"

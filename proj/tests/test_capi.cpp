#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "spinread/spinread.h"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / ("spinread_capi_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

struct Boundaries {
  sr_trace* bright = nullptr;
  sr_trace* dark = nullptr;
  sr_profile* pb = nullptr;
  sr_profile* pd = nullptr;
  Boundaries(uint64_t reps) {
    sr_params p;
    sr_params_paper_like(&p);
    REQUIRE(sr_profiles_create(&p, &pb, &pd) == SR_OK);
    REQUIRE(sr_trace_simulate(pb, reps, sr_derive_seed(1, 0), "bright", &bright) == SR_OK);
    REQUIRE(sr_trace_simulate(pd, reps, sr_derive_seed(1, 1), "dark", &dark) == SR_OK);
  }
  ~Boundaries() {
    sr_trace_free(bright);
    sr_trace_free(dark);
    sr_profile_free(pb);
    sr_profile_free(pd);
  }
};

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(sr_version()).size() > 0);
  CHECK(sr_format_version() == 1);
  CHECK(std::string(sr_status_name(SR_OK)) == "ok");
  for (int s = SR_OK; s <= SR_ERR_INTERNAL; ++s) {
    CHECK(std::strlen(sr_status_name(static_cast<sr_status>(s))) > 0);
  }
}

TEST_CASE("closed forms through the C API") {
  double p = 0, s2 = 0;
  REQUIRE(sr_gated_population(0.15, 0.2, 0.1, &p, &s2) == SR_OK);
  CHECK(p == doctest::Approx(0.5));
  CHECK(s2 == doctest::Approx(0.15 / 0.01));
  double c = 0, v = 0;
  REQUIRE(sr_contrast(0.2, 0.14, &c) == SR_OK);
  CHECK(c == doctest::Approx(0.3));
  REQUIRE(sr_total_variance(0.2, 0.1, &v) == SR_OK);
  CHECK(v == doctest::Approx(0.3 / (2 * 0.01)));
  REQUIRE(sr_contrast(0.1, 0.2, &c) == SR_OK);
  CHECK(c == doctest::Approx(-1.0));
  CHECK(sr_contrast(0.0, 0.2, &c) == SR_ERR_DEGENERATE_BOUNDARY);
  CHECK(std::string(sr_last_error()).size() > 0);
  CHECK(sr_contrast(0.2, 0.1, nullptr) == SR_ERR_NULL_ARGUMENT);
}

TEST_CASE("parameter helpers") {
  sr_params p;
  sr_params_default(&p);
  CHECK(sr_params_validate(&p) == SR_OK);
  p.tau_isc_ns = -1;
  CHECK(sr_params_validate(&p) == SR_ERR_DOMAIN);
  sr_params base, out;
  sr_params_default(&base);
  REQUIRE(sr_calibrate(&base, 0.02, 0.3, &out) == SR_OK);
  double m = 0;
  REQUIRE(sr_max_gate_contrast(&out, &m) == SR_OK);
  CHECK(m == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(sr_derive_seed(1, 0) != sr_derive_seed(1, 1));
  CHECK(sr_derive_seed(1, 0) == sr_derive_seed(1, 0));
}

TEST_CASE("traces") {
  const uint64_t counts[] = {1, 2, 3};
  sr_trace* t = nullptr;
  REQUIRE(sr_trace_create(counts, 3, 2.0, 10, "x", &t) == SR_OK);
  CHECK(sr_trace_size(t) == 3);
  CHECK(sr_trace_repetitions(t) == 10);
  CHECK(sr_trace_bin_width(t) == 2.0);
  CHECK(std::string(sr_trace_label(t)) == "x");
  uint64_t back[3];
  CHECK(sr_trace_counts(t, back, 2) == SR_ERR_SHAPE);
  REQUIRE(sr_trace_counts(t, back, 3) == SR_OK);
  CHECK(back[2] == 3);
  const auto dir = temp_dir();
  const auto path = (dir / "t.csv").string();
  REQUIRE(sr_trace_save(t, path.c_str()) == SR_OK);
  sr_trace* loaded = nullptr;
  REQUIRE(sr_trace_load(path.c_str(), &loaded) == SR_OK);
  CHECK(sr_trace_size(loaded) == 3);
  sr_trace_free(loaded);
  sr_trace_free(t);
  CHECK(sr_trace_create(counts, 0, 2.0, 10, nullptr, &t) == SR_ERR_SHAPE);
  CHECK(sr_trace_create(counts, 3, 2.0, 0, nullptr, &t) == SR_ERR_DOMAIN);
  CHECK(sr_trace_load((dir / "missing.csv").string().c_str(), &t) == SR_ERR_IO);

  std::FILE* f = std::fopen((dir / "bad.csv").string().c_str(), "w");
  std::fputs("# format=spinread-trace 1\n# repetitions=3\nbin_index,counts\n0,1\n1,q\n", f);
  std::fclose(f);
  CHECK(sr_trace_load((dir / "bad.csv").string().c_str(), &t) == SR_ERR_PARSE);
  CHECK(sr_last_error_line() == 5);
  fs::remove_all(dir);
}

TEST_CASE("sweep, gated model and prediction agree") {
  Boundaries b(1000000);
  sr_sweep* sweep = nullptr;
  REQUIRE(sr_sweep_run(b.bright, b.dark, 0, &sweep) == SR_OK);
  size_t wc = 0, wv = 0;
  REQUIRE(sr_sweep_optima(sweep, &wc, &wv) == SR_OK);
  CHECK(wc < wv);
  sr_gate_metrics row;
  REQUIRE(sr_sweep_row(sweep, wv - 1, &row) == SR_OK);
  CHECK(row.width_bins == wv);
  CHECK(sr_sweep_row(sweep, sr_sweep_size(sweep), &row) == SR_ERR_SHAPE);

  sr_model* gated = nullptr;
  REQUIRE(sr_model_gated(b.bright, b.dark, 0, wv, &gated) == SR_OK);
  double p = 0, s2 = 0;
  REQUIRE(sr_model_predict(gated, b.bright, &p, &s2) == SR_OK);
  CHECK(p == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(sr_model_predict(gated, b.dark, &p, &s2) == SR_OK);
  CHECK(std::abs(p) < 1e-12);
  std::vector<uint64_t> bc(sr_trace_size(b.bright));
  REQUIRE(sr_trace_counts(b.bright, bc.data(), bc.size()) == SR_OK);
  double x = 0;
  for (size_t i = 0; i < wv; ++i) x += static_cast<double>(bc[i]);
  double gp = 0, gs2 = 0;
  REQUIRE(sr_gated_population(x, row.L0, row.L1, &gp, &gs2) == SR_OK);
  REQUIRE(sr_model_predict(gated, b.bright, &p, &s2) == SR_OK);
  CHECK(std::abs(p - gp) < 1e-12);
  CHECK(s2 == doctest::Approx(gs2).epsilon(1e-12));
  sr_model_free(gated);
  sr_sweep_free(sweep);
}

TEST_CASE("training, Rabi and evaluation pipeline") {
  Boundaries b(1000000);
  sr_train_config cfg;
  sr_train_config_default(&cfg);
  cfg.max_iterations = 20000;
  sr_model* model = nullptr;
  REQUIRE(sr_model_train_boundary(b.bright, b.dark, &cfg, &model) == SR_OK);
  sr_loss loss;
  REQUIRE(sr_model_training_loss(model, &loss) == SR_OK);
  CHECK(loss.total == doctest::Approx(cfg.weight_factor * loss.prediction_term +
                                      loss.variance_term));
  std::vector<double> w(sr_model_size(model));
  REQUIRE(sr_model_weights(model, w.data(), w.size()) == SR_OK);
  for (double v : w) CHECK(v >= 0.0);

  const auto dir = temp_dir();
  const auto mpath = (dir / "m.txt").string();
  REQUIRE(sr_model_save(model, mpath.c_str()) == SR_OK);
  sr_model* reloaded = nullptr;
  REQUIRE(sr_model_load(mpath.c_str(), &reloaded) == SR_OK);
  CHECK(sr_model_intercept(reloaded) == sr_model_intercept(model));
  sr_model_free(reloaded);

  sr_schedule sch;
  sr_schedule_default(&sch);
  sr_rabi* rabi = nullptr;
  REQUIRE(sr_rabi_simulate(b.pb, b.pd, &sch, 100000, 5, 2, &rabi) == SR_OK);
  REQUIRE(sr_rabi_size(rabi) == sch.count);
  sr_model* rabi_model = nullptr;
  CHECK(sr_model_train_rabi(rabi, &cfg, &rabi_model) == SR_ERR_STATE);
  std::vector<double> d(sch.count), truth(sch.count), p(sch.count);
  REQUIRE(sr_schedule_populations(&sch, d.data(), truth.data(), d.size()) == SR_OK);
  REQUIRE(sr_rabi_readout(rabi, model, p.data(), p.size()) == SR_OK);
  sr_fit fit;
  REQUIRE(sr_fit_sinusoid(d.data(), p.data(), d.size(), &fit) == SR_OK);
  CHECK(fit.frequency == doctest::Approx(1.0 / sch.period_ns).epsilon(0.02));
  REQUIRE(sr_rabi_attach_fit(rabi, &fit) == SR_OK);
  std::vector<double> q(sch.count);
  REQUIRE(sr_rabi_targets(rabi, q.data(), q.size()) == SR_OK);
  for (double v : q) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  REQUIRE(sr_model_train_rabi(rabi, &cfg, &rabi_model) == SR_OK);

  sr_report* report = nullptr;
  REQUIRE(sr_report_evaluate(rabi, model, b.bright, b.dark, 0, truth.data(), &report) == SR_OK);
  REQUIRE(sr_report_method_count(report) == 3);
  sr_method_summary ml{}, gate{};
  for (size_t i = 0; i < 3; ++i) {
    sr_method_summary m;
    REQUIRE(sr_report_method(report, i, &m) == SR_OK);
    if (std::string(m.name) == "ML") ml = m;
    if (std::string(m.name) == "min-V gate") gate = m;
  }
  CHECK(ml.mse_against_truth == 1);
  double red = 0;
  REQUIRE(sr_report_reduction(report, "ML", "min-V gate", &red) == SR_OK);
  CHECK(std::abs(red - (1.0 - ml.avg_formula_variance / gate.avg_formula_variance)) < 1e-12);
  CHECK(sr_report_reduction(report, "ML", "nope", &red) != SR_OK);
  CHECK(std::string(sr_report_text(report)).find("ML") != std::string::npos);
  REQUIRE(sr_report_save(report, (dir / "r.csv").string().c_str()) == SR_OK);
  REQUIRE(sr_repair_save(rabi, model, b.bright, b.dark, 0, (dir / "rep.csv").string().c_str()) ==
          SR_OK);

  const auto tpath = (dir / "truth.csv").string();
  REQUIRE(sr_truth_save(tpath.c_str(), d.data(), truth.data(), d.size()) == SR_OK);
  size_t n = 0;
  REQUIRE(sr_truth_load(tpath.c_str(), nullptr, nullptr, 0, &n) == SR_OK);
  CHECK(n == sch.count);
  std::vector<double> d2(n), t2(n);
  REQUIRE(sr_truth_load(tpath.c_str(), d2.data(), t2.data(), n, &n) == SR_OK);
  CHECK(t2 == truth);

  const auto fpath = (dir / "fit.csv").string();
  REQUIRE(sr_fit_report_save(fpath.c_str(), d.data(), p.data(), d.size(), &fit) == SR_OK);
  sr_fit fit2;
  REQUIRE(sr_fit_report_load(fpath.c_str(), &fit2) == SR_OK);
  CHECK(fit2.frequency == fit.frequency);
  CHECK(sr_fit_evaluate(&fit2, 0.0) == sr_fit_evaluate(&fit, 0.0));

  sr_report_free(report);
  sr_model_free(rabi_model);
  sr_rabi_free(rabi);
  sr_model_free(model);
  fs::remove_all(dir);
}

TEST_CASE("error mapping") {
  Boundaries b(100000);
  sr_train_config cfg;
  sr_train_config_default(&cfg);
  sr_model* m = nullptr;
  CHECK(sr_model_train_boundary(b.bright, b.bright, &cfg, &m) == SR_ERR_DEGENERATE_TRAINING);
  CHECK(m == nullptr);
  cfg.learning_rate = 2.5;
  CHECK(sr_model_train_boundary(b.bright, b.dark, &cfg, &m) == SR_ERR_DIVERGENCE);
  CHECK(std::string(sr_last_error()).find("rate") != std::string::npos);
  CHECK(sr_model_train_boundary(nullptr, b.dark, &cfg, &m) == SR_ERR_NULL_ARGUMENT);
  double flat_d[10], flat_p[10];
  for (int i = 0; i < 10; ++i) {
    flat_d[i] = 10.0 * i;
    flat_p[i] = 0.5;
  }
  sr_fit fit;
  CHECK(sr_fit_sinusoid(flat_d, flat_p, 10, &fit) == SR_ERR_FIT_FAILURE);
  CHECK(sr_fit_sinusoid_ratio(flat_d, flat_p, 10, -1.0, &fit) == SR_ERR_DOMAIN);
  // A weak oscillation passes only under a looser threshold.
  double d[40], p[40];
  for (int i = 0; i < 40; ++i) {
    d[i] = 10.0 * i;
    p[i] = 0.5 + 0.1 * std::cos(2.0 * 3.141592653589793 * d[i] / 100.0) + (i % 2 ? 0.06 : -0.06);
  }
  CHECK(sr_fit_sinusoid(d, p, 40, &fit) == SR_ERR_FIT_FAILURE);
  REQUIRE(sr_fit_sinusoid_ratio(d, p, 40, 1.0, &fit) == SR_OK);
  CHECK(fit.frequency == doctest::Approx(0.01).epsilon(1e-3));
  // Freeing null handles is harmless.
  sr_trace_free(nullptr);
  sr_model_free(nullptr);
  sr_report_free(nullptr);
}

TEST_CASE("run configuration") {
  sr_run_config c;
  sr_run_config_default(&c);
  CHECK(c.boundary_repetitions == 10000000);
  c.seed = 77;
  char* text = nullptr;
  REQUIRE(sr_run_config_format(&c, &text) == SR_OK);
  const auto dir = temp_dir();
  const auto path = (dir / "c.ini").string();
  REQUIRE(sr_write_text(path.c_str(), text) == SR_OK);
  sr_string_free(text);
  sr_run_config back;
  sr_run_config_default(&back);
  REQUIRE(sr_run_config_load(path.c_str(), &back) == SR_OK);
  CHECK(back.seed == 77);
  CHECK(std::memcmp(&back.simulator, &c.simulator, sizeof(sr_params)) == 0);
  REQUIRE(sr_write_text(path.c_str(), "[run]\nseed = 1\nwat = 2\n") == SR_OK);
  CHECK(sr_run_config_load(path.c_str(), &back) == SR_ERR_PARSE);
  CHECK(sr_last_error_line() == 3);
  fs::remove_all(dir);
}

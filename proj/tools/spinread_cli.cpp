// spinread command-line tool. Talks to the library only through spinread.h.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinread/spinread.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(sr_status status) {
  if (status != SR_OK) {
    throw DataError(std::string(sr_status_name(status)) + ": " + sr_last_error());
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Trace = std::unique_ptr<sr_trace, Deleter<sr_trace, sr_trace_free>>;
using Profile = std::unique_ptr<sr_profile, Deleter<sr_profile, sr_profile_free>>;
using Model = std::unique_ptr<sr_model, Deleter<sr_model, sr_model_free>>;
using Rabi = std::unique_ptr<sr_rabi, Deleter<sr_rabi, sr_rabi_free>>;
using Sweep = std::unique_ptr<sr_sweep, Deleter<sr_sweep, sr_sweep_free>>;
using Report = std::unique_ptr<sr_report, Deleter<sr_report, sr_report_free>>;

Trace load_trace(const std::string& path) {
  sr_trace* t = nullptr;
  check(sr_trace_load(path.c_str(), &t));
  return Trace(t);
}

Model load_model(const std::string& path) {
  sr_model* m = nullptr;
  check(sr_model_load(path.c_str(), &m));
  return Model(m);
}

Rabi load_rabi(const std::string& path) {
  sr_rabi* r = nullptr;
  check(sr_rabi_load(path.c_str(), &r));
  return Rabi(r);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

std::uint64_t parse_count(const std::string& text, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || !(v >= 1.0) || v > 1.8e19 ||
      v != std::floor(v)) {
    throw UsageError(std::string(what) + " must be a positive integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(v);
}

// Outputs must not overwrite inputs or each other.
void check_paths(const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
  std::vector<fs::path> seen;
  auto norm = [](const std::string& p) { return fs::weakly_canonical(fs::absolute(p)); };
  for (const auto& p : inputs) seen.push_back(norm(p));
  for (const auto& p : outputs) {
    const auto n = norm(p);
    for (const auto& s : seen) {
      if (s == n) throw UsageError("output path " + p + " collides with another path");
    }
    seen.push_back(n);
  }
}

struct Globals {
  std::string config_path;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  sr_run_config config{};
};

void summarize_fit(const sr_fit& f) {
  std::printf("offset %s amplitude %s frequency %s /ns (period %s ns) phase %s residual_rms %s\n",
              fmt(f.offset).c_str(), fmt(f.amplitude).c_str(), fmt(f.frequency).c_str(),
              fmt(1.0 / f.frequency).c_str(), fmt(f.phase).c_str(), fmt(f.residual_rms).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-resolved fluorescence readout: gated and weighted estimators"};
  app.require_subcommand(0, 1);
  Globals g;
  bool show_version = false;
  app.add_flag("--version", show_version, "Print version and file format versions");
  auto* seed_opt = app.add_option("--seed", g.seed, "Base seed for all randomness");
  auto* threads_opt =
      app.add_option("--threads", g.threads, "Worker threads (outputs do not depend on it)")
          ->check(CLI::PositiveNumber);
  app.add_option("--config", g.config_path, "key=value run configuration file")
      ->check(CLI::ExistingFile);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Write simulated boundary or Rabi trace files");
  std::string sim_kind = "boundary", preset, reps_text, out_dir, sim_name = "rabi";
  std::size_t points = 0;
  double step_ns = 0.0, period_ns = 0.0;
  sim->add_option("--kind", sim_kind, "boundary or rabi")
      ->check(CLI::IsMember({"boundary", "rabi"}));
  sim->add_option("--preset", preset, "Simulator preset")
      ->check(CLI::IsMember({"paper-like", "default"}));
  sim->add_option("--reps", reps_text, "Repetitions per trace (1e6 style accepted)");
  sim->add_option("--out-dir", out_dir, "Output directory")->required();
  sim->add_option("--name", sim_name, "Rabi file stem: <name>.csv and <name>_truth.csv");
  sim->add_option("--points", points, "Rabi points");
  sim->add_option("--step-ns", step_ns, "Rabi duration step");
  sim->add_option("--period-ns", period_ns, "Rabi period");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Gate-width sweep of two boundary traces");
  std::string bright_path, dark_path, out_path;
  std::size_t start_bin = 0;
  auto add_boundary = [&](CLI::App* sub, bool required) {
    auto* b = sub->add_option("--bright", bright_path, "Bright (m_s=0) boundary trace");
    auto* d = sub->add_option("--dark", dark_path, "Dark (m_s=1) boundary trace");
    if (required) {
      b->required();
      d->required();
    }
    b->check(CLI::ExistingFile);
    d->check(CLI::ExistingFile);
  };
  add_boundary(sweep, true);
  auto* sweep_start = sweep->add_option("--start-bin", start_bin, "Gate delay in bins");
  sweep->add_option("--out", out_path, "Sweep CSV")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a weighted readout model");
  std::string mode = "boundary", data_path, fit_path, init;
  double weight_factor = 0.0, learning_rate = 0.0;
  std::uint64_t max_iterations = 0;
  train->add_option("--mode", mode, "boundary or rabi")
      ->check(CLI::IsMember({"boundary", "rabi"}));
  add_boundary(train, false);
  train->add_option("--data", data_path, "Rabi dataset (rabi mode)")->check(CLI::ExistingFile);
  train->add_option("--fit", fit_path, "Fit report from fit-rabi (rabi mode)")
      ->check(CLI::ExistingFile);
  train->add_option("--out", out_path, "Model file")->required();
  auto* wf_opt = train->add_option("--weight-factor", weight_factor, "Weight of the prediction term (>= 1)");
  auto* lr_opt = train->add_option("--learning-rate", learning_rate, "Step in units of 1/L, below 2");
  auto* it_opt = train->add_option("--max-iterations", max_iterations, "Iteration cap; 0 returns the initialization");
  auto* init_opt = train->add_option("--init", init)->check(
      CLI::IsMember({"gated-equal-weights", "zeros"}));

  // fit-rabi
  auto* fit = app.add_subcommand("fit-rabi", "Fit a sinusoid to a Rabi dataset readout");
  std::string model_path;
  double min_amplitude_ratio = 3.0;
  fit->add_option("--data", data_path, "Rabi dataset")->required()->check(CLI::ExistingFile);
  fit->add_option("--model", model_path, "Readout model (default: min-V gate of --bright/--dark)")
      ->check(CLI::ExistingFile);
  add_boundary(fit, false);
  fit->add_option("--out", out_path, "Fit report CSV")->required();
  auto* ratio_opt = fit->add_option("--min-amplitude-ratio", min_amplitude_ratio,
                                    "Reject fits whose amplitude is below this times the rms")
                        ->check(CLI::NonNegativeNumber);

  // predict
  auto* pred = app.add_subcommand("predict", "Apply a model to traces or a Rabi dataset");
  std::vector<std::string> trace_paths;
  pred->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  pred->add_option("--trace", trace_paths, "Trace file (repeatable)")->check(CLI::ExistingFile);
  pred->add_option("--data", data_path, "Rabi dataset")->check(CLI::ExistingFile);
  pred->add_option("--out", out_path, "Prediction CSV")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Compare max-C gate, min-V gate and a model");
  std::string test_path, truth_path;
  eval->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--test", test_path, "Rabi test set")->required()->check(CLI::ExistingFile);
  add_boundary(eval, true);
  eval->add_option("--truth", truth_path, "Known populations")->check(CLI::ExistingFile);
  auto* eval_start = eval->add_option("--start-bin", start_bin, "Gate delay in bins");
  eval->add_option("--out", out_path, "Report CSV")->required();

  // repair
  auto* rep = app.add_subcommand("repair", "Original (min-V gate) vs repaired Rabi readout");
  rep->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  rep->add_option("--test", test_path)->required()->check(CLI::ExistingFile);
  add_boundary(rep, true);
  auto* rep_start = rep->add_option("--start-bin", start_bin, "Gate delay in bins");
  rep->add_option("--out", out_path, "Repair CSV")->required();

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Tune the simulator to a photon budget and contrast");
  double mean_photons = 0.02, target_contrast = 0.30;
  cal->add_option("--mean-photons", mean_photons, "Mean photons per measurement, averaged over the two boundaries");
  cal->add_option("--contrast", target_contrast, "Contrast at the max-C gate width");
  cal->add_option("--out", out_path, "Write the resulting config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (show_version) {
    std::printf("spinread %s\nfile formats: trace rabi truth sweep model fit repair report, "
                "version %d\n",
                sr_version(), sr_format_version());
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::fputs(app.help().c_str(), stderr);
    return kExitUsage;
  }

  try {
    sr_run_config_default(&g.config);
    if (!g.config_path.empty()) check(sr_run_config_load(g.config_path.c_str(), &g.config));
    if (seed_opt->count() > 0) g.config.seed = g.seed;
    if (threads_opt->count() > 0) g.config.threads = g.threads;
    auto& cfg = g.config;
    const auto start = [&](CLI::Option* opt) { return opt->count() > 0 ? start_bin : cfg.start_bin; };

    if (sim->parsed()) {
      if (!preset.empty()) {
        if (preset == "paper-like") {
          sr_params_paper_like(&cfg.simulator);
        } else {
          sr_params_default(&cfg.simulator);
        }
      }
      const bool rabi = sim_kind == "rabi";
      std::uint64_t reps = rabi ? cfg.rabi_repetitions : cfg.boundary_repetitions;
      if (!reps_text.empty()) reps = parse_count(reps_text, "--reps");
      if (points > 0) cfg.rabi.count = points;
      if (step_ns > 0.0) cfg.rabi.step_ns = step_ns;
      if (period_ns > 0.0) cfg.rabi.period_ns = period_ns;
      fs::create_directories(out_dir);
      sr_profile *pb = nullptr, *pd = nullptr;
      check(sr_profiles_create(&cfg.simulator, &pb, &pd));
      Profile bright(pb), dark(pd);
      if (!rabi) {
        const auto bpath = (fs::path(out_dir) / "bright.csv").string();
        const auto dpath = (fs::path(out_dir) / "dark.csv").string();
        sr_trace *tb = nullptr, *td = nullptr;
        check(sr_trace_simulate(bright.get(), reps, sr_derive_seed(cfg.seed, 0), "bright", &tb));
        Trace b(tb);
        check(sr_trace_simulate(dark.get(), reps, sr_derive_seed(cfg.seed, 1), "dark", &td));
        Trace d(td);
        check(sr_trace_save(b.get(), bpath.c_str()));
        check(sr_trace_save(d.get(), dpath.c_str()));
        std::printf("wrote %s and %s (%llu repetitions, seed %llu)\n", bpath.c_str(),
                    dpath.c_str(), static_cast<unsigned long long>(reps),
                    static_cast<unsigned long long>(cfg.seed));
      } else {
        const auto rpath = (fs::path(out_dir) / (sim_name + ".csv")).string();
        const auto tpath = (fs::path(out_dir) / (sim_name + "_truth.csv")).string();
        const std::uint64_t rabi_seed = sr_derive_seed(cfg.seed, 2);
        sr_rabi* r = nullptr;
        check(sr_rabi_simulate(bright.get(), dark.get(), &cfg.rabi, reps, rabi_seed, cfg.threads,
                               &r));
        Rabi data(r);
        check(sr_rabi_save(data.get(), rpath.c_str(), &cfg.seed));
        std::vector<double> t(cfg.rabi.count), p(cfg.rabi.count);
        check(sr_schedule_populations(&cfg.rabi, t.data(), p.data(), t.size()));
        check(sr_truth_save(tpath.c_str(), t.data(), p.data(), t.size()));
        std::printf("wrote %s and %s (%zu points, %llu repetitions, seed %llu)\n", rpath.c_str(),
                    tpath.c_str(), t.size(), static_cast<unsigned long long>(reps),
                    static_cast<unsigned long long>(cfg.seed));
      }
      return 0;
    }

    if (sweep->parsed()) {
      check_paths({bright_path, dark_path}, {out_path});
      auto b = load_trace(bright_path);
      auto d = load_trace(dark_path);
      sr_sweep* s = nullptr;
      check(sr_sweep_run(b.get(), d.get(), start(sweep_start), &s));
      Sweep result(s);
      check(sr_sweep_save(result.get(), out_path.c_str()));
      std::size_t wc = 0, wv = 0;
      check(sr_sweep_optima(result.get(), &wc, &wv));
      const double bw = sr_trace_bin_width(b.get());
      std::printf("max-C width %zu bins (%s ns), min-V width %zu bins (%s ns)\n", wc,
                  fmt(static_cast<double>(wc) * bw).c_str(), wv,
                  fmt(static_cast<double>(wv) * bw).c_str());
      return 0;
    }

    if (train->parsed()) {
      if (wf_opt->count() > 0) cfg.train.weight_factor = weight_factor;
      if (lr_opt->count() > 0) cfg.train.learning_rate = learning_rate;
      if (it_opt->count() > 0) cfg.train.max_iterations = max_iterations;
      if (init_opt->count() > 0) {
        cfg.train.init = init == "zeros" ? SR_INIT_ZEROS : SR_INIT_GATED;
      }
      sr_model* m = nullptr;
      if (mode == "boundary") {
        if (bright_path.empty() || dark_path.empty()) {
          throw UsageError("train --mode boundary needs --bright and --dark");
        }
        check_paths({bright_path, dark_path}, {out_path});
        auto b = load_trace(bright_path);
        auto d = load_trace(dark_path);
        double c = 0.0;
        check(sr_boundary_contrast(b.get(), d.get(), &c));
        if (c < 0.0) {
          std::fprintf(stderr,
                       "warning: negative boundary contrast %s; are --bright and --dark "
                       "swapped?\n",
                       fmt(c).c_str());
        }
        check(sr_model_train_boundary(b.get(), d.get(), &cfg.train, &m));
      } else {
        if (data_path.empty() || fit_path.empty()) {
          throw UsageError("train --mode rabi needs --data and --fit");
        }
        check_paths({data_path, fit_path}, {out_path});
        auto data = load_rabi(data_path);
        sr_fit f{};
        check(sr_fit_report_load(fit_path.c_str(), &f));
        check(sr_rabi_attach_fit(data.get(), &f));
        check(sr_model_train_rabi(data.get(), &cfg.train, &m));
      }
      Model model(m);
      check(sr_model_save(model.get(), out_path.c_str()));
      sr_loss loss{};
      check(sr_model_training_loss(model.get(), &loss));
      std::printf("wrote %s: prediction term %s, variance term %s, total %s\n", out_path.c_str(),
                  fmt(loss.prediction_term).c_str(), fmt(loss.variance_term).c_str(),
                  fmt(loss.total).c_str());
      return 0;
    }

    if (fit->parsed()) {
      std::vector<std::string> inputs{data_path};
      Model model;
      if (!model_path.empty()) {
        inputs.push_back(model_path);
        model = load_model(model_path);
      } else if (!bright_path.empty() && !dark_path.empty()) {
        inputs.push_back(bright_path);
        inputs.push_back(dark_path);
        auto b = load_trace(bright_path);
        auto d = load_trace(dark_path);
        sr_sweep* s = nullptr;
        check(sr_sweep_run(b.get(), d.get(), cfg.start_bin, &s));
        Sweep result(s);
        std::size_t wc = 0, wv = 0;
        check(sr_sweep_optima(result.get(), &wc, &wv));
        sr_model* m = nullptr;
        check(sr_model_gated(b.get(), d.get(), cfg.start_bin, wv, &m));
        model.reset(m);
      } else {
        throw UsageError("fit-rabi needs --model or both --bright and --dark");
      }
      check_paths(inputs, {out_path});
      auto data = load_rabi(data_path);
      const std::size_t n = sr_rabi_size(data.get());
      std::vector<double> t(n), p(n);
      check(sr_rabi_durations(data.get(), t.data(), n));
      check(sr_rabi_readout(data.get(), model.get(), p.data(), n));
      sr_fit f{};
      const double ratio =
          ratio_opt->count() > 0 ? min_amplitude_ratio : cfg.fit_min_amplitude_ratio;
      check(sr_fit_sinusoid_ratio(t.data(), p.data(), n, ratio, &f));
      check(sr_fit_report_save(out_path.c_str(), t.data(), p.data(), n, &f));
      summarize_fit(f);
      return 0;
    }

    if (pred->parsed()) {
      if (trace_paths.empty() == data_path.empty()) {
        throw UsageError("predict needs either --trace or --data");
      }
      std::vector<std::string> inputs = trace_paths;
      inputs.push_back(model_path);
      if (!data_path.empty()) inputs.push_back(data_path);
      check_paths(inputs, {out_path});
      auto model = load_model(model_path);
      std::ostringstream out;
      if (!data_path.empty()) {
        auto data = load_rabi(data_path);
        const std::size_t n = sr_rabi_size(data.get());
        std::vector<double> t(n), p(n);
        check(sr_rabi_durations(data.get(), t.data(), n));
        check(sr_rabi_readout(data.get(), model.get(), p.data(), n));
        out << "duration_ns,p\n";
        for (std::size_t i = 0; i < n; ++i) out << fmt(t[i]) << ',' << fmt(p[i]) << '\n';
      } else {
        out << "trace,p,sigma2\n";
        for (std::size_t i = 0; i < trace_paths.size(); ++i) {
          auto tr = load_trace(trace_paths[i]);
          double p = 0.0, v = 0.0;
          check(sr_model_predict(model.get(), tr.get(), &p, &v));
          out << i << ',' << fmt(p) << ',' << fmt(v) << '\n';
        }
      }
      check(sr_write_text(out_path.c_str(), out.str().c_str()));
      return 0;
    }

    if (eval->parsed()) {
      std::vector<std::string> inputs{model_path, test_path, bright_path, dark_path};
      if (!truth_path.empty()) inputs.push_back(truth_path);
      check_paths(inputs, {out_path});
      auto model = load_model(model_path);
      auto test = load_rabi(test_path);
      auto b = load_trace(bright_path);
      auto d = load_trace(dark_path);
      std::vector<double> truth;
      if (!truth_path.empty()) {
        std::size_t n = 0;
        check(sr_truth_load(truth_path.c_str(), nullptr, nullptr, 0, &n));
        std::vector<double> t(n);
        truth.resize(n);
        check(sr_truth_load(truth_path.c_str(), t.data(), truth.data(), n, &n));
        std::vector<double> durations(sr_rabi_size(test.get()));
        check(sr_rabi_durations(test.get(), durations.data(), durations.size()));
        if (t != durations) throw DataError("truth durations do not match the test set");
      }
      sr_report* r = nullptr;
      check(sr_report_evaluate(test.get(), model.get(), b.get(), d.get(), start(eval_start),
                               truth.empty() ? nullptr : truth.data(), &r));
      Report report(r);
      check(sr_report_save(report.get(), out_path.c_str()));
      std::fputs(sr_report_text(report.get()), stdout);
      return 0;
    }

    if (rep->parsed()) {
      check_paths({model_path, test_path, bright_path, dark_path}, {out_path});
      auto model = load_model(model_path);
      auto test = load_rabi(test_path);
      auto b = load_trace(bright_path);
      auto d = load_trace(dark_path);
      check(sr_repair_save(test.get(), model.get(), b.get(), d.get(), start(rep_start),
                           out_path.c_str()));
      std::printf("wrote %s\n", out_path.c_str());
      return 0;
    }

    if (cal->parsed()) {
      sr_params tuned{};
      check(sr_calibrate(&cfg.simulator, mean_photons, target_contrast, &tuned));
      cfg.simulator = tuned;
      char* text = nullptr;
      check(sr_run_config_format(&cfg, &text));
      std::unique_ptr<char, Deleter<char, sr_string_free>> owned(text);
      if (!out_path.empty()) {
        if (!g.config_path.empty()) check_paths({g.config_path}, {out_path});
        check(sr_write_text(out_path.c_str(), text));
      }
      std::fputs(text, stdout);
      return 0;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}

#include "spinread/evaluation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "spinread/error.hpp"
#include "spinread/format.hpp"

namespace spinread {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::optional<SinusoidFit> try_fit(std::span<const double> durations, std::span<const double> p) {
  std::vector<RabiSample> samples;
  samples.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) samples.push_back({durations[i], p[i]});
  try {
    return fit_rabi(samples, FitOptions{.min_amplitude_ratio = 0.0});
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::FitFailure) throw;
    return std::nullopt;
  }
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

const MethodRecord& EvalReport::method(std::string_view name) const {
  for (const auto& m : methods) {
    if (m.name == name) return m;
  }
  throw Error(ErrorKind::State, "report has no method '" + std::string(name) + "'");
}

double EvalReport::reduction(std::string_view method, std::string_view baseline) const {
  for (const auto& r : reductions) {
    if (r.method == method && r.baseline == baseline) return r.value;
  }
  throw Error(ErrorKind::State, "report has no reduction of '" + std::string(method) +
                                    "' against '" + std::string(baseline) + "'");
}

BaselineGates baseline_gates(const TimeTrace& bright, const TimeTrace& dark,
                             std::size_t start_bin) {
  const auto sweep = sweep_gate(bright, dark, start_bin);
  if (!sweep.max_contrast || !sweep.min_variance) {
    throw_degenerate_boundary("every gate width is degenerate for these boundary traces");
  }
  return {calibrate_gate(bright, dark, *sweep.max_contrast),
          calibrate_gate(bright, dark, *sweep.min_variance)};
}

EvalReport evaluate(const RabiDataset& test, std::span<const NamedModel> methods,
                    std::optional<std::span<const double>> truth) {
  if (methods.empty()) throw_domain("evaluate needs at least one method");
  if (truth && truth->size() != test.size()) {
    throw_shape("truth has " + std::to_string(truth->size()) + " values for " +
                std::to_string(test.size()) + " test points");
  }
  EvalReport report;
  report.durations = test.durations();
  for (const auto& named : methods) {
    MethodRecord rec;
    rec.name = named.name;
    rec.p.reserve(test.size());
    rec.sigma2.reserve(test.size());
    for (const auto& pt : test.points()) {
      rec.p.push_back(predict(named.model, pt.trace));
      rec.sigma2.push_back(prediction_variance(named.model, pt.trace));
    }
    rec.avg_formula_variance = mean(rec.sigma2);
    rec.fit = try_fit(report.durations, rec.p);
    if (rec.fit) {
      const double b = named.model.intercept();
      rec.contrast = (rec.fit->peak() - rec.fit->trough()) / (rec.fit->peak() - b);
      rec.swing = rec.fit->peak() - rec.fit->trough();
    } else {
      rec.contrast = kNaN;
      rec.swing = kNaN;
    }

    const std::optional<SinusoidFit>& reference_fit = test.fit ? test.fit : rec.fit;
    double sq = 0.0;
    for (std::size_t i = 0; i < rec.p.size(); ++i) {
      double ref = kNaN;
      if (truth) {
        ref = (*truth)[i];
      } else if (reference_fit) {
        ref = (*reference_fit)(report.durations[i]);
      }
      sq += (rec.p[i] - ref) * (rec.p[i] - ref);
    }
    rec.empirical_mse = sq / static_cast<double>(rec.p.size());
    rec.mse_against_truth = truth.has_value();
    report.methods.push_back(std::move(rec));
  }
  for (const auto& a : report.methods) {
    for (const auto& b : report.methods) {
      if (&a == &b) continue;
      report.reductions.push_back(
          {a.name, b.name, 1.0 - a.avg_formula_variance / b.avg_formula_variance});
    }
  }
  return report;
}

EvalReport evaluate(const RabiDataset& test, const ReadoutModel& model, const BaselineGates& gates,
                    std::optional<std::span<const double>> truth) {
  const std::vector<NamedModel> methods{
      {kMaxContrastGate, gated_equivalent(gates.max_contrast, kMaxContrastGate)},
      {kMinVarianceGate, gated_equivalent(gates.min_variance, kMinVarianceGate)},
      {kWeighted, model},
  };
  return evaluate(test, methods, truth);
}

std::vector<RepairRow> repair(const RabiDataset& dataset, const ReadoutModel& model,
                              const GateCalibration& min_variance) {
  std::vector<RepairRow> rows;
  rows.reserve(dataset.size());
  std::vector<double> repaired;
  repaired.reserve(dataset.size());
  for (const auto& pt : dataset.points()) {
    const double original = gated_readout(pt.trace, min_variance).p;
    const double p = predict(model, pt.trace);
    rows.push_back({pt.duration_ns, original, p, kNaN});
    repaired.push_back(p);
  }
  const auto durations = dataset.durations();
  if (const auto fit = try_fit(durations, repaired)) {
    for (auto& row : rows) row.q_fit = (*fit)(row.duration_ns);
  }
  return rows;
}

double rms_error(std::span<const double> p, std::span<const double> truth) {
  if (p.size() != truth.size()) throw_shape("rms_error: length mismatch");
  if (p.empty()) return 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sq += (p[i] - truth[i]) * (p[i] - truth[i]);
  return std::sqrt(sq / static_cast<double>(p.size()));
}

std::string report_text(const EvalReport& report) {
  std::ostringstream out;
  out << "test points: " << report.durations.size() << '\n';
  for (const auto& m : report.methods) {
    out << m.name << ": avg variance " << format_double(m.avg_formula_variance) << ", mse ("
        << (m.mse_against_truth ? "truth" : "fit") << ") " << format_double(m.empirical_mse)
        << ", contrast " << format_double(m.contrast) << ", swing " << format_double(m.swing)
        << '\n';
  }
  for (const auto& r : report.reductions) {
    out << r.method << " vs " << r.baseline << ": variance " << format_double(100.0 * r.value)
        << "% lower\n";
  }
  return out.str();
}

}  // namespace spinread

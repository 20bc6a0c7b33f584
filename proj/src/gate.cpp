#include "spinread/gate.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "spinread/error.hpp"
#include "spinread/format.hpp"

namespace spinread {

namespace {

void require_fits(std::size_t n, GateWindow window) {
  if (window.width_bins == 0) throw_domain("gate width must be at least one bin");
  if (window.start_bin + window.width_bins > n) {
    throw_shape("gate window [" + std::to_string(window.start_bin) + ", " +
                std::to_string(window.end_bin()) + ") overruns a trace of " +
                std::to_string(n) + " bins");
  }
}

void require_ordered(double L0, double L1) {
  if (!(L0 > L1)) {
    throw_degenerate_boundary("boundary sums need L0 > L1, got L0=" + format_double(L0) +
                              " L1=" + format_double(L1));
  }
}

}  // namespace

double gate_sum(std::span<const double> counts, GateWindow window) {
  require_fits(counts.size(), window);
  const auto first = counts.begin() + static_cast<std::ptrdiff_t>(window.start_bin);
  return std::accumulate(first, first + static_cast<std::ptrdiff_t>(window.width_bins), 0.0);
}

double gate_sum(const TimeTrace& trace, GateWindow window) {
  require_fits(trace.size(), window);
  const auto counts = trace.counts();
  std::uint64_t sum = 0;
  for (std::size_t i = window.start_bin; i < window.end_bin(); ++i) sum += counts[i];
  return static_cast<double>(sum);
}

GatedEstimate gated_population(double x_sum, double L0, double L1) {
  require_ordered(L0, L1);
  if (!(x_sum >= 0.0)) throw_domain("gated sum must be >= 0");
  const double span = L0 - L1;
  return {(x_sum - L1) / span, x_sum / (span * span)};
}

double contrast(double L0, double L1) {
  if (!(L0 > 0.0)) {
    throw_degenerate_boundary("contrast needs L0 > 0, got " + format_double(L0));
  }
  return (L0 - L1) / L0;
}

double total_variance(double L0, double L1) {
  require_ordered(L0, L1);
  const double span = L0 - L1;
  return (L0 + L1) / (2.0 * span * span);
}

GateMetrics gate_metrics(std::span<const double> bright, std::span<const double> dark,
                         GateWindow window) {
  GateMetrics m;
  m.window = window;
  m.L0 = gate_sum(bright, window);
  m.L1 = gate_sum(dark, window);
  m.degenerate = !(m.L0 > m.L1) || !(m.L1 > 0.0);
  m.contrast = m.L0 > 0.0 ? contrast(m.L0, m.L1) : std::nan("");
  m.total_variance = m.L0 > m.L1 ? total_variance(m.L0, m.L1) : std::nan("");
  return m;
}

SweepResult sweep_gate(std::span<const double> bright, std::span<const double> dark,
                       std::size_t start_bin, double bin_width_ns) {
  if (bright.size() != dark.size()) {
    throw_shape("boundary traces differ in length: " + std::to_string(bright.size()) +
                " vs " + std::to_string(dark.size()));
  }
  if (start_bin >= bright.size()) {
    throw_shape("start_bin " + std::to_string(start_bin) + " is past the last bin");
  }
  SweepResult result;
  result.bin_width_ns = bin_width_ns;
  const std::size_t widths = bright.size() - start_bin;
  result.rows.reserve(widths);
  // Running sums keep the sweep linear in N.
  double L0 = 0.0, L1 = 0.0;
  for (std::size_t w = 1; w <= widths; ++w) {
    const std::size_t bin = start_bin + w - 1;
    L0 += bright[bin];
    L1 += dark[bin];
    GateMetrics m;
    m.window = {start_bin, w};
    m.L0 = L0;
    m.L1 = L1;
    m.degenerate = !(L0 > L1) || !(L1 > 0.0);
    m.contrast = L0 > 0.0 ? (L0 - L1) / L0 : std::nan("");
    m.total_variance = L0 > L1 ? total_variance(L0, L1) : std::nan("");
    result.rows.push_back(m);
  }
  const GateMetrics* best_c = nullptr;
  const GateMetrics* best_v = nullptr;
  for (const auto& m : result.rows) {
    if (m.degenerate) continue;
    if (!best_c || m.contrast > best_c->contrast) best_c = &m;
    if (!best_v || m.total_variance < best_v->total_variance) best_v = &m;
  }
  if (best_c) result.max_contrast = best_c->window;
  if (best_v) result.min_variance = best_v->window;
  return result;
}

SweepResult sweep_gate(const TimeTrace& bright, const TimeTrace& dark, std::size_t start_bin) {
  if (bright.bin_width_ns() != dark.bin_width_ns()) {
    throw_shape("boundary traces differ in bin width");
  }
  const auto b = bright.rescaled(bright.repetitions());
  const auto d = dark.rescaled(bright.repetitions());
  return sweep_gate(b, d, start_bin, bright.bin_width_ns());
}

GateCalibration calibrate_gate(const TimeTrace& bright, const TimeTrace& dark,
                               GateWindow window) {
  if (bright.size() != dark.size() || bright.bin_width_ns() != dark.bin_width_ns()) {
    throw_shape("boundary traces differ in shape");
  }
  GateCalibration cal;
  cal.window = window;
  cal.repetitions = bright.repetitions();
  cal.bins = bright.size();
  cal.bin_width_ns = bright.bin_width_ns();
  cal.L0 = gate_sum(bright, window);
  cal.L1 = gate_sum(std::span<const double>(dark.rescaled(cal.repetitions)), window);
  require_ordered(cal.L0, cal.L1);
  return cal;
}

GatedEstimate gated_readout(const TimeTrace& trace, const GateCalibration& calibration) {
  if (trace.size() != calibration.bins) {
    throw_shape("trace has " + std::to_string(trace.size()) + " bins, calibration expects " +
                std::to_string(calibration.bins));
  }
  const double scale = static_cast<double>(calibration.repetitions) /
                       static_cast<double>(trace.repetitions());
  const double x = gate_sum(trace, calibration.window) * scale;
  auto est = gated_population(x, calibration.L0, calibration.L1);
  // Var(scale * X) = scale^2 X, and the formula above already carries one factor.
  est.sigma2 *= scale;
  return est;
}

}  // namespace spinread

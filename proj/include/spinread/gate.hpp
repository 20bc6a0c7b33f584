#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spinread/trace.hpp"

namespace spinread {

/// Contiguous bins [start_bin, start_bin + width_bins).
struct GateWindow {
  std::size_t start_bin = 0;
  std::size_t width_bins = 1;

  std::size_t end_bin() const noexcept { return start_bin + width_bins; }
  friend bool operator==(const GateWindow&, const GateWindow&) = default;
};

struct GateMetrics {
  GateWindow window;
  double L0 = 0.0;
  double L1 = 0.0;
  double contrast = 0.0;
  double total_variance = 0.0;
  /// L0 <= L1 or L1 <= 0: the window cannot calibrate a population readout.
  bool degenerate = false;
};

struct GatedEstimate {
  double p = 0.0;
  double sigma2 = 0.0;
};

double gate_sum(std::span<const double> counts, GateWindow window);
double gate_sum(const TimeTrace& trace, GateWindow window);

/// p = (x_sum - L1) / (L0 - L1), sigma2 = x_sum / (L0 - L1)^2. All three sums
/// must be at the same repetition count. p is deliberately not clipped.
GatedEstimate gated_population(double x_sum, double L0, double L1);

/// (L0 - L1) / L0.
double contrast(double L0, double L1);

/// Integral of sigma_p^2 over p in [0, 1]: (L0 + L1) / (2 (L0 - L1)^2).
double total_variance(double L0, double L1);

GateMetrics gate_metrics(std::span<const double> bright, std::span<const double> dark,
                         GateWindow window);

struct SweepResult {
  std::vector<GateMetrics> rows;  ///< ordered by width, one per width 1..N-start
  double bin_width_ns = kDefaultBinWidthNs;
  std::optional<GateWindow> max_contrast;
  std::optional<GateWindow> min_variance;
};

/// Every width from 1 to N - start_bin. Ties resolve to the smaller width;
/// degenerate widths are flagged and excluded from the optima.
SweepResult sweep_gate(std::span<const double> bright, std::span<const double> dark,
                       std::size_t start_bin = 0, double bin_width_ns = kDefaultBinWidthNs);

/// Sweeps two boundary traces; the dark trace is rescaled to the bright
/// trace's repetitions when they differ.
SweepResult sweep_gate(const TimeTrace& bright, const TimeTrace& dark,
                       std::size_t start_bin = 0);

/// A gate window together with the boundary sums that normalize it.
struct GateCalibration {
  GateWindow window;
  double L0 = 0.0;
  double L1 = 0.0;
  std::uint64_t repetitions = 1;  ///< repetitions at which L0 and L1 were summed
  std::size_t bins = 0;
  double bin_width_ns = kDefaultBinWidthNs;
};

GateCalibration calibrate_gate(const TimeTrace& bright, const TimeTrace& dark,
                               GateWindow window);

/// Gated readout of a trace at any repetition count. The gated sum is rescaled
/// to the calibration repetitions and the variance is propagated through the
/// rescaling.
GatedEstimate gated_readout(const TimeTrace& trace, const GateCalibration& calibration);

}  // namespace spinread

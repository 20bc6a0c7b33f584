#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinread/gate.hpp"
#include "spinread/rabi.hpp"
#include "spinread/regression.hpp"

namespace spinread {

struct NamedModel {
  std::string name;
  ReadoutModel model;
};

struct MethodRecord {
  std::string name;
  double avg_formula_variance = 0.0;  ///< mean sigma_p^2 over the test points
  double empirical_mse = 0.0;         ///< mean (p - reference)^2
  bool mse_against_truth = false;     ///< otherwise against a sinusoid fit
  /// (fit peak - fit trough) / (fit peak - intercept) of a sinusoid fitted to
  /// this method's own outputs: the fluorescence contrast of the weighted
  /// signal. NaN when that fit fails.
  double contrast = 0.0;
  /// fit peak - fit trough in population units.
  double swing = 0.0;
  std::vector<double> p;
  std::vector<double> sigma2;
  std::optional<SinusoidFit> fit;
};

struct Reduction {
  std::string method;
  std::string baseline;
  double value = 0.0;  ///< 1 - V_method / V_baseline on avg_formula_variance
};

struct EvalReport {
  std::vector<double> durations;
  std::vector<MethodRecord> methods;
  std::vector<Reduction> reductions;  ///< every ordered pair of distinct methods

  const MethodRecord& method(std::string_view name) const;
  double reduction(std::string_view method, std::string_view baseline) const;
};

/// Names used for the three standard methods.
inline constexpr const char* kMaxContrastGate = "max-C gate";
inline constexpr const char* kMinVarianceGate = "min-V gate";
inline constexpr const char* kWeighted = "ML";

/// Gate calibrations at both sweep optima of a pair of boundary traces.
struct BaselineGates {
  GateCalibration max_contrast;
  GateCalibration min_variance;
};

BaselineGates baseline_gates(const TimeTrace& bright, const TimeTrace& dark,
                             std::size_t start_bin = 0);

/// Scores every model on the test set. `truth` holds one known population per
/// point; without it the dataset's own fit is the reference, or failing that
/// each method's fit of its own outputs. Per-method fits skip the
/// amplitude-to-noise check so noisy gates still get a contrast.
EvalReport evaluate(const RabiDataset& test, std::span<const NamedModel> methods,
                    std::optional<std::span<const double>> truth = std::nullopt);

/// The standard comparison: both gate optima against a weighted model.
EvalReport evaluate(const RabiDataset& test, const ReadoutModel& model,
                    const BaselineGates& gates,
                    std::optional<std::span<const double>> truth = std::nullopt);

struct RepairRow {
  double duration_ns = 0.0;
  double p_original = 0.0;  ///< min-V gated readout
  double p_repaired = 0.0;  ///< weighted model readout
  double q_fit = 0.0;       ///< sinusoid fitted to the repaired series; NaN if it fails
};

std::vector<RepairRow> repair(const RabiDataset& dataset, const ReadoutModel& model,
                              const GateCalibration& min_variance);

/// rms of p - truth.
double rms_error(std::span<const double> p, std::span<const double> truth);

std::string report_text(const EvalReport& report);

}  // namespace spinread

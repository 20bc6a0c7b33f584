#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spinread/gate.hpp"
#include "spinread/trace.hpp"

namespace spinread {

struct RabiDataset;

struct LossBreakdown {
  double prediction_term = 0.0;  ///< sum_j (h_j - q_j)^2, unweighted
  double variance_term = 0.0;    ///< sum_j sigma_p,j^2
  double total = 0.0;            ///< w * prediction_term + variance_term

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

/// Per-bin weighted linear readout p = sum_i A_i * counts_i / R + b.
///
/// Weights live in per-measurement rate space so one model applies to traces
/// of any repetition count; the raw-count coefficient at R repetitions is
/// A_i / R. Every weight is >= 0, the intercept is unconstrained.
class ReadoutModel {
public:
  ReadoutModel(std::vector<double> weights, double intercept, double bin_width_ns,
               double normalization = 1.0, std::string trained_on = {},
               LossBreakdown training_loss = {});

  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double intercept() const noexcept { return intercept_; }
  double bin_width_ns() const noexcept { return bin_width_ns_; }
  /// Global feature scale (1 / max training bin rate) used during training.
  double normalization() const noexcept { return normalization_; }
  const std::string& trained_on() const noexcept { return trained_on_; }
  const LossBreakdown& training_loss() const noexcept { return training_loss_; }

  friend bool operator==(const ReadoutModel&, const ReadoutModel&) = default;

private:
  std::vector<double> weights_;
  double intercept_;
  double bin_width_ns_;
  double normalization_;
  std::string trained_on_;
  LossBreakdown training_loss_;
};

struct TrainingExample {
  TimeTrace trace;
  double target;  ///< q in [0, 1]

  TrainingExample(TimeTrace trace, double target);
};

enum class InitKind { GatedEqualWeights, Zeros };

const char* to_string(InitKind init) noexcept;

struct TrainConfig {
  /// Multiplier on the prediction term.
  double weight_factor = 1e4;
  /// Step size in units of 1/L, L being the largest Hessian eigenvalue of the
  /// (quadratic) loss in normalized coordinates. Values >= 2 diverge.
  double learning_rate = 1.0;
  std::size_t max_iterations = 200000;
  /// Stop once the loss fell by less than this fraction over `window` steps.
  double relative_tolerance = 1e-9;
  std::size_t window = 100;
  InitKind init = InitKind::GatedEqualWeights;
  /// Nesterov momentum with monotone restarts; plain projected steps if false.
  bool accelerate = true;

  void validate() const;
};

struct Gradient {
  std::vector<double> weights;
  double intercept = 0.0;
};

double predict(const ReadoutModel& model, const TimeTrace& trace);

/// sum_i (A_i / R)^2 counts_i, the Poisson variance of predict().
double prediction_variance(const ReadoutModel& model, const TimeTrace& trace);

LossBreakdown loss(const ReadoutModel& model, std::span<const TrainingExample> examples,
                   double weight_factor);

/// Gradient of the total loss with respect to (A, b).
Gradient loss_gradient(const ReadoutModel& model, std::span<const TrainingExample> examples,
                       double weight_factor);

/// Same as loss_gradient but zeroes the components that point out of the
/// feasible set at active bounds (A_k = 0 with a positive derivative).
Gradient projected_gradient(const ReadoutModel& model, std::span<const TrainingExample> examples,
                            double weight_factor);

struct TrainResult {
  ReadoutModel model;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t restarts = 0;
  std::vector<double> loss_history;  ///< total loss, one entry per accepted iterate
};

TrainResult train_detailed(std::span<const TrainingExample> examples, const TrainConfig& config,
                           std::string provenance = {});

ReadoutModel train(std::span<const TrainingExample> examples, const TrainConfig& config);

/// Two-example training set: bright with q = 1, dark with q = 0.
ReadoutModel train_boundary(const TimeTrace& bright, const TimeTrace& dark,
                            const TrainConfig& config);

/// Trains on every point of a fitted Rabi dataset using its assigned targets.
ReadoutModel train_rabi(const RabiDataset& dataset, const TrainConfig& config);

/// Equal weights R_cal / (L0 - L1) inside the window, b = -L1 / (L0 - L1):
/// reproduces gated_readout() exactly.
ReadoutModel gated_equivalent(const GateCalibration& calibration, std::string label = {});

/// Full-trace fluorescence contrast (sum bright - sum dark) / sum bright per
/// measurement; negative when the boundary labels are swapped.
double boundary_contrast(const TimeTrace& bright, const TimeTrace& dark);

}  // namespace spinread

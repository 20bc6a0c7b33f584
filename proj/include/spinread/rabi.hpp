#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spinread/regression.hpp"
#include "spinread/trace.hpp"

namespace spinread {

struct RabiPoint {
  double duration_ns;
  TimeTrace trace;
};

/// offset + amplitude * cos(2 pi frequency t + phase), amplitude >= 0,
/// phase in [0, 2 pi), frequency in cycles per ns.
struct SinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  double residual_rms = 0.0;

  double operator()(double t) const noexcept;
  double peak() const noexcept { return offset + amplitude; }
  double trough() const noexcept { return offset - amplitude; }
  /// The fitted curve rescaled so its maximum is 1 and minimum 0.
  double normalized(double t) const noexcept;
};

/// Pulse-duration series of traces, all of the same shape and repetitions.
struct RabiDataset {
  explicit RabiDataset(std::vector<RabiPoint> points);

  std::span<const RabiPoint> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::vector<double> durations() const;

  std::optional<SinusoidFit> fit;
  std::optional<std::vector<double>> targets;

private:
  std::vector<RabiPoint> points_;
};

struct RabiSample {
  double duration_ns;
  double p;
};

struct FitOptions {
  /// Fail unless amplitude > ratio * residual_rms; 0 accepts any oscillation.
  double min_amplitude_ratio = 3.0;
};

/// Least-squares fit of the four-parameter sinusoid. Needs at least 8 points
/// covering a full period; fails when the best amplitude is below
/// `min_amplitude_ratio` times the residual rms.
SinusoidFit fit_rabi(std::span<const RabiSample> samples, const FitOptions& options = {});

/// Targets from the normalized fit, clipped to [0, 1]; the point nearest each
/// fitted peak inside the sampled range gets exactly 1 and nearest each trough
/// exactly 0.
std::vector<double> assign_target_values(std::span<const double> durations,
                                         const SinusoidFit& fit);

std::vector<TrainingExample> assign_targets(const RabiDataset& dataset, const SinusoidFit& fit);

/// Stores the fit and its assigned targets on the dataset.
void attach_fit(RabiDataset& dataset, const SinusoidFit& fit);

/// Training examples from the targets already attached to the dataset.
std::vector<TrainingExample> training_examples(const RabiDataset& dataset);

struct ResidualSummary {
  std::vector<double> values;  ///< p_i - fit(t_i)
  double mean_abs = 0.0;
  double rms = 0.0;
};

ResidualSummary residuals(std::span<const RabiSample> samples, const SinusoidFit& fit);

/// Readout of every point of a dataset with a model.
std::vector<RabiSample> readout(const RabiDataset& dataset, const ReadoutModel& model);

/// Evenly spaced pulse durations with an ideal cosine population.
struct RabiSchedule {
  std::size_t count = 60;
  double step_ns = 10.0;
  double period_ns = 200.0;

  std::vector<double> durations() const;
  /// 0.5 + 0.5 cos(2 pi t / period): starts in the bright state.
  double population(double duration_ns) const;
  std::vector<double> populations() const;
};

RabiDataset simulate_rabi(const EmissionProfile& bright, const EmissionProfile& dark,
                          const RabiSchedule& schedule, std::uint64_t repetitions,
                          std::uint64_t seed, unsigned threads = 1);

}  // namespace spinread

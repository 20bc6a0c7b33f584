#include "spinread/rabi.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "spinread/error.hpp"
#include "spinread/format.hpp"

namespace spinread {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Params {
  double offset, amplitude, frequency, phase;  // phase relative to centered time
};

double sum_squares(std::span<const double> t, std::span<const double> y, const Params& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = p.offset + p.amplitude * std::cos(kTwoPi * p.frequency * t[i] + p.phase) - y[i];
    s += r * r;
  }
  return s;
}

// Linear least squares for offset and amplitude/phase at a fixed frequency.
Params linear_start(std::span<const double> t, std::span<const double> y, double frequency) {
  Eigen::MatrixXd basis(t.size(), 3);
  Eigen::VectorXd rhs(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double theta = kTwoPi * frequency * t[i];
    basis(i, 0) = 1.0;
    basis(i, 1) = std::cos(theta);
    basis(i, 2) = std::sin(theta);
    rhs(i) = y[i];
  }
  const Eigen::Vector3d c = basis.colPivHouseholderQr().solve(rhs);
  // a cos + b sin = A cos(theta + phi) with A cos phi = a, A sin phi = -b.
  return {c(0), std::hypot(c(1), c(2)), frequency, std::atan2(-c(2), c(1))};
}

// Levenberg-Marquardt on the four parameters.
Params refine(std::span<const double> t, std::span<const double> y, Params p) {
  double cost = sum_squares(t, y, p);
  double lambda = 1e-3;
  for (int iter = 0; iter < 500; ++iter) {
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double theta = kTwoPi * p.frequency * t[i] + p.phase;
      const double c = std::cos(theta), s = std::sin(theta);
      const double r = p.offset + p.amplitude * c - y[i];
      const Eigen::Vector4d j(1.0, c, -p.amplitude * s * kTwoPi * t[i], -p.amplitude * s);
      jtj.noalias() += j * j.transpose();
      jtr.noalias() += j * r;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::Matrix4d damped = jtj;
      for (int k = 0; k < 4; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      const Eigen::Vector4d delta = damped.ldlt().solve(-jtr);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Params trial{p.offset + delta(0), p.amplitude + delta(1), p.frequency + delta(2),
                         p.phase + delta(3)};
      const double trial_cost = trial.frequency > 0.0 ? sum_squares(t, y, trial) : HUGE_VAL;
      if (trial_cost <= cost) {
        const double drop = cost - trial_cost;
        p = trial;
        cost = trial_cost;
        lambda = std::max(lambda * 0.1, 1e-15);
        improved = drop > 1e-15 * cost && drop > 0.0;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return p;
}

double wrap_phase(double phase) {
  phase = std::fmod(phase, kTwoPi);
  if (phase < 0.0) phase += kTwoPi;
  if (phase >= kTwoPi) phase = 0.0;
  return phase;
}

[[noreturn]] void fit_failure(const std::string& what) {
  throw Error(ErrorKind::FitFailure, what);
}

}  // namespace

double SinusoidFit::operator()(double t) const noexcept {
  return offset + amplitude * std::cos(kTwoPi * frequency * t + phase);
}

double SinusoidFit::normalized(double t) const noexcept {
  return 0.5 * (1.0 + std::cos(kTwoPi * frequency * t + phase));
}

RabiDataset::RabiDataset(std::vector<RabiPoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw_shape("a Rabi dataset needs at least one point");
  const auto& first = points_.front().trace;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& tr = points_[i].trace;
    if (tr.size() != first.size() || tr.bin_width_ns() != first.bin_width_ns()) {
      throw_shape("Rabi point " + std::to_string(i) + " differs in trace shape");
    }
    if (tr.repetitions() != first.repetitions()) {
      throw_shape("Rabi point " + std::to_string(i) + " differs in repetitions");
    }
    if (!std::isfinite(points_[i].duration_ns)) throw_domain("pulse durations must be finite");
    if (i > 0 && !(points_[i].duration_ns > points_[i - 1].duration_ns)) {
      throw_domain("pulse durations must be strictly increasing (point " + std::to_string(i) +
                   ")");
    }
  }
}

std::vector<double> RabiDataset::durations() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& pt : points_) out.push_back(pt.duration_ns);
  return out;
}

SinusoidFit fit_rabi(std::span<const RabiSample> samples, const FitOptions& options) {
  const std::size_t n = samples.size();
  if (n < 8) fit_failure("sinusoid fit needs at least 8 points, got " + std::to_string(n));
  std::vector<double> t(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = samples[i].duration_ns;
    y[i] = samples[i].p;
    if (!std::isfinite(t[i]) || !std::isfinite(y[i])) fit_failure("non-finite sample");
  }
  const auto [tmin_it, tmax_it] = std::minmax_element(t.begin(), t.end());
  const double tmin = *tmin_it, tmax = *tmax_it;
  const double span = tmax - tmin;
  if (!(span > 0.0)) fit_failure("all samples share one duration");
  const double center = 0.5 * (tmin + tmax);
  std::vector<double> tc(n);
  for (std::size_t i = 0; i < n; ++i) tc[i] = t[i] - center;

  // Reference frequency from mean crossings of a lightly smoothed series,
  // taken in duration order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return t[a] < t[b]; });
  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0, hi = std::min(n - 1, i + 2);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += y[order[k]];
    smooth[i] = s / static_cast<double>(hi - lo + 1);
  }
  const double mean = std::accumulate(smooth.begin(), smooth.end(), 0.0) / static_cast<double>(n);
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if ((smooth[i - 1] - mean) * (smooth[i] - mean) < 0.0) ++crossings;
  }
  const double reference = static_cast<double>(std::max<std::size_t>(crossings, 1)) / (2.0 * span);
  const double nyquist = 0.5 * static_cast<double>(n - 1) / span;
  double f_lo = std::max(0.25 * reference, 0.5 / span);
  double f_hi = std::min(4.0 * reference, nyquist);
  if (f_hi < f_lo) std::swap(f_lo, f_hi);

  constexpr int kGrid = 48;
  Params best{};
  double best_cost = HUGE_VAL;
  for (int g = 0; g < kGrid; ++g) {
    const double frac = static_cast<double>(g) / (kGrid - 1);
    const double f0 = f_lo * std::pow(f_hi / f_lo, frac);
    const Params p = refine(tc, y, linear_start(tc, y, f0));
    if (!(p.frequency > 0.0)) continue;
    const double cost = sum_squares(tc, y, p);
    // Grid runs from low to high frequency, so a tie keeps the lower one.
    if (cost < best_cost * (1.0 - 1e-12)) {
      best = p;
      best_cost = cost;
    }
  }
  if (!std::isfinite(best_cost)) fit_failure("no grid start converged");

  SinusoidFit fit;
  fit.offset = best.offset;
  fit.amplitude = best.amplitude;
  fit.frequency = best.frequency;
  double phase = best.phase - kTwoPi * best.frequency * center;
  if (fit.amplitude < 0.0) {
    fit.amplitude = -fit.amplitude;
    phase += std::numbers::pi;
  }
  fit.phase = wrap_phase(phase);
  fit.residual_rms = std::sqrt(best_cost / static_cast<double>(n));
  if (!(fit.amplitude > options.min_amplitude_ratio * fit.residual_rms) || !(fit.amplitude > 0.0)) {
    fit_failure("no oscillation detected: amplitude " + format_double(fit.amplitude) +
                " vs residual rms " + format_double(fit.residual_rms) + " (frequency " +
                format_double(fit.frequency) + " /ns)");
  }
  if (span * fit.frequency < 1.0) {
    fit_failure("samples cover only " + format_double(span * fit.frequency) +
                " periods of the fitted frequency");
  }
  return fit;
}

std::vector<double> assign_target_values(std::span<const double> durations,
                                         const SinusoidFit& fit) {
  if (!(fit.amplitude > 0.0) || !(fit.frequency > 0.0)) fit_failure("degenerate sinusoid fit");
  std::vector<double> q(durations.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = std::clamp(fit.normalized(durations[i]), 0.0, 1.0);
  }
  if (durations.empty()) return q;
  const auto [lo_it, hi_it] = std::minmax_element(durations.begin(), durations.end());
  const double period = 1.0 / fit.frequency;
  auto nearest = [&](double when) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < durations.size(); ++i) {
      if (std::abs(durations[i] - when) < std::abs(durations[best] - when)) best = i;
    }
    return best;
  };
  // Extremum k sits where 2 pi f t + phase = pi * k (even: peak, odd: trough).
  const double t0 = -fit.phase / (kTwoPi * fit.frequency);
  const auto k_first = static_cast<long long>(std::ceil((*lo_it - t0) / (0.5 * period)));
  const auto k_last = static_cast<long long>(std::floor((*hi_it - t0) / (0.5 * period)));
  for (long long k = k_first; k <= k_last; ++k) {
    const double when = t0 + 0.5 * period * static_cast<double>(k);
    q[nearest(when)] = (k % 2 == 0) ? 1.0 : 0.0;
  }
  return q;
}

std::vector<TrainingExample> assign_targets(const RabiDataset& dataset, const SinusoidFit& fit) {
  const auto q = assign_target_values(dataset.durations(), fit);
  std::vector<TrainingExample> out;
  out.reserve(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out.emplace_back(dataset.points()[i].trace, q[i]);
  return out;
}

void attach_fit(RabiDataset& dataset, const SinusoidFit& fit) {
  dataset.targets = assign_target_values(dataset.durations(), fit);
  dataset.fit = fit;
}

std::vector<TrainingExample> training_examples(const RabiDataset& dataset) {
  if (!dataset.targets) {
    throw Error(ErrorKind::State, "Rabi dataset has no targets; run fit_rabi first");
  }
  const auto& q = *dataset.targets;
  if (q.size() != dataset.size()) throw_shape("target count does not match Rabi points");
  std::vector<TrainingExample> out;
  out.reserve(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out.emplace_back(dataset.points()[i].trace, q[i]);
  return out;
}

ResidualSummary residuals(std::span<const RabiSample> samples, const SinusoidFit& fit) {
  ResidualSummary out;
  out.values.reserve(samples.size());
  double abs_sum = 0.0, sq_sum = 0.0;
  for (const auto& s : samples) {
    const double r = s.p - fit(s.duration_ns);
    out.values.push_back(r);
    abs_sum += std::abs(r);
    sq_sum += r * r;
  }
  if (!samples.empty()) {
    const double n = static_cast<double>(samples.size());
    out.mean_abs = abs_sum / n;
    out.rms = std::sqrt(sq_sum / n);
  }
  return out;
}

std::vector<RabiSample> readout(const RabiDataset& dataset, const ReadoutModel& model) {
  std::vector<RabiSample> out;
  out.reserve(dataset.size());
  for (const auto& pt : dataset.points()) out.push_back({pt.duration_ns, predict(model, pt.trace)});
  return out;
}

std::vector<double> RabiSchedule::durations() const {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = step_ns * static_cast<double>(i);
  return out;
}

double RabiSchedule::population(double duration_ns) const {
  return 0.5 + 0.5 * std::cos(kTwoPi * duration_ns / period_ns);
}

std::vector<double> RabiSchedule::populations() const {
  auto d = durations();
  for (auto& v : d) v = population(v);
  return d;
}

RabiDataset simulate_rabi(const EmissionProfile& bright, const EmissionProfile& dark,
                          const RabiSchedule& schedule, std::uint64_t repetitions,
                          std::uint64_t seed, unsigned threads) {
  if (schedule.count == 0) throw_domain("Rabi schedule needs at least one point");
  if (!(schedule.step_ns > 0.0) || !(schedule.period_ns > 0.0)) {
    throw_domain("Rabi schedule step and period must be positive");
  }
  std::vector<EmissionProfile> profiles;
  profiles.reserve(schedule.count);
  for (double p : schedule.populations()) {
    profiles.push_back(mix_profile(std::clamp(p, 0.0, 1.0), bright, dark));
  }
  auto traces = simulate_batch(profiles, repetitions, seed, threads);
  const auto durations = schedule.durations();
  std::vector<RabiPoint> points;
  points.reserve(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    points.push_back({durations[i], std::move(traces[i])});
  }
  return RabiDataset(std::move(points));
}

}  // namespace spinread

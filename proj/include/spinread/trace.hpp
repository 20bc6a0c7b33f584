#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spinread {

inline constexpr double kDefaultBinWidthNs = 2.0;

/// Binned photon counts for one experimental condition, summed over all
/// repetitions. Immutable after construction.
class TimeTrace {
public:
  TimeTrace(std::vector<std::uint64_t> counts, double bin_width_ns,
            std::uint64_t repetitions, std::string label = {},
            std::optional<std::uint64_t> seed = std::nullopt);

  std::span<const std::uint64_t> counts() const noexcept { return counts_; }
  std::size_t size() const noexcept { return counts_.size(); }
  double bin_width_ns() const noexcept { return bin_width_ns_; }
  std::uint64_t repetitions() const noexcept { return repetitions_; }
  const std::string& label() const noexcept { return label_; }
  std::optional<std::uint64_t> seed() const noexcept { return seed_; }

  std::uint64_t total() const noexcept;

  /// counts_i / repetitions.
  std::vector<double> rates() const;

  /// counts_i scaled to `reference_repetitions` measurements.
  std::vector<double> rescaled(std::uint64_t reference_repetitions) const;

  friend bool operator==(const TimeTrace&, const TimeTrace&) = default;

private:
  std::vector<std::uint64_t> counts_;
  double bin_width_ns_;
  std::uint64_t repetitions_;
  std::string label_;
  std::optional<std::uint64_t> seed_;
};

/// Expected photons per bin for a single measurement.
class EmissionProfile {
public:
  EmissionProfile(std::vector<double> rates, double bin_width_ns);

  std::span<const double> rates() const noexcept { return rates_; }
  std::size_t size() const noexcept { return rates_.size(); }
  double bin_width_ns() const noexcept { return bin_width_ns_; }

  /// Mean photons per measurement.
  double total() const noexcept;

  friend bool operator==(const EmissionProfile&, const EmissionProfile&) = default;

private:
  std::vector<double> rates_;
  double bin_width_ns_;
};

/// Phenomenological photodynamics of the two boundary spin states.
///
///   bright(t) = steady_rate * (1 + bright_boost e^{-t/tau_bright} + prompt(t))
///   dark(t)   = steady_rate * (1 - dark_dip e^{-t/tau_isc}       + prompt(t))
///   prompt(t) = prompt_excess e^{-t/tau_prompt}
///
/// The prompt term is common to both states, so it leaves the differential
/// signal untouched but suppresses the contrast of the earliest bins.
struct PhotodynamicsParams {
  double steady_rate = 2.0e-5;  ///< photons per ns per measurement
  double bright_boost = 0.3;
  double dark_dip = 0.28;
  double tau_bright_ns = 80.0;
  double tau_isc_ns = 250.0;
  double prompt_excess = 1.0;
  double tau_prompt_ns = 20.0;
  double trace_length_ns = 1000.0;
  double bin_width_ns = kDefaultBinWidthNs;

  std::size_t bins() const;

  /// Throws a domain error naming the first offending field.
  void validate() const;

  friend bool operator==(const PhotodynamicsParams&, const PhotodynamicsParams&) = default;
};

/// Frozen output of `calibrate_paper_like()` (about 30% max-gate contrast,
/// 0.02 photons per measurement, 2 ns bins over 1 us).
PhotodynamicsParams paper_like_params();

/// Bright (m_s=0) and dark (m_s=1) profiles, midpoint rule per bin.
std::pair<EmissionProfile, EmissionProfile> make_profiles(const PhotodynamicsParams& params);

/// population * bright + (1 - population) * dark.
EmissionProfile mix_profile(double population, const EmissionProfile& bright,
                            const EmissionProfile& dark);

/// Independent Poisson draw per bin with mean repetitions * rate.
TimeTrace simulate_trace(const EmissionProfile& profile, std::uint64_t repetitions,
                         std::uint64_t seed, std::string label = {});

/// Child seed for stream `index` of a base seed (SplitMix64 mixing).
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept;

/// Simulates one trace per profile with seeds derive_seed(seed, i). The result
/// does not depend on `threads`.
std::vector<TimeTrace> simulate_batch(std::span<const EmissionProfile> profiles,
                                      std::uint64_t repetitions, std::uint64_t seed,
                                      unsigned threads = 1);

/// Per-measurement differential signal counts0/R0 - counts1/R1.
std::vector<double> differential(const TimeTrace& bright, const TimeTrace& dark);

/// repetitions * rates, i.e. the noiseless counts a simulation would average to.
std::vector<double> expected_counts(const EmissionProfile& profile, double repetitions);

}  // namespace spinread

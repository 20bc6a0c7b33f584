#include "spinread/trace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "spinread/error.hpp"
#include "spinread/format.hpp"

namespace spinread {

namespace {

void require_bin_width(double bin_width_ns) {
  if (!(bin_width_ns > 0.0) || !std::isfinite(bin_width_ns)) {
    throw_domain("bin_width_ns must be positive, got " + format_double(bin_width_ns));
  }
}

void require_same_shape(const EmissionProfile& a, const EmissionProfile& b) {
  if (a.size() != b.size()) {
    throw_shape("profile lengths differ: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  }
  if (a.bin_width_ns() != b.bin_width_ns()) {
    throw_shape("profile bin widths differ: " + format_double(a.bin_width_ns()) + " vs " +
                format_double(b.bin_width_ns()));
  }
}

}  // namespace

TimeTrace::TimeTrace(std::vector<std::uint64_t> counts, double bin_width_ns,
                     std::uint64_t repetitions, std::string label,
                     std::optional<std::uint64_t> seed)
    : counts_(std::move(counts)),
      bin_width_ns_(bin_width_ns),
      repetitions_(repetitions),
      label_(std::move(label)),
      seed_(seed) {
  if (counts_.empty()) throw_shape("a time trace needs at least one bin");
  require_bin_width(bin_width_ns_);
  if (repetitions_ == 0) throw_domain("repetitions must be at least 1");
}

std::uint64_t TimeTrace::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::vector<double> TimeTrace::rates() const {
  std::vector<double> out(counts_.size());
  const double r = static_cast<double>(repetitions_);
  std::transform(counts_.begin(), counts_.end(), out.begin(),
                 [r](std::uint64_t c) { return static_cast<double>(c) / r; });
  return out;
}

std::vector<double> TimeTrace::rescaled(std::uint64_t reference_repetitions) const {
  std::vector<double> out(counts_.size());
  if (reference_repetitions == repetitions_) {
    std::transform(counts_.begin(), counts_.end(), out.begin(),
                   [](std::uint64_t c) { return static_cast<double>(c); });
    return out;
  }
  const double scale =
      static_cast<double>(reference_repetitions) / static_cast<double>(repetitions_);
  std::transform(counts_.begin(), counts_.end(), out.begin(),
                 [scale](std::uint64_t c) { return static_cast<double>(c) * scale; });
  return out;
}

EmissionProfile::EmissionProfile(std::vector<double> rates, double bin_width_ns)
    : rates_(std::move(rates)), bin_width_ns_(bin_width_ns) {
  if (rates_.empty()) throw_shape("an emission profile needs at least one bin");
  require_bin_width(bin_width_ns_);
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (!(rates_[i] >= 0.0) || !std::isfinite(rates_[i])) {
      throw_domain("rate at bin " + std::to_string(i) + " must be finite and >= 0");
    }
  }
}

double EmissionProfile::total() const noexcept {
  return std::accumulate(rates_.begin(), rates_.end(), 0.0);
}

std::size_t PhotodynamicsParams::bins() const {
  return static_cast<std::size_t>(std::llround(trace_length_ns / bin_width_ns));
}

void PhotodynamicsParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw_domain(std::string(name) + " must be positive, got " + format_double(v));
    }
  };
  auto nonnegative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw_domain(std::string(name) + " must be >= 0, got " + format_double(v));
    }
  };
  nonnegative(steady_rate, "steady_rate");
  nonnegative(bright_boost, "bright_boost");
  if (!(dark_dip >= 0.0 && dark_dip < 1.0)) {
    throw_domain("dark_dip must lie in [0, 1), got " + format_double(dark_dip));
  }
  positive(tau_bright_ns, "tau_bright_ns");
  positive(tau_isc_ns, "tau_isc_ns");
  nonnegative(prompt_excess, "prompt_excess");
  positive(tau_prompt_ns, "tau_prompt_ns");
  positive(bin_width_ns, "bin_width_ns");
  positive(trace_length_ns, "trace_length_ns");
  if (bins() == 0) {
    throw_domain("trace_length_ns is shorter than one bin");
  }
}

PhotodynamicsParams paper_like_params() {
  // Regenerate with `spinread calibrate`; the calibration test pins these.
  PhotodynamicsParams p;
  p.steady_rate = 2.0042642100543565e-05;
  p.dark_dip = 0.27804433315591004;
  return p;
}

std::pair<EmissionProfile, EmissionProfile> make_profiles(const PhotodynamicsParams& params) {
  params.validate();
  const std::size_t n = params.bins();
  const double bw = params.bin_width_ns;
  std::vector<double> bright(n), dark(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * bw;
    const double prompt = params.prompt_excess * std::exp(-t / params.tau_prompt_ns);
    bright[i] = params.steady_rate * bw *
                (1.0 + params.bright_boost * std::exp(-t / params.tau_bright_ns) + prompt);
    dark[i] = params.steady_rate * bw *
              (1.0 - params.dark_dip * std::exp(-t / params.tau_isc_ns) + prompt);
  }
  return {EmissionProfile(std::move(bright), bw), EmissionProfile(std::move(dark), bw)};
}

EmissionProfile mix_profile(double population, const EmissionProfile& bright,
                            const EmissionProfile& dark) {
  require_same_shape(bright, dark);
  if (!(population >= 0.0 && population <= 1.0)) {
    throw_domain("population must lie in [0, 1], got " + format_double(population));
  }
  const auto b = bright.rates();
  const auto d = dark.rates();
  std::vector<double> out(b.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = population * b[i] + (1.0 - population) * d[i];
  }
  return EmissionProfile(std::move(out), bright.bin_width_ns());
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
  std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TimeTrace simulate_trace(const EmissionProfile& profile, std::uint64_t repetitions,
                         std::uint64_t seed, std::string label) {
  if (repetitions == 0) throw_domain("repetitions must be at least 1");
  std::mt19937_64 engine(derive_seed(seed, 0));
  const double reps = static_cast<double>(repetitions);
  std::vector<std::uint64_t> counts(profile.size());
  const auto rates = profile.rates();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double mean = reps * rates[i];
    if (mean <= 0.0) continue;
    std::poisson_distribution<std::int64_t> draw(mean);
    counts[i] = static_cast<std::uint64_t>(draw(engine));
  }
  return TimeTrace(std::move(counts), profile.bin_width_ns(), repetitions, std::move(label),
                   seed);
}

std::vector<TimeTrace> simulate_batch(std::span<const EmissionProfile> profiles,
                                      std::uint64_t repetitions, std::uint64_t seed,
                                      unsigned threads) {
  std::vector<std::optional<TimeTrace>> slots(profiles.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < profiles.size(); i += stride) {
      slots[i] = simulate_trace(profiles[i], repetitions, derive_seed(seed, i));
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(profiles.size())));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  std::vector<TimeTrace> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<double> differential(const TimeTrace& bright, const TimeTrace& dark) {
  if (bright.size() != dark.size()) {
    throw_shape("trace lengths differ: " + std::to_string(bright.size()) + " vs " +
                std::to_string(dark.size()));
  }
  if (bright.bin_width_ns() != dark.bin_width_ns()) {
    throw_shape("trace bin widths differ");
  }
  const auto a = bright.rates();
  const auto b = dark.rates();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

std::vector<double> expected_counts(const EmissionProfile& profile, double repetitions) {
  if (!(repetitions > 0.0)) throw_domain("repetitions must be positive");
  std::vector<double> out(profile.rates().begin(), profile.rates().end());
  for (auto& v : out) v *= repetitions;
  return out;
}

}  // namespace spinread

#include "spinread/calibration.hpp"

#include <cmath>

#include "spinread/error.hpp"
#include "spinread/format.hpp"
#include "spinread/gate.hpp"

namespace spinread {

double max_gate_contrast(const PhotodynamicsParams& params) {
  const auto [bright, dark] = make_profiles(params);
  const auto sweep = sweep_gate(bright.rates(), dark.rates(), 0, params.bin_width_ns);
  double best = 0.0;
  for (const auto& row : sweep.rows) {
    if (!row.degenerate && row.contrast > best) best = row.contrast;
  }
  return best;
}

PhotodynamicsParams calibrate(const PhotodynamicsParams& base, const CalibrationTargets& targets) {
  if (!(targets.mean_photons > 0.0)) throw_domain("mean_photons target must be positive");
  if (!(targets.max_contrast > 0.0 && targets.max_contrast < 1.0)) {
    throw_domain("max_contrast target must lie in (0, 1)");
  }
  PhotodynamicsParams p = base;
  p.steady_rate = 1.0;
  double lo = 0.0, hi = 0.999;
  p.dark_dip = hi;
  if (max_gate_contrast(p) < targets.max_contrast) {
    throw_domain("max_contrast " + format_double(targets.max_contrast) +
                 " is out of reach for these time constants");
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-16; ++iter) {
    p.dark_dip = 0.5 * (lo + hi);
    (max_gate_contrast(p) < targets.max_contrast ? lo : hi) = p.dark_dip;
  }
  p.dark_dip = 0.5 * (lo + hi);
  const auto [bright, dark] = make_profiles(p);
  p.steady_rate = targets.mean_photons / (0.5 * (bright.total() + dark.total()));
  return p;
}

PhotodynamicsParams calibrate_paper_like() {
  return calibrate(PhotodynamicsParams{}, CalibrationTargets{});
}

}  // namespace spinread

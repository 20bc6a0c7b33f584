#pragma once

#include "spinread/trace.hpp"

namespace spinread {

struct CalibrationTargets {
  double mean_photons = 0.02;  ///< mean of the two boundary profile totals
  double max_contrast = 0.30;  ///< contrast at the max-C gate window
};

/// Tunes dark_dip (bisection on the max-C gated contrast, which is increasing
/// in dark_dip and independent of steady_rate) and then steady_rate (a linear
/// rescale to hit the photon budget). The other fields of `base` are kept.
PhotodynamicsParams calibrate(const PhotodynamicsParams& base, const CalibrationTargets& targets);

/// calibrate() on the default shape parameters; paper_like_params() freezes
/// its output.
PhotodynamicsParams calibrate_paper_like();

/// Max-C gated contrast of noiseless boundary profiles.
double max_gate_contrast(const PhotodynamicsParams& params);

}  // namespace spinread

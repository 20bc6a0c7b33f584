#include <doctest.h>

#include "spinread/calibration.hpp"
#include "spinread/gate.hpp"
#include "spinread/trace.hpp"

using namespace spinread;

TEST_CASE("frozen preset reproduces the calibration routine") {
  const auto fresh = calibrate_paper_like();
  const auto frozen = paper_like_params();
  CHECK(fresh.steady_rate == doctest::Approx(frozen.steady_rate).epsilon(1e-12));
  CHECK(fresh.dark_dip == doctest::Approx(frozen.dark_dip).epsilon(1e-12));
  CHECK(fresh.bright_boost == frozen.bright_boost);
  CHECK(fresh.tau_isc_ns == 250.0);
  CHECK(fresh.bin_width_ns == 2.0);
  CHECK(fresh.bins() == 500);
}

TEST_CASE("paper-like preset meets its targets") {
  const auto p = paper_like_params();
  const auto [bright, dark] = make_profiles(p);
  CHECK(0.5 * (bright.total() + dark.total()) == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(max_gate_contrast(p) == doctest::Approx(0.30).epsilon(1e-9));
}

TEST_CASE("calibrate hits arbitrary targets") {
  PhotodynamicsParams base;
  base.tau_isc_ns = 300.0;
  const auto p = calibrate(base, {0.05, 0.2});
  const auto [bright, dark] = make_profiles(p);
  CHECK(0.5 * (bright.total() + dark.total()) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(max_gate_contrast(p) == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(p.tau_isc_ns == 300.0);
}

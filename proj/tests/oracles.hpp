#pragma once

// Independent reference computations shared by the tests. Written from the
// closed forms directly, without calling the library.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

struct Shape {
  double s, B, D, tb, ti, K, tp, length, bw;
};

inline double bright_rate(const Shape& p, double t) {
  return p.s * (1.0 + p.B * std::exp(-t / p.tb) + p.K * std::exp(-t / p.tp));
}

inline double dark_rate(const Shape& p, double t) {
  return p.s * (1.0 - p.D * std::exp(-t / p.ti) + p.K * std::exp(-t / p.tp));
}

// Midpoint-rule bin rates.
inline std::vector<double> bins(const Shape& p, bool bright) {
  const auto n = static_cast<std::size_t>(std::llround(p.length / p.bw));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * p.bw;
    out[i] = (bright ? bright_rate(p, t) : dark_rate(p, t)) * p.bw;
  }
  return out;
}

// Composite trapezoid integral of (p L0 + (1 - p) L1) / (L0 - L1)^2 over [0, 1].
inline double variance_integral(double L0, double L1, int panels = 1000) {
  const double d2 = (L0 - L1) * (L0 - L1);
  auto f = [&](double p) { return (p * L0 + (1.0 - p) * L1) / d2; };
  double s = 0.5 * (f(0.0) + f(1.0));
  for (int k = 1; k < panels; ++k) s += f(static_cast<double>(k) / panels);
  return s / panels;
}

// Brute-force window sum.
inline double window_sum(const std::vector<double>& v, std::size_t start, std::size_t width) {
  double s = 0.0;
  for (std::size_t i = start; i < start + width; ++i) s += v[i];
  return s;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle

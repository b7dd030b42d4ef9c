#pragma once

#include <algorithm>
#include <cmath>

#include "ncflab/error.hpp"

namespace ncflab {

/// C-infinity step: 0 for u <= 0, 1 for u >= 1, built from exp(-1/u).
inline double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

/// The cutoff family used by the annular decomposition.
///   phi(t)   = 1 on |t| <= 3/8, support |t| <= 1/2
///   psi(s)   = step(2s) - step(s), support [1/4, 5/8], psi(3/8) = 1
///   omega(u) = 1 on |u| <= 1/4, support |u| < 3/4, integer translates sum to 1
/// with step rising on [1/2, 5/8]. phi(t) + sum_k psi(2^k (1 - t)) telescopes to 1.
struct CutoffSet {
  static double step(double s) { return smooth_step((s - 0.5) * 8.0); }

  static double phi(double t) { return step(1.0 - std::abs(t)); }

  static double psi(double s) { return step(2.0 * s) - step(s); }

  static double omega(double u) {
    auto T = [](double x) { return smooth_step((x + 0.25) * 2.0); };
    return T(u + 0.5) - T(u - 0.5);
  }

  static constexpr double psi_lo = 0.25;
  static constexpr double psi_hi = 0.625;
  static constexpr double omega_radius = 0.75;
};

/// Residual of the partition identities at t in [0, 1) and x real.
inline double radial_partition_residual(double t, int kmax = 80) {
  double s = CutoffSet::phi(t);
  double scale = 1.0;
  for (int k = 0; k <= kmax; ++k, scale *= 2.0) s += CutoffSet::psi(scale * (1.0 - t));
  return std::abs(s - 1.0);
}

inline double angular_partition_residual(double x) {
  double s = 0.0;
  const long c = std::lround(std::floor(x));
  for (long l = c - 2; l <= c + 3; ++l) s += CutoffSet::omega(x - static_cast<double>(l));
  return std::abs(s - 1.0);
}

/// Builds the cutoff set and checks its partition identities on a probe grid.
inline CutoffSet build_cutoffs() {
  double worst = 0.0;
  for (int i = 0; i < 4096; ++i) {
    const double t = i / 4096.0;
    worst = std::max(worst, radial_partition_residual(t));
    worst = std::max(worst, angular_partition_residual(-3.0 + 6.0 * t));
  }
  if (worst > 1e-8) throw consistency_error("cutoff partition residual too large");
  return {};
}

/// Smoothing bump for the directional averages: 1 on |t| < 1/2, support |t| < 2,
/// radially nonincreasing.
inline double avg_bump(double t) { return smooth_step((2.0 - std::abs(t)) / 1.5); }

/// Integral of avg_bump over the real line (trapezoid, smooth compact integrand).
inline double avg_bump_mass() {
  static const double mass = [] {
    const int n = 8192;
    const double h = 4.0 / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) s += avg_bump(-2.0 + i * h);
    return s * h;
  }();
  return mass;
}

}  // namespace ncflab

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ncflab/cutoffs.hpp"
#include "ncflab/error.hpp"
#include "ncflab/fft.hpp"
#include "ncflab/ncmat.hpp"
#include "ncflab/optorus.hpp"
#include "ncflab/qtorus.hpp"

namespace ncflab {

// ---------------------------------------------------------------------------
// Annular pieces. With s = 1 - |xi|:
//   m00(xi) = phi(|xi|) (1 - |xi|^2)_+^lambda
//   m_k(xi) = (2^k s)^lambda psi(2^k s) (1 + |xi|)^lambda
// and (1 - |xi|^2)_+^lambda = m00 + sum_k 2^{-k lambda} m_k.

inline cplx cpow_pos(double base, cplx lambda) {
  if (lambda == cplx(0.0)) return 1.0;
  return std::exp(lambda * std::log(base));
}

inline cplx eval_m00(double x1, double x2, cplx lambda) {
  const double r = std::hypot(x1, x2);
  const double ph = CutoffSet::phi(r);
  if (ph == 0.0) return 0.0;
  return ph * riesz_symbol(r * r, lambda);
}

inline cplx eval_mk_radial(double r, int k, cplx lambda) {
  const double u = std::ldexp(1.0 - r, k);
  const double ps = CutoffSet::psi(u);
  if (ps == 0.0) return 0.0;
  return ps * cpow_pos(u, lambda) * cpow_pos(1.0 + r, lambda);
}

inline cplx eval_mk(double x1, double x2, int k, cplx lambda) {
  require(k >= 0, "k must be nonnegative");
  return eval_mk_radial(std::hypot(x1, x2), k, lambda);
}

/// m00 + sum_k 2^{-k lambda} m_k, summed over every k whose annulus can contain xi.
inline cplx riesz_reconstruction(double x1, double x2, cplx lambda) {
  const double r = std::hypot(x1, x2);
  cplx acc = eval_m00(x1, x2, lambda);
  if (r >= 1.0) return acc;
  for (int k = 0; k < 1100; ++k) {
    const double u = std::ldexp(1.0 - r, k);
    if (u > CutoffSet::psi_hi) break;
    if (u < CutoffSet::psi_lo) continue;
    acc += std::exp(-static_cast<double>(k) * std::log(2.0) * lambda) * eval_mk_radial(r, k, lambda);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Microlocal pieces. Angles are signed fractions of a turn in [-1/2, 1/2) and
// the angular index l is signed, so piece (k, l) sits at angle l 2^{-k/2}.

inline double half_power(int k) { return std::exp2(0.5 * k); }

/// Largest |l| whose arc |theta - l 2^{-k/2}| < 2^{-k/2} lies in the sector |xi_2| < xi_1.
inline long case_a_lmax(int k) {
  const double P = half_power(k);
  return static_cast<long>(std::floor(P / 8.0 - 1.0 + 1e-12));
}

inline std::vector<long> case_a_indices(int k) {
  std::vector<long> out;
  const long lm = case_a_lmax(k);
  for (long l = -lm; l <= lm; ++l) out.push_back(l);
  return out;
}

struct MicrolocalPiece {
  int k = 0;
  long l = 0;
  cplx lambda = 0.0;

  double delta() const { return std::ldexp(1.0, -k); }
  double angle() const { return static_cast<double>(l) / half_power(k); }  // turns
  double r_in() const { return 1.0 - 0.625 * delta(); }
  double r_out() const { return 1.0 - 0.125 * delta(); }
  bool in_case_a() const { return std::abs(l) <= case_a_lmax(k); }
};

inline double signed_turn(double x1, double x2) { return std::atan2(x2, x1) / (2.0 * kPi); }

inline cplx eval_mkl(double x1, double x2, const MicrolocalPiece& pc) {
  const double r = std::hypot(x1, x2);
  const cplx mk = eval_mk_radial(r, pc.k, pc.lambda);
  if (mk == cplx(0.0)) return 0.0;
  const double u = half_power(pc.k) * signed_turn(x1, x2) - static_cast<double>(pc.l);
  if (std::abs(u) >= CutoffSet::omega_radius) return 0.0;
  return mk * CutoffSet::omega(u);
}

/// sum_l m_{k,l}(xi) over every l whose support can reach xi.
inline cplx sum_over_l(double x1, double x2, int k, cplx lambda) {
  const double u = half_power(k) * signed_turn(x1, x2);
  cplx acc = 0.0;
  for (long l = static_cast<long>(std::floor(u)) - 1; l <= static_cast<long>(std::ceil(u)) + 1; ++l)
    acc += eval_mkl(x1, x2, {k, l, lambda});
  return acc;
}

// ---------------------------------------------------------------------------
// Derivative bounds. In s1 = 2^k (1 - r), s2 = 2^{k/2} theta - l the normalized
// quantity |d_r^a d_theta^b m| / ((1+|lambda|)^a 2^{ka} 2^{kb/2}) is the s-derivative
// divided by (1+|lambda|)^a, so finite differences are taken in physical r, theta
// with steps proportional to 2^{-k} and 2^{-k/2}.

struct DerivBound {
  int alpha = 0;
  int beta = 0;
  double constant = 0.0;
};

namespace detail {

inline const std::array<std::array<double, 5>, 5>& central_weights() {
  // Central differences on the 5-point stencil -2..2 (orders 0..4).
  static const std::array<std::array<double, 5>, 5> w{{
      {0.0, 0.0, 1.0, 0.0, 0.0},
      {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12},
      {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12},
      {-0.5, 1.0, 0.0, -1.0, 0.5},
      {1.0, -4.0, 6.0, -4.0, 1.0},
  }};
  return w;
}

}  // namespace detail

inline std::vector<DerivBound> verify_deriv_bounds(int k, long l, cplx lambda, int maxOrder, double step = 0.02,
                                                   int samples1 = 41, int samples2 = 61) {
  require(maxOrder >= 0 && maxOrder <= 4, "maxOrder must be in [0, 4]");
  const double dr = std::ldexp(step, -k);
  const double P = half_power(k);
  const double dth = step / P;
  if (dr < 64.0 * std::numeric_limits<double>::epsilon() || dth < 64.0 * std::numeric_limits<double>::epsilon())
    throw invalid_input("finite-difference step underflows at this k");
  const MicrolocalPiece pc{k, l, lambda};
  auto value = [&](double r, double th) {
    const double a = 2.0 * kPi * th;
    return eval_mkl(r * std::cos(a), r * std::sin(a), pc);
  };
  const auto& W = detail::central_weights();
  std::vector<DerivBound> out;
  const double lam = 1.0 + std::abs(lambda);
  for (int a = 0; a <= maxOrder; ++a)
    for (int b = 0; a + b <= maxOrder; ++b) {
      double sup = 0.0;
      for (int i = 0; i < samples1; ++i) {
        const double s1 = 0.2 + 0.45 * i / (samples1 - 1);
        const double r = 1.0 - std::ldexp(s1, -k);
        for (int j = 0; j < samples2; ++j) {
          const double s2 = -0.8 + 1.6 * j / (samples2 - 1);
          const double th = (static_cast<double>(l) + s2) / P;
          cplx acc = 0.0;
          for (int p = 0; p < 5; ++p) {
            if (W[a][p] == 0.0) continue;
            for (int q = 0; q < 5; ++q) {
              if (W[b][q] == 0.0) continue;
              acc += W[a][p] * W[b][q] * value(r + (p - 2) * dr, th + (q - 2) * dth);
            }
          }
          // d/dr = -2^k d/ds1, so the normalized derivative is the difference over step^(a+b).
          sup = std::max(sup, std::abs(acc) / std::pow(step, a + b));
        }
      }
      out.push_back({a, b, sup / std::pow(lam, a)});
    }
  return out;
}

// ---------------------------------------------------------------------------
// Kernels. The piece (k, l) is evaluated in its own frame eta = R_{-2 pi l 2^{-k/2}} xi
// with parabolic coordinates s1 = 2^k (eta_1 - 1), s2 = 2^{k/2} eta_2. The scaled kernel
//   K~(y) = 2^{3k/2} K(2^k y1, 2^{k/2} y2) e^{-2 pi i 2^k y1}
// is the 2D inverse Fourier transform of s -> m_{k,l}, sampled on an s-window of side
// boxL with boxG points per axis. y runs over a centered box of side boxG / boxL.

struct KernelReport {
  OpGrid kernel;       // scaled kernel K~ on the y-box (n = 1)
  double l1 = 0.0;     // integral of |K~| dy, equal to the physical L1 norm
  double mass = 0.0;   // |integral K~ dy|, the symbol at xi = 0 in this frame
  double sup = 0.0;
  double frame_origin_symbol = 0.0;
};

inline KernelReport kernel_mkl(const MicrolocalPiece& pc, int boxG, double boxL) {
  require(fft::is_pow2(boxG), "kernel grid must be a power of two");
  const double ds = boxL / boxG;
  require(ds <= 1.0 / 32.0 + 1e-15, "s-grid does not resolve the piece (need spacing <= 1/32)");
  const int k = pc.k;
  const double P = half_power(k);
  const double phi = 2.0 * kPi * static_cast<double>(pc.l) / P;
  const double c = std::cos(phi), sn = std::sin(phi);

  // Support in s: s1 in [-(5/8) - 2^k (1 - cos(2 pi 3/4 / P)), -1/4], |s2| <= P sin(2 pi 3/4 / P).
  const double amax = 2.0 * kPi * CutoffSet::omega_radius / P;
  const double s1lo = -0.625 - std::ldexp(1.0 - std::cos(amax), k) - 0.1;
  const double s1hi = -0.25 + 0.1;
  const double s2hi = P * std::sin(amax) + 0.1;
  const double s1c = 0.5 * (s1lo + s1hi);
  // Box origin on the s-lattice, so s = 0 is a sample and the y-sum of K~ is the symbol there.
  const double s1_0 = ds * std::round((s1c - 0.5 * boxL) / ds), s2_0 = -0.5 * boxL;
  if (s1lo < s1_0 || s1hi > s1_0 + boxL - ds || s2hi > 0.5 * boxL - ds)
    throw invalid_input("kernel window does not contain the piece support");

  OpGrid g(boxG, 1);
  const int a_lo = std::max(0, static_cast<int>(std::floor((s1lo - s1_0) / ds)));
  const int a_hi = std::min(boxG - 1, static_cast<int>(std::ceil((s1hi - s1_0) / ds)));
  const int b_lo = std::max(0, static_cast<int>(std::floor((-s2hi - s2_0) / ds)));
  const int b_hi = std::min(boxG - 1, static_cast<int>(std::ceil((s2hi - s2_0) / ds)));
  for (int a = a_lo; a <= a_hi; ++a) {
    const double e1 = 1.0 + std::ldexp(s1_0 + a * ds, -k);
    for (int b = b_lo; b <= b_hi; ++b) {
      const double e2 = (s2_0 + b * ds) / P;
      g.at(0, 0, a, b) = eval_mkl(c * e1 - sn * e2, sn * e1 + c * e2, pc);
    }
  }
  // K~(y) = sum_s g(s) e^{2 pi i s.y} ds^2 with y = signed index / boxL.
  fft::dft2(g.data.data(), boxG, boxG, 1, +1);
  const double Ly = boxG / boxL;
  KernelReport rep;
  rep.kernel = OpGrid(boxG, 1, Domain::box, Ly);
  const double w = ds * ds;
  const double dy = 1.0 / boxL;
  cplx mass = 0.0;
  for (int a = 0; a < boxG; ++a) {
    const int ia = fft::wrap_index(a - boxG / 2, boxG);
    const double y1 = (a - boxG / 2) * dy;
    for (int b = 0; b < boxG; ++b) {
      const int ib = fft::wrap_index(b - boxG / 2, boxG);
      const double y2 = (b - boxG / 2) * dy;
      const double ph = 2.0 * kPi * (s1_0 * y1 + s2_0 * y2);
      const cplx v = g.at(0, 0, ia, ib) * w * cplx(std::cos(ph), std::sin(ph));
      rep.kernel.at(0, 0, a, b) = v;
      rep.l1 += std::abs(v);
      rep.sup = std::max(rep.sup, std::abs(v));
      mass += v;
    }
  }
  rep.l1 *= dy * dy;
  rep.mass = std::abs(mass) * dy * dy;
  rep.frame_origin_symbol = std::abs(eval_mkl(c, sn, pc));
  return rep;
}

/// max over |y_i| <= radius of |K~(y)| (1 + |y1| + |y2|)^3 / (1 + |lambda|)^3.
inline double decay_constant(const KernelReport& rep, cplx lambda, double radius) {
  const OpGrid& K = rep.kernel;
  const double lam3 = std::pow(1.0 + std::abs(lambda), 3);
  double best = 0.0;
  for (int a = 0; a < K.G; ++a) {
    const double y1 = K.coord(a);
    if (std::abs(y1) > radius) continue;
    for (int b = 0; b < K.G; ++b) {
      const double y2 = K.coord(b);
      if (std::abs(y2) > radius) continue;
      best = std::max(best, std::abs(K.at(0, 0, a, b)) * std::pow(1.0 + std::abs(y1) + std::abs(y2), 3) / lam3);
    }
  }
  return best;
}

/// Samples where |K~| exceeds C (1+|lambda|)^3 (1+|y|_1)^{-3} + tol sup |K~|, within |y_i| <= radius.
inline long decay_violations(const KernelReport& rep, cplx lambda, double C, double radius, double tol = 1e-3) {
  const OpGrid& K = rep.kernel;
  const double lam3 = std::pow(1.0 + std::abs(lambda), 3);
  long count = 0;
  for (int a = 0; a < K.G; ++a) {
    const double y1 = K.coord(a);
    if (std::abs(y1) > radius) continue;
    for (int b = 0; b < K.G; ++b) {
      const double y2 = K.coord(b);
      if (std::abs(y2) > radius) continue;
      const double env = C * lam3 * std::pow(1.0 + std::abs(y1) + std::abs(y2), -3) + tol * rep.sup;
      if (std::abs(K.at(0, 0, a, b)) > env) ++count;
    }
  }
  return count;
}

/// Physical kernel K_{k,l}(x) = integral m_{k,l}(xi) e^{2 pi i xi.x} dxi by direct
/// axis-aligned midpoint quadrature over the bounding box of the arc.
inline cplx kernel_direct(const MicrolocalPiece& pc, double x1, double x2, int n1 = 400) {
  const double P = half_power(pc.k);
  const double amax = 2.0 * kPi * CutoffSet::omega_radius / P;
  const double th0 = 2.0 * kPi * pc.angle();
  // Bounding box from a polar sweep of the support corners.
  double lo1 = 1e9, hi1 = -1e9, lo2 = 1e9, hi2 = -1e9;
  for (int i = 0; i <= 64; ++i) {
    const double a = th0 - amax + 2.0 * amax * i / 64.0;
    for (double r : {pc.r_in(), pc.r_out()}) {
      lo1 = std::min(lo1, r * std::cos(a));
      hi1 = std::max(hi1, r * std::cos(a));
      lo2 = std::min(lo2, r * std::sin(a));
      hi2 = std::max(hi2, r * std::sin(a));
    }
  }
  const double w1 = hi1 - lo1, w2 = hi2 - lo2;
  const int n2 = std::max(n1, static_cast<int>(n1 * w2 / std::max(w1, 1e-300)));
  const int m1 = std::max(n1, static_cast<int>(n1 * w1 / std::max(w2, 1e-300)));
  const double h1 = w1 / m1, h2 = w2 / n2;
  cplx acc = 0.0;
  for (int i = 0; i < m1; ++i) {
    const double e1 = lo1 + (i + 0.5) * h1;
    for (int j = 0; j < n2; ++j) {
      const double e2 = lo2 + (j + 0.5) * h2;
      const cplx m = eval_mkl(e1, e2, pc);
      if (m == cplx(0.0)) continue;
      const double ph = 2.0 * kPi * (e1 * x1 + e2 * x2);
      acc += m * cplx(std::cos(ph), std::sin(ph));
    }
  }
  return acc * h1 * h2;
}

// ---------------------------------------------------------------------------
// Strips S_{k,sigma,upsilon} = R x [(40 sigma + upsilon) 2^{-k/2}, (40 sigma + upsilon + 40) 2^{-k/2}].

struct Strip {
  long sigma = 0;
  int upsilon = 0;      // 0..39
  int subfamily = 1;    // upsilon + 1
  double lo = 0.0, hi = 0.0;
  double jt_lo = 0.0, jt_hi = 0.0;  // widened projection J~_{k,l}
};

inline Strip strip_assign(int k, long l) {
  require(std::abs(l) <= case_a_lmax(k), "strip_assign requires a case (a) piece");
  const double s = std::exp2(-0.5 * k);
  const double center = (1.0 - 0.375 * std::ldexp(1.0, -k)) * std::sin(2.0 * kPi * s * static_cast<double>(l));
  Strip st;
  st.jt_lo = center - 10.0 * s;
  st.jt_hi = center + 10.0 * s;
  const long base = static_cast<long>(std::floor(st.jt_lo / s)) - 10;
  st.sigma = base >= 0 ? base / 40 : -((-base + 39) / 40);
  st.upsilon = static_cast<int>(base - 40 * st.sigma);
  st.subfamily = st.upsilon + 1;
  st.lo = static_cast<double>(base) * s;
  st.hi = static_cast<double>(base + 40) * s;
  if (!(st.lo <= st.jt_lo && st.jt_hi <= st.hi) || st.upsilon < 0 || st.upsilon >= 40)
    throw consistency_error("no containing strip for piece " + std::to_string(l));
  return st;
}

// ---------------------------------------------------------------------------
// Overlap audit. Gamma_l = {r e^{2 pi i theta}: |theta - l d| < d, r in [1 - 5/8 delta, 1 - 1/8 delta]},
// d = delta^{1/2}. We count pairs (l, l') with xi in Gamma_l - Gamma_{l'}.

struct OverlapPair {
  long l;
  long lp;
};

namespace detail {

inline double wrap_pi(double a) { return std::remainder(a, 2.0 * kPi); }

/// Whether xi + b lies in Gamma_l for some b in Gamma_{l'}; radial sampling of b with
/// the radial spacing added to every tolerance so the test can only over-report.
inline bool difference_member(double x1, double x2, long l, long lp, int k, int radial_samples = 6) {
  const double d = std::exp2(-0.5 * k), delta = std::ldexp(1.0, -k);
  const double r1 = 1.0 - 0.625 * delta, r2 = 1.0 - 0.125 * delta;
  const double eps = (r2 - r1) / (radial_samples - 1);
  const double half = 2.0 * kPi * d;
  const double dd = std::hypot(x1, x2);
  if (dd == 0.0) return l == lp || std::abs(l - lp) <= 2;
  const double phx = std::atan2(x2, x1);
  const double cb = 2.0 * kPi * d * static_cast<double>(lp);
  const double ca = 2.0 * kPi * d * static_cast<double>(l);
  for (int i = 0; i < radial_samples; ++i) {
    const double rho = r1 + i * eps;
    const double clo = ((r1 - eps) * (r1 - eps) - rho * rho - dd * dd) / (2.0 * rho * dd);
    const double chi = ((r2 + eps) * (r2 + eps) - rho * rho - dd * dd) / (2.0 * rho * dd);
    if (clo > 1.0 || chi < -1.0) continue;
    const double alo = std::acos(std::min(chi, 1.0)), ahi = std::acos(std::max(clo, -1.0));
    for (int sg : {1, -1}) {
      double b1 = phx + sg * alo, b2 = phx + sg * ahi;
      if (b1 > b2) std::swap(b1, b2);
      const double off = 2.0 * kPi * std::round((cb - 0.5 * (b1 + b2)) / (2.0 * kPi));
      b1 += off;
      b2 += off;
      const double lo = std::max(b1, cb - half - eps), hi = std::min(b2, cb + half + eps);
      if (lo > hi) continue;
      // Range of arg(xi + rho e^{i beta}) over [lo, hi]: endpoints plus turning points.
      std::vector<double> betas{lo, hi};
      if (rho < dd) {
        const double t = std::acos(-rho / dd);
        for (double cand : {phx + t, phx - t}) {
          const double c2 = cand + 2.0 * kPi * std::round((0.5 * (lo + hi) - cand) / (2.0 * kPi));
          if (c2 > lo && c2 < hi) betas.push_back(c2);
        }
      }
      double amin = 1e9, amax = -1e9;
      for (double be : betas) {
        const double a = ca + wrap_pi(std::atan2(x2 + rho * std::sin(be), x1 + rho * std::cos(be)) - ca);
        amin = std::min(amin, a);
        amax = std::max(amax, a);
      }
      if (amin <= ca + half + eps && amax >= ca - half - eps) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Case-(a) pairs with |l - l'| > threshold whose difference set contains xi.
inline std::vector<OverlapPair> overlap_pairs(int k, double x1, double x2, long threshold = 1000) {
  std::vector<OverlapPair> out;
  const long lm = case_a_lmax(k);
  if (lm < 0 || 2 * lm <= threshold) return out;
  const double mag = std::hypot(x1, x2);
  if (mag > 4.0) return out;
  const double d = std::exp2(-0.5 * k), delta = std::ldexp(1.0, -k);
  // |xi - w(l,l')| <= D for every xi in Gamma_l - Gamma_{l'}.
  const double D = 2.0 * (0.625 * delta + 2.0 * kPi * d);
  const double ang = std::atan2(x2, x1);
  for (long dl = -2 * lm; dl <= 2 * lm; ++dl) {
    if (std::abs(dl) <= threshold) continue;
    const double w = 2.0 * std::sin(kPi * static_cast<double>(dl) * d);
    if (std::abs(std::abs(w) - mag) > D) continue;
    // w(l,l') = 2 sin(pi (l-l') d) i e^{pi i (l+l') d}
    const double base = std::atan2(w >= 0 ? 1.0 : -1.0, 0.0);
    const double t = detail::wrap_pi(ang - base);
    const double tol = std::abs(w) > D ? D / (std::abs(w) - D) + 1e-12 : kPi;
    const long smin = static_cast<long>(std::floor((t - tol) / (kPi * d))) - 1;
    const long smax = static_cast<long>(std::ceil((t + tol) / (kPi * d))) + 1;
    for (long S = std::max(smin, -2 * lm); S <= std::min(smax, 2 * lm); ++S) {
      if (((S + dl) % 2 + 2) % 2 != 0) continue;
      const long l = (S + dl) / 2, lp = (S - dl) / 2;
      if (std::abs(l) > lm || std::abs(lp) > lm) continue;
      if (detail::difference_member(x1, x2, l, lp, k)) out.push_back({l, lp});
    }
  }
  return out;
}

inline long overlap_count(int k, double x1, double x2, long threshold = 1000) {
  return static_cast<long>(overlap_pairs(k, x1, x2, threshold).size());
}

/// Random point of Gamma_{k,l}.
inline std::pair<double, double> sample_arc(int k, long l, std::mt19937_64& rng) {
  const double d = std::exp2(-0.5 * k), delta = std::ldexp(1.0, -k);
  std::uniform_real_distribution<double> ur(1.0 - 0.625 * delta, 1.0 - 0.125 * delta), ua(-1.0, 1.0);
  const double r = ur(rng);
  const double a = 2.0 * kPi * (static_cast<double>(l) + ua(rng)) * d;
  return {r * std::cos(a), r * std::sin(a)};
}

// ---------------------------------------------------------------------------
// Geometry of Gamma_l - Gamma_{l'}.

struct GeometryWitness {
  double w1 = 0.0, w2 = 0.0;      // w(l,l')
  double half_length = 0.0;       // along w
  double half_width = 0.0;        // along i w
  long samples = 0;
  long outside = 0;               // sampled differences outside R(l,l')
  double max_along = 0.0;         // largest |projection on w| seen
  double max_across = 0.0;        // largest |projection on i w| seen
};

inline GeometryWitness geometry_witness(int k, long l, long lp, long samples, std::mt19937_64& rng) {
  const long lm = case_a_lmax(k);
  require(std::abs(l) <= lm && std::abs(lp) <= lm, "geometry_witness requires case (a) indices");
  const double d = std::exp2(-0.5 * k), delta = std::ldexp(1.0, -k);
  GeometryWitness g;
  const double al = 2.0 * kPi * static_cast<double>(l) * d, alp = 2.0 * kPi * static_cast<double>(lp) * d;
  g.w1 = std::cos(al) - std::cos(alp);
  g.w2 = std::sin(al) - std::sin(alp);
  g.half_length = 100.0 * d;
  g.half_width = 90.0 * static_cast<double>(std::abs(l - lp)) * delta;
  g.samples = samples;
  if (l == lp) return g;
  // Direction of w is i e^{pi i (l+l') d} up to sign.
  const double th = kPi * static_cast<double>(l + lp) * d;
  const double u1 = -std::sin(th), u2 = std::cos(th);  // unit along w
  const double v1 = -u2, v2 = u1;                       // unit along i w
  for (long s = 0; s < samples; ++s) {
    const auto [a1, a2] = sample_arc(k, l, rng);
    const auto [b1, b2] = sample_arc(k, lp, rng);
    const double e1 = a1 - b1 - g.w1, e2 = a2 - b2 - g.w2;
    const double along = std::abs(e1 * u1 + e2 * u2), across = std::abs(e1 * v1 + e2 * v2);
    g.max_along = std::max(g.max_along, along);
    g.max_across = std::max(g.max_across, across);
    if (along > g.half_length || across > g.half_width) ++g.outside;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Sectors Gamma_l = {xi : |<xi/|xi|, e_m^l>| <= c 2^{-m}}, e_m^l = (1, l 2^{-m}).

struct SectorSet {
  int m = 2;
  double c = 0.25;

  SectorSet() = default;
  SectorSet(int m_, double c_ = 0.25) : m(m_), c(c_) {
    require(m >= 1, "sector level must be positive");
    // Sector l is a double cone around the normal of e_m^l; check consecutive cones are disjoint.
    const double M = std::ldexp(1.0, m);
    for (long l = 0; l + 1 < static_cast<long>(M); ++l) {
      const double gap = std::atan((l + 1) / M) - std::atan(l / M);
      if (gap <= half_angle(l) + half_angle(l + 1)) throw consistency_error("sectors overlap");
    }
  }

  double half_angle(long l) const {
    const double M = std::ldexp(1.0, m);
    return std::asin(std::min(1.0, c / M / std::hypot(1.0, l / M)));
  }

  double dot(long l, double x1, double x2) const { return x1 + x2 * std::ldexp(static_cast<double>(l), -m); }

  bool contains(long l, double x1, double x2) const {
    const double r = std::hypot(x1, x2);
    if (r == 0.0) return false;
    return std::abs(dot(l, x1, x2)) / r <= c * std::ldexp(1.0, -m);
  }
};

// ---------------------------------------------------------------------------
// Fourier transform of the normalized smoothing bump, psi^(eta) = int psi(t) cos(2 pi t eta) dt / int psi.

namespace detail {

/// Truncated Taylor series in one variable, used to differentiate the bump exactly.
constexpr int kTaylorOrder = 16;
using Taylor = std::array<double, kTaylorOrder + 1>;

inline Taylor t_mul(const Taylor& a, const Taylor& b) {
  Taylor c{};
  for (int i = 0; i <= kTaylorOrder; ++i)
    for (int j = 0; i + j <= kTaylorOrder; ++j) c[i + j] += a[i] * b[j];
  return c;
}

inline Taylor t_recip(const Taylor& a) {
  Taylor c{};
  c[0] = 1.0 / a[0];
  for (int n = 1; n <= kTaylorOrder; ++n) {
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += a[i] * c[n - i];
    c[n] = -s / a[0];
  }
  return c;
}

inline Taylor t_exp(const Taylor& a) {
  Taylor c{};
  c[0] = std::exp(a[0]);
  for (int n = 1; n <= kTaylorOrder; ++n) {
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += i * a[i] * c[n - i];
    c[n] = s / n;
  }
  return c;
}

/// Taylor coefficients of avg_bump at t in (1/2, 2).
inline Taylor avg_bump_taylor(double t) {
  const double u0 = (2.0 - t) / 1.5;
  Taylor out{};
  if (u0 <= 1e-3 || u0 >= 1.0 - 1e-3) {
    out[0] = avg_bump(t);
    return out;
  }
  Taylor u{}, one_minus{};
  u[0] = u0;
  u[1] = -1.0 / 1.5;
  one_minus[0] = 1.0 - u0;
  one_minus[1] = 1.0 / 1.5;
  Taylor g = t_recip(u);
  const Taylor h = t_recip(one_minus);
  for (int i = 0; i <= kTaylorOrder; ++i) g[i] -= h[i];
  // 1 / (1 + e^g), rewritten as e^{-g} / (1 + e^{-g}) when g > 0 to avoid overflow.
  if (g[0] <= 0.0) {
    Taylor e = t_exp(g);
    e[0] += 1.0;
    return t_recip(e);
  }
  for (auto& v : g) v = -v;
  const Taylor en = t_exp(g);
  Taylor d = en;
  d[0] += 1.0;
  return t_mul(en, t_recip(d));
}

}  // namespace detail

class PsiHat {
 public:
  static const PsiHat& instance() {
    static const PsiHat t;
    return t;
  }

  static constexpr double eta_max = 256.0;

  /// Value at |eta| < eta_max by cubic Hermite interpolation.
  double operator()(double eta) const {
    const double x = std::abs(eta);
    if (x >= eta_max) throw invalid_input("PsiHat argument beyond the tabulated range");
    const double u = x / h_;
    const size_t i = static_cast<size_t>(u);
    const double t = u - static_cast<double>(i);
    const double y0 = v_[i], y1 = v_[i + 1], d0 = dv_[i] * h_, d1 = dv_[i + 1] * h_;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * d1;
  }

  /// |psi^(x) - psi^(y)| <= (M/2) |x^2 - y^2| with M = 4 pi^2 int t^2 psi / int psi.
  double second_moment_bound() const { return M_; }

  /// Certified |psi^(x)| <= min_n B_n / (2 pi |x|)^n, B_n = ||psi^(n)||_1 / int psi.
  double decay_bound(double x) const {
    double best = 1.0;
    for (int n = 2; n <= detail::kTaylorOrder; ++n) best = std::min(best, B_[n] / std::pow(2.0 * kPi * x, n));
    return best;
  }

 private:
  PsiHat() {
    // Transform by FFT on a zero-padded line: spacing ht in t, frequency step h_ = 1/(N ht).
    const double ht = 1.0 / 1024.0;
    const int N = 1 << 22;
    h_ = 1.0 / (N * ht);
    const double mass = avg_bump_mass();
    std::vector<cplx> a(N, 0.0), b(N, 0.0);
    const int half = static_cast<int>(2.0 / ht);
    for (int i = -half; i <= half; ++i) {
      const double t = i * ht;
      const double p = avg_bump(t);
      a[fft::wrap_index(i, N)] = p * ht / mass;
      b[fft::wrap_index(i, N)] = 2.0 * kPi * t * p * ht / mass;
    }
    fft::dft2(a.data(), 1, N, 1, -1);
    fft::dft2(b.data(), 1, N, 1, -1);
    const size_t count = static_cast<size_t>(eta_max / h_) + 2;
    v_.resize(count);
    dv_.resize(count);
    // sum 2 pi t psi e^{-2 pi i t eta} has imaginary part -int 2 pi t psi sin(2 pi t eta) = d/deta psi^.
    for (size_t i = 0; i < count; ++i) {
      v_[i] = a[i].real();
      dv_[i] = b[i].imag();
    }
    // Moments and L1 norms of derivatives; psi is even and flat on |t| < 1/2.
    double m2 = 0.0;
    B_.fill(0.0);
    const int nq = 60000;
    const double hq = 1.5 / nq;
    double fact = 1.0;
    std::array<double, detail::kTaylorOrder + 1> factorial{};
    for (int n = 0; n <= detail::kTaylorOrder; ++n) {
      factorial[n] = fact;
      fact *= (n + 1);
    }
    for (int i = 0; i < nq; ++i) {
      const double t = 0.5 + (i + 0.5) * hq;
      const detail::Taylor c = detail::avg_bump_taylor(t);
      for (int n = 1; n <= detail::kTaylorOrder; ++n) B_[n] += 2.0 * std::abs(c[n]) * factorial[n] * hq;
    }
    for (int i = 0; i < 2 * nq; ++i) {
      const double t = (i + 0.5) * (2.0 / (2 * nq));
      m2 += 2.0 * t * t * avg_bump(t) * (2.0 / (2 * nq));
    }
    for (auto& v : B_) v = 1.01 * v / mass;  // margin for the midpoint rule
    M_ = 4.0 * kPi * kPi * m2 / mass;
  }

  double h_ = 0.0;
  std::vector<double> v_, dv_;
  double M_ = 0.0;
  std::array<double, detail::kTaylorOrder + 1> B_{};
};

struct MultiplierSumReport {
  double value = 0.0;
  double tail_bound = 0.0;  // certified bound on omitted j terms and out-of-table values
  long terms = 0;
};

/// sum_j sum_{0 <= l < 2^{m-1}} |psi^(2^{j+m} <e^{2l+1}, xi>) - psi^(2^{j+m} <e^{2l}, xi>)|^2
/// restricted to xi outside Gamma_{2l+1} and Gamma_{2l}.
inline MultiplierSumReport multiplier_sum_bound(int m, double x1, double x2, const SectorSet* sectors = nullptr,
                                                double tail_budget = 1e-14) {
  require(m >= 2, "multiplier_sum_bound requires m >= 2");
  require(x1 != 0.0 || x2 != 0.0, "xi must be nonzero");
  SectorSet local;
  if (!sectors || sectors->m != m) {
    local = SectorSet(m);
    sectors = &local;
  }
  const PsiHat& ph = PsiHat::instance();
  const double Mb = 0.5 * ph.second_moment_bound();
  const double scale = std::ldexp(1.0, m);
  const double top = PsiHat::eta_max;
  MultiplierSumReport rep;
  const long nl = 1L << (m - 1);
  const double per = tail_budget / static_cast<double>(nl);
  for (long l = 0; l < nl; ++l) {
    if (sectors->contains(2 * l + 1, x1, x2) || sectors->contains(2 * l, x1, x2)) continue;
    const double A = std::abs(scale * sectors->dot(2 * l + 1, x1, x2));
    const double B = std::abs(scale * sectors->dot(2 * l, x1, x2));
    const double dsq = std::abs(A * A - B * B);
    if (dsq == 0.0) continue;
    // Lower tail: term_j <= (Mb 4^j dsq)^2; the sum over j <= j0 is at most that over (1 - 1/16).
    auto lower = [&](int j) { return std::pow(Mb * std::ldexp(dsq, 2 * j), 2) / (1.0 - 1.0 / 16.0); };
    int j0 = -static_cast<int>(std::ceil(std::log2(std::max(A, B)))) - 1;
    while (lower(j0) > per) --j0;
    double tail = lower(j0);
    for (int j = j0 + 1;; ++j) {
      const double xa = std::ldexp(A, j), xb = std::ldexp(B, j);
      if (xa >= top && xb >= top) {
        // Both beyond the table: the remaining terms decay at least geometrically (ratio 1/4).
        const double e = ph.decay_bound(xa) + ph.decay_bound(xb);
        tail += e * e / (1.0 - 0.25);
        break;
      }
      if (xa < top && xb < top) {
        const double diff = ph(xa) - ph(xb);
        rep.value += diff * diff;
      } else {
        const double in = ph(std::min(xa, xb));
        const double e = ph.decay_bound(std::max(xa, xb));
        rep.value += in * in;
        tail += 2.0 * std::abs(in) * e + e * e;
      }
      ++rep.terms;
    }
    rep.tail_bound += tail;
  }
  return rep;
}

}  // namespace ncflab

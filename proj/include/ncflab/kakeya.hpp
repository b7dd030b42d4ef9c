#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "ncflab/cutoffs.hpp"
#include "ncflab/error.hpp"
#include "ncflab/fft.hpp"
#include "ncflab/multilab.hpp"
#include "ncflab/optorus.hpp"

namespace ncflab {

/// Periodic convolution kernel on the G x G torus grid; index (a, b) is the offset
/// (a, b) mod G in cells.
struct GridKernel {
  int G = 0;
  std::vector<double> w;

  explicit GridKernel(int g = 0) : G(g), w(static_cast<size_t>(g) * g, 0.0) {}

  void add(long a, long b, double v) {
    w[static_cast<size_t>(fft::wrap_index(a, G)) * G + fft::wrap_index(b, G)] += v;
  }

  /// Bilinear splat of weight v at fractional cell offset (u, v).
  void splat(double u, double v, double wt) {
    const double fu = std::floor(u), fv = std::floor(v);
    const double tu = u - fu, tv = v - fv;
    const long iu = static_cast<long>(fu), iv = static_cast<long>(fv);
    add(iu, iv, wt * (1 - tu) * (1 - tv));
    add(iu + 1, iv, wt * tu * (1 - tv));
    add(iu, iv + 1, wt * (1 - tu) * tv);
    add(iu + 1, iv + 1, wt * tu * tv);
  }

  double mass() const { return std::accumulate(w.begin(), w.end(), 0.0); }

  void normalize() {
    const double m = mass();
    if (!(m > 0)) throw numeric_error("kernel has no mass");
    for (auto& v : w) v /= m;
  }
};

/// out(x) = sum_y K(y) F(x - y) for every entry plane.
inline OpGrid convolve(const OpGrid& F, const GridKernel& K) {
  require(F.domain == Domain::torus && F.G == K.G, "kernel and grid mismatch");
  std::vector<cplx> kh(K.w.begin(), K.w.end());
  fft::dft2(kh.data(), K.G, K.G, 1, -1);
  return apply_table(F, kh);
}

/// Reusable convolution of one real scalar field against many real kernels.
class RealConvolver {
 public:
  explicit RealConvolver(const std::vector<double>& f, int G)
      : G_(G), half_(static_cast<size_t>(G) * (G / 2 + 1)), fh_(half_), kh_(half_), tmp_(static_cast<size_t>(G) * G) {
    require(f.size() == static_cast<size_t>(G) * G, "field size mismatch");
    std::vector<double> in = f;
    fft::rdft2(in.data(), fh_.data(), G, G);
  }

  /// Writes F * K into out.
  void apply(const GridKernel& K, std::vector<double>& out) {
    require(K.G == G_, "kernel size mismatch");
    std::copy(K.w.begin(), K.w.end(), tmp_.begin());
    fft::rdft2(tmp_.data(), kh_.data(), G_, G_);
    const double s = 1.0 / (static_cast<double>(G_) * G_);
    for (size_t i = 0; i < half_; ++i) kh_[i] *= fh_[i] * s;
    out.resize(static_cast<size_t>(G_) * G_);
    fft::irdft2(kh_.data(), out.data(), G_, G_);
  }

 private:
  int G_;
  size_t half_;
  std::vector<cplx> fh_, kh_;
  std::vector<double> tmp_;
};

// ---------------------------------------------------------------------------
// Directional averages

/// Line kernel for (1/2h) int_{-h}^{h} F(x - e y) dy: trapezoid nodes with spacing at
/// most half a cell along the line, each splatted bilinearly.
inline GridKernel directional_kernel(int G, double e1, double e2, double h) {
  const double dx = 1.0 / G;
  require(h >= dx, "directional average needs h of at least one grid cell");
  require(2.0 * h <= 0.5, "directional average longer than half the torus");
  const double norm = std::hypot(e1, e2);
  require(norm > 0, "direction must be nonzero");
  e1 /= norm;
  e2 /= norm;
  const int n = 2 * static_cast<int>(std::ceil(2.0 * h / (0.5 * dx)));
  GridKernel K(G);
  for (int i = 0; i <= n; ++i) {
    const double y = -h + 2.0 * h * i / n;
    const double wt = (i == 0 || i == n) ? 0.5 : 1.0;
    K.splat(e1 * y / dx, e2 * y / dx, wt / n);
  }
  return K;
}

inline OpGrid directional_avg(const OpGrid& F, double e1, double e2, double h) {
  return convolve(F, directional_kernel(F.G, e1, e2, h));
}

// ---------------------------------------------------------------------------
// Rectangles

/// Rectangle with eccentricity N, short side h, centered at the origin. The long axis
/// points along (N, k) mapped by the dihedral element sym: 0: theta, 1: pi/2 - theta,
/// 2: pi/2 + theta, 3: pi - theta; sym + 4 is the same rectangle turned by pi.
struct RectSpec {
  int N = 1;
  int k = 0;
  double h = 0.0;
  int sym = 0;

  double long_side() const { return N * h; }
  double area() const { return N * h * h; }
  double angle() const {
    const double th = std::atan2(static_cast<double>(k), static_cast<double>(N));
    switch (sym % 4) {
      case 0: return th + (sym / 4) * kPi;
      case 1: return 0.5 * kPi - th + (sym / 4) * kPi;
      case 2: return 0.5 * kPi + th + (sym / 4) * kPi;
      default: return kPi - th + (sym / 4) * kPi;
    }
  }
};

namespace detail {

using Poly = std::vector<std::array<double, 2>>;

/// Keeps the part of a convex polygon with sign * (p[axis] - c) >= 0.
inline Poly clip_halfplane(const Poly& in, int axis, double c, double sign) {
  Poly out;
  const size_t n = in.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& p = in[i];
    const auto& q = in[(i + 1) % n];
    const double dp = sign * (p[axis] - c), dq = sign * (q[axis] - c);
    if (dp >= 0) out.push_back(p);
    if ((dp >= 0) != (dq >= 0)) {
      const double t = dp / (dp - dq);
      out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
    }
  }
  return out;
}

inline double poly_area(const Poly& p) {
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    s += a[0] * b[1] - a[1] * b[0];
  }
  return 0.5 * std::abs(s);
}

}  // namespace detail

/// Normalized indicator of a centered rectangle (in cell units) with exact
/// area-fraction weights on the cells it cuts.
inline GridKernel rect_kernel_cells(int G, double long_cells, double short_cells, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const double a = 0.5 * long_cells, b = 0.5 * short_cells;
  detail::Poly rect{{{a * c - b * s, a * s + b * c}},
                    {{-a * c - b * s, -a * s + b * c}},
                    {{-a * c + b * s, -a * s - b * c}},
                    {{a * c + b * s, a * s - b * c}}};
  double lo0 = 1e300, hi0 = -1e300;
  for (const auto& p : rect) {
    lo0 = std::min(lo0, p[0]);
    hi0 = std::max(hi0, p[0]);
  }
  GridKernel K(G);
  const long i0 = static_cast<long>(std::floor(lo0 + 0.5)), i1 = static_cast<long>(std::ceil(hi0 - 0.5));
  for (long i = i0; i <= i1; ++i) {
    detail::Poly slab = detail::clip_halfplane(rect, 0, i - 0.5, 1.0);
    slab = detail::clip_halfplane(slab, 0, i + 0.5, -1.0);
    if (slab.size() < 3) continue;
    double lo1 = 1e300, hi1 = -1e300;
    for (const auto& p : slab) {
      lo1 = std::min(lo1, p[1]);
      hi1 = std::max(hi1, p[1]);
    }
    const long j0 = static_cast<long>(std::floor(lo1 + 0.5)), j1 = static_cast<long>(std::ceil(hi1 - 0.5));
    for (long j = j0; j <= j1; ++j) {
      detail::Poly cell = detail::clip_halfplane(slab, 1, j - 0.5, 1.0);
      cell = detail::clip_halfplane(cell, 1, j + 0.5, -1.0);
      if (cell.size() < 3) continue;
      const double ar = detail::poly_area(cell);
      if (ar > 0) K.add(i, j, ar);
    }
  }
  K.normalize();
  return K;
}

/// Smallest short side accepted, in cells; rectangles thinner than a cell are
/// represented by their area fractions.
inline constexpr double kMinShortCells = 0.25;

inline void require_resolved(int G, const RectSpec& r) {
  require(r.N >= 1 && r.k >= 0 && r.k < std::max(r.N, 1), "direction index out of range");
  require(r.h * G >= kMinShortCells - 1e-12, "rectangle short side is below the grid resolution");
  require(r.long_side() <= 0.5 + 1e-12, "rectangle longer than half the torus");
}

inline GridKernel rect_kernel(int G, const RectSpec& r) {
  require_resolved(G, r);
  return rect_kernel_cells(G, r.long_side() * G, r.h * G, r.angle());
}

inline OpGrid kakeya_avg(const OpGrid& F, const RectSpec& r) { return convolve(F, rect_kernel(F.G, r)); }

/// Axis-aligned square circumscribing the rectangle, with |Q| / |R| returned through ratio.
inline GridKernel circumscribed_square_kernel(int G, const RectSpec& r, double* ratio = nullptr) {
  require_resolved(G, r);
  const double a = r.angle();
  const double L = r.long_side(), h = r.h;
  const double side = std::max(L * std::abs(std::cos(a)) + h * std::abs(std::sin(a)),
                               L * std::abs(std::sin(a)) + h * std::abs(std::cos(a)));
  if (ratio) *ratio = side * side / r.area();
  return rect_kernel_cells(G, side * G, side * G, 0.0);
}

// ---------------------------------------------------------------------------
// Smoothed averages A_h^{k,N}, M_h^{k,N} with psi_h(t) = psi(t/h) / (h int psi).

/// A_h^{k,N} F(x) = int int F(x - u t - e2 s) psi_h(t) psi_h(s) ds dt, u = (N, k).
/// Density psi_h(t) psi_h(s) / N at y = u t + e2 s, sampled at cell centers.
inline GridKernel smoothed_kernel(int G, int k, int N, double h) {
  const double dx = 1.0 / G;
  require(N >= 1 && k >= 0 && k < N, "direction index out of range");
  require(h >= 2.0 * dx, "smoothed average needs h of at least two cells");
  require(2.0 * h * std::hypot(N, k) + 2.0 * h <= 0.5, "smoothed average does not fit in half the torus");
  GridKernel K(G);
  const long ext = static_cast<long>(std::ceil((2.0 * h * (N + k) + 2.0 * h) / dx)) + 1;
  for (long a = -ext; a <= ext; ++a) {
    const double y1 = a * dx;
    const double t = y1 / N;
    const double pt = avg_bump(t / h);
    if (pt == 0.0) continue;
    for (long b = -ext; b <= ext; ++b) {
      const double s = b * dx - static_cast<double>(k) * t;
      const double ps = avg_bump(s / h);
      if (ps != 0.0) K.add(a, b, pt * ps);
    }
  }
  K.normalize();
  return K;
}

/// M_h^{k,N} F(x) = int F(x - u t) psi_h(t) dt as a line kernel. Sample positions depend
/// only on (N h, k h), so dilations that preserve u h give identical kernels.
inline GridKernel m_directional_kernel(int G, int k, int N, double h) {
  const double dx = 1.0 / G;
  require(N >= 1 && k >= 0 && k < N, "direction index out of range");
  const double len = h * std::hypot(static_cast<double>(N), static_cast<double>(k));
  require(len >= 0.5 * dx, "directional average below the grid resolution");
  require(4.0 * len <= 0.5, "directional average longer than half the torus");
  const int n = 2 * static_cast<int>(std::ceil(4.0 * len / (0.5 * dx)));
  GridKernel K(G);
  for (int i = 0; i <= n; ++i) {
    const double tau = -2.0 + 4.0 * i / n;
    const double t = h * tau;
    const double wt = avg_bump(tau) * ((i == 0 || i == n) ? 0.5 : 1.0);
    if (wt == 0.0) continue;
    K.splat(static_cast<double>(N) * t / dx, static_cast<double>(k) * t / dx, wt);
  }
  K.normalize();
  return K;
}

inline OpGrid smoothed_avg(const OpGrid& F, int k, int N, double h) { return convolve(F, smoothed_kernel(F.G, k, N, h)); }

inline OpGrid m_directional(const OpGrid& F, int k, int N, double h) {
  return convolve(F, m_directional_kernel(F.G, k, N, h));
}

// ---------------------------------------------------------------------------
// Scalar maximal functions

inline std::vector<double> real_plane(const OpGrid& F) {
  require(F.n == 1, "scalar field expected");
  std::vector<double> out(F.plane_size());
  for (size_t i = 0; i < out.size(); ++i) {
    require(std::abs(F.data[i].imag()) <= 1e-12 * (1.0 + std::abs(F.data[i].real())), "real field expected");
    out[i] = F.data[i].real();
  }
  return out;
}

inline OpGrid from_real_plane(const std::vector<double>& v, int G) {
  OpGrid out(G, 1);
  for (size_t i = 0; i < v.size(); ++i) out.data[i] = v[i];
  return out;
}

/// Distinct rectangle orientations for eccentricity N: k = 0..N-1 under the four
/// reflections that differ modulo pi.
inline std::vector<RectSpec> octant_directions(int N) {
  std::vector<RectSpec> out;
  std::set<long long> seen;
  for (int k = 0; k < N; ++k)
    for (int sym = 0; sym < 4; ++sym) {
      RectSpec r{N, k, 0.0, sym};
      double a = std::fmod(r.angle(), kPi);
      if (a < 0) a += kPi;
      const long long key = std::llround(a * 1e12);
      if (seen.insert(key).second) out.push_back(r);
    }
  return out;
}

/// Dyadic short sides h_min 2^j with N h <= 1/2.
inline std::vector<double> dyadic_scales(int G, int N, double min_cells = kMinShortCells) {
  std::vector<double> out;
  for (double h = min_cells / G; N * h <= 0.5 + 1e-12; h *= 2.0) out.push_back(h);
  return out;
}

/// Pointwise sup over orientations and scales of the rectangle averages of F >= 0.
inline OpGrid scalar_maximal(const OpGrid& F, int N, const std::vector<double>& scales) {
  require(F.n == 1, "scalar_maximal needs a scalar field; matrix maximal norms live in sqmax");
  const std::vector<double> f = real_plane(F);
  for (double v : f) require(v >= -1e-12, "scalar_maximal needs a nonnegative field");
  RealConvolver conv(f, F.G);
  std::vector<double> best(f.size(), -std::numeric_limits<double>::infinity()), tmp;
  for (const RectSpec& base : octant_directions(N))
    for (double h : scales) {
      RectSpec r = base;
      r.h = h;
      conv.apply(rect_kernel(F.G, r), tmp);
      for (size_t i = 0; i < best.size(); ++i) best[i] = std::max(best[i], tmp[i]);
    }
  return from_real_plane(best, F.G);
}

/// Truncated radial power |x - c|^{-power} on inner <= |x - c| <= outer, c the torus center.
inline OpGrid radial_power_field(int G, double inner, double outer, double power = 1.0) {
  OpGrid f(G, 1);
  for (int a = 0; a < G; ++a)
    for (int b = 0; b < G; ++b) {
      const double r = std::hypot(a / static_cast<double>(G) - 0.5, b / static_cast<double>(G) - 0.5);
      if (r >= inner && r <= outer) f.at(0, 0, a, b) = std::pow(r, -power);
    }
  return f;
}

/// Indicator of a centered tube of length len and width len/N along angle a.
inline OpGrid tube_field(int G, double len, int N, double a) {
  const GridKernel K = rect_kernel_cells(G, len * G, len * G / N, a);
  OpGrid f(G, 1);
  const double peak = *std::max_element(K.w.begin(), K.w.end());
  for (int x = 0; x < G; ++x)
    for (int y = 0; y < G; ++y) f.at(0, 0, (x + G / 2) % G, (y + G / 2) % G) = K.w[static_cast<size_t>(x) * G + y] / peak;
  return f;
}

/// Union of N tubes through the center at the angles k pi / N.
inline OpGrid besicovitch_field(int G, double len, int N) {
  OpGrid f(G, 1);
  for (int k = 0; k < N; ++k) {
    const OpGrid t = tube_field(G, len, N, kPi * k / N);
    for (size_t i = 0; i < f.data.size(); ++i) f.data[i] = std::max(f.data[i].real(), t.data[i].real());
  }
  return f;
}

struct ScalingRow {
  int N = 0;
  double ratio = 0.0;        // sup over the family of ||M f||_2 / ||f||_2
  std::string best_member;
  double trivial_margin = 0.0;  // N^{1/2}
};

struct LinearFit {
  double a = 0.0, b = 0.0, r2 = 0.0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "fit needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.b = sxy / sxx;
  f.a = my - f.b * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

struct ScalingReport {
  std::vector<ScalingRow> rows;
  LinearFit log_fit;    // ratio = a + b log2 N
  LinearFit power_fit;  // log ratio = log a' + c log N
};

/// Family members are generated per N by make_family(N).
template <class MakeFamily>
ScalingReport kakeya_norm_scaling(const std::vector<int>& Ns, int G, MakeFamily&& make_family) {
  ScalingReport rep;
  std::vector<double> lx, ly, px, py;
  for (int N : Ns) {
    ScalingRow row;
    row.N = N;
    row.trivial_margin = std::sqrt(static_cast<double>(N));
    for (const FamilyMember& mem : make_family(N)) {
      const double base = lp_norm_grid(mem.f, 2);
      if (!(base > 0)) continue;
      const double r = lp_norm_grid(scalar_maximal(mem.f, N, dyadic_scales(G, N)), 2) / base;
      if (r > row.ratio) {
        row.ratio = r;
        row.best_member = mem.id;
      }
    }
    rep.rows.push_back(row);
    lx.push_back(std::log2(static_cast<double>(N)));
    ly.push_back(row.ratio);
    px.push_back(std::log(static_cast<double>(N)));
    py.push_back(std::log(row.ratio));
  }
  if (Ns.size() >= 2) {
    rep.log_fit = fit_line(lx, ly);
    rep.power_fit = fit_line(px, py);
    rep.power_fit.a = std::exp(rep.power_fit.a);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sector split and the induction inequality

struct SectorPiece {
  OpGrid f;  // frequency restriction to Gamma_{2l+1} union Gamma_{2l}
  OpGrid r;  // remainder
};

inline std::vector<SectorPiece> sector_split(const OpGrid& F, int m) {
  require(F.domain == Domain::torus, "sector_split expects a torus grid");
  require(F.G >= (1 << (m + 4)), "grid does not resolve the angular sectors");
  const SectorSet sec(m);
  std::vector<SectorPiece> out;
  for (long l = 0; l < (1L << (m - 1)); ++l) {
    const MultiplierFn chi{[&sec, l](double x, double y) {
                             return cplx((sec.contains(2 * l + 1, x, y) || sec.contains(2 * l, x, y)) ? 1.0 : 0.0);
                           },
                           "sector"};
    const std::vector<cplx> tab = tabulate(chi, F);
    OpGrid fl = apply_table(F, tab);
    out.push_back({fl, F - fl});
  }
  return out;
}

/// ||sup_{k < N, j} M_{2^j}^{k,N} f||_2 / ||f||_2 over the dyadic scales the grid resolves.
inline double directional_sup_ratio(const OpGrid& F, int N) {
  const std::vector<double> f = real_plane(F);
  RealConvolver conv(f, F.G);
  std::vector<double> best(f.size(), -std::numeric_limits<double>::infinity()), tmp;
  const double dx = 1.0 / F.G;
  for (int k = 0; k < N; ++k) {
    const double un = std::hypot(static_cast<double>(N), static_cast<double>(k));
    for (int j = -60; j < 0; ++j) {
      const double h = std::ldexp(1.0, j);
      const double len = h * un;
      if (len < 0.5 * dx || 4.0 * len > 0.5) continue;
      conv.apply(m_directional_kernel(F.G, k, N, h), tmp);
      for (size_t i = 0; i < best.size(); ++i) best[i] = std::max(best[i], tmp[i]);
    }
  }
  double num = 0, den = 0;
  for (size_t i = 0; i < f.size(); ++i) {
    num += best[i] * best[i];
    den += f[i] * f[i];
  }
  return std::sqrt(num / den);
}

struct KeyInequalityRow {
  int m = 0;
  double lhs = 0.0, rhs = 0.0, gap = 0.0;
};

inline KeyInequalityRow key_inequality_probe(int m, const OpGrid& F) {
  require(m >= 1, "m must be positive");
  KeyInequalityRow row;
  row.m = m;
  row.lhs = directional_sup_ratio(F, 1 << m);
  row.rhs = directional_sup_ratio(F, 1 << (m - 1));
  row.gap = row.lhs - row.rhs;
  return row;
}

}  // namespace ncflab

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ncflab/error.hpp"
#include "ncflab/fft.hpp"
#include "ncflab/ncmat.hpp"
#include "ncflab/qtorus.hpp"

namespace ncflab {

enum class Domain { torus = 0, box = 1 };

/// Matrix-valued samples on a G x G grid. Storage is plane-major: entry (i, j)
/// of every sample forms one contiguous G x G plane, x-major within the plane.
/// Torus samples sit at x = (a, b)/G; box samples at -L/2 + (a, b) L/G.
struct OpGrid {
  int G = 0;
  int n = 0;
  Domain domain = Domain::torus;
  double L = 1.0;
  std::vector<cplx> data;

  OpGrid() = default;
  OpGrid(int g, int dim, Domain d = Domain::torus, double len = 1.0)
      : G(g), n(dim), domain(d), L(d == Domain::torus ? 1.0 : len) {
    require(fft::is_pow2(g), "grid size must be a power of two");
    require(dim >= 1, "matrix dimension must be positive");
    require(L > 0, "box length must be positive");
    data.assign(static_cast<size_t>(n) * n * G * G, cplx(0.0));
  }

  size_t plane_size() const { return static_cast<size_t>(G) * G; }
  cplx* plane(int i, int j) { return data.data() + (static_cast<size_t>(i) * n + j) * plane_size(); }
  const cplx* plane(int i, int j) const { return data.data() + (static_cast<size_t>(i) * n + j) * plane_size(); }

  cplx& at(int i, int j, int a, int b) { return plane(i, j)[static_cast<size_t>(a) * G + b]; }
  cplx at(int i, int j, int a, int b) const { return plane(i, j)[static_cast<size_t>(a) * G + b]; }

  MatElem sample(int a, int b) const {
    MatElem m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = at(i, j, a, b);
    return m;
  }

  void set_sample(int a, int b, const MatElem& m) {
    require(m.rows() == n && m.cols() == n, "sample shape mismatch");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) at(i, j, a, b) = m(i, j);
  }

  double spacing() const { return L / G; }
  double cell_area() const { return spacing() * spacing(); }
  /// Physical coordinate of index a along either axis.
  double coord(int a) const { return domain == Domain::torus ? a * spacing() : -0.5 * L + a * spacing(); }
  /// Frequency of index j: integer on the torus, j/L on the box.
  double freq(int j) const { return fft::signed_freq(j, G) / L; }

  bool same_shape(const OpGrid& o) const { return G == o.G && n == o.n && domain == o.domain && L == o.L; }
};

inline OpGrid operator-(const OpGrid& a, const OpGrid& b) {
  require(a.same_shape(b), "grid shape mismatch");
  OpGrid out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

inline double max_abs_diff(const OpGrid& a, const OpGrid& b) {
  require(a.same_shape(b), "grid shape mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

/// Unitary 2D DFT of every entry plane. Frequency index j stands for signed_freq(j).
inline OpGrid op_fft(const OpGrid& f) {
  OpGrid out = f;
  fft::dft2(out.data.data(), f.G, f.G, f.n * f.n, -1);
  const double s = 1.0 / f.G;
  for (auto& v : out.data) v *= s;
  return out;
}

inline OpGrid op_ifft(const OpGrid& fh) {
  OpGrid out = fh;
  fft::dft2(out.data.data(), fh.G, fh.G, fh.n * fh.n, +1);
  const double s = 1.0 / fh.G;
  for (auto& v : out.data) v *= s;
  return out;
}

/// Scalar symbol on frequency space. On the torus xi is integer; on the box xi = m/L.
struct MultiplierFn {
  std::function<cplx(double, double)> eval;
  std::string tag;
};

/// Tabulates the symbol on the grid's frequency set.
inline std::vector<cplx> tabulate(const MultiplierFn& m, const OpGrid& f) {
  std::vector<cplx> tab(f.plane_size());
  for (int a = 0; a < f.G; ++a)
    for (int b = 0; b < f.G; ++b) {
      const cplx v = m.eval(f.freq(a), f.freq(b));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw invalid_input("multiplier '" + m.tag + "' is not finite on the grid");
      tab[static_cast<size_t>(a) * f.G + b] = v;
    }
  return tab;
}

inline OpGrid apply_table(const OpGrid& f, const std::vector<cplx>& tab) {
  require(tab.size() == f.plane_size(), "multiplier table size mismatch");
  OpGrid out = f;
  fft::dft2(out.data.data(), f.G, f.G, f.n * f.n, -1);
  const double s = 1.0 / (static_cast<double>(f.G) * f.G);
  const size_t ps = f.plane_size();
  for (size_t pl = 0; pl < static_cast<size_t>(f.n) * f.n; ++pl)
    for (size_t i = 0; i < ps; ++i) out.data[pl * ps + i] *= tab[i] * s;
  fft::dft2(out.data.data(), f.G, f.G, f.n * f.n, +1);
  return out;
}

inline OpGrid apply_multiplier(const OpGrid& f, const MultiplierFn& m) { return apply_table(f, tabulate(m, f)); }

inline MultiplierFn riesz_multiplier(double R, cplx lambda) {
  require(R > 0, "R must be positive");
  require(lambda.real() >= 0, "Re lambda must be nonnegative");
  return {[R, lambda](double x, double y) { return riesz_symbol((x * x + y * y) / (R * R), lambda); },
          "riesz"};
}

inline OpGrid bochner_riesz_grid(const OpGrid& f, double R, cplx lambda) {
  return apply_multiplier(f, riesz_multiplier(R, lambda));
}

/// (sum_x tau |F(x)|^p cellArea)^(1/p); p = inf gives the max operator norm.
inline double lp_norm_grid(const OpGrid& f, double p) {
  require(p >= 1.0, "p must be >= 1");
  const double area = f.cell_area();
  if (f.n == 1) {
    const cplx* d = f.data.data();
    const size_t ps = f.plane_size();
    if (std::isinf(p)) {
      double m = 0.0;
      for (size_t i = 0; i < ps; ++i) m = std::max(m, std::abs(d[i]));
      return m;
    }
    double acc = 0.0;
    if (p == 2.0) {
      for (size_t i = 0; i < ps; ++i) acc += std::norm(d[i]);
    } else if (p == 4.0) {
      for (size_t i = 0; i < ps; ++i) {
        const double t = std::norm(d[i]);
        acc += t * t;
      }
    } else {
      for (size_t i = 0; i < ps; ++i) acc += std::pow(std::abs(d[i]), p);
    }
    return std::pow(acc * area, 1.0 / p);
  }
  if (p == 2.0) {
    double acc = 0.0;
    for (const auto& v : f.data) acc += std::norm(v);
    return std::sqrt(acc * area / f.n);
  }
  double acc = 0.0, sup = 0.0;
  for (int a = 0; a < f.G; ++a)
    for (int b = 0; b < f.G; ++b) {
      const RVec s = singular_values(f.sample(a, b));
      if (std::isinf(p)) {
        sup = std::max(sup, s.maxCoeff());
      } else {
        double t = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) t += std::pow(s[i], p);
        acc += t / f.n;
      }
    }
  if (std::isinf(p)) return sup;
  return std::pow(acc * area, 1.0 / p);
}

/// L2 norm of a frequency-side grid with the unitary normalization of op_fft,
/// scaled so that it equals lp_norm_grid(f, 2) by Plancherel.
inline double l2_norm_freq(const OpGrid& fh) {
  double acc = 0.0;
  for (const auto& v : fh.data) acc += std::norm(v);
  return std::sqrt(acc * fh.cell_area() / fh.n);
}

/// sum_x tr(g(x)* f(x)) dx; the normalized trace is not used here so that the
/// frequency-side pairing uses the same weight.
inline cplx pairing(const OpGrid& g, const OpGrid& f) {
  require(g.same_shape(f), "grid shape mismatch");
  cplx acc = 0.0;
  // tr(g* f) = sum_{i,j} conj(g_ij) f_ij
  for (size_t i = 0; i < f.data.size(); ++i) acc += std::conj(g.data[i]) * f.data[i];
  return acc * f.cell_area();
}

/// Frequency-side pairing sum_xi tr(gh* fh) dxi for grids produced by op_fft.
/// With unitary sampling normalization the weight matches the space side.
inline cplx pairing_freq(const OpGrid& gh, const OpGrid& fh) { return pairing(gh, fh); }

// ---------------------------------------------------------------------------
// Ratio sweeps

struct RatioRow {
  std::string family_id;
  double R = 0.0;
  double ratio = 0.0;
  double error_norm = 0.0;
};

struct FamilyMember {
  std::string id;
  OpGrid f;
};

struct SweepResult {
  std::vector<RatioRow> rows;
  std::vector<std::string> warnings;
};

/// Ratios ||B_R f||_p / ||f||_p and defects ||B_R f - f||_p for each member and R.
inline SweepResult riesz_ratio_sweep(const std::vector<FamilyMember>& family, double p, cplx lambda,
                                     const std::vector<double>& Rs) {
  SweepResult out;
  for (const auto& mem : family) {
    const double base = lp_norm_grid(mem.f, p);
    if (!(base > 0.0)) {
      out.warnings.push_back("skipped zero-norm member " + mem.id);
      continue;
    }
    for (double R : Rs) {
      OpGrid b = bochner_riesz_grid(mem.f, R, lambda);
      const double nb = lp_norm_grid(b, p);
      const double ne = lp_norm_grid(b - mem.f, p);
      out.rows.push_back({mem.id, R, nb / base, ne});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quantum-torus transference

/// x -> rho_x(f) sampled at x = (a, b)/G; the m-th matrix Fourier coefficient is alpha_m C^{m1} S^{m2}.
inline OpGrid transfer_tilde(const QTorusPoly& f, int gridG, int amplify = 1) {
  require(fft::is_pow2(gridG), "grid size must be a power of two");
  require(2 * f.max_abs_index() < gridG, "polynomial support does not fit the frequency window");
  const int d = static_cast<int>(f.angle.q * amplify);
  // Build in frequency space: coefficient plane entries then inverse DFT.
  OpGrid fh(gridG, d);
  for (const auto& [k, c] : f.coeffs) {
    const MatElem u = clock_shift_power(f.angle, k, amplify);
    const int a = fft::wrap_index(k.first, gridG), b = fft::wrap_index(k.second, gridG);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) fh.at(i, j, a, b) += c * u(i, j);
  }
  // Coefficients c_m relate to samples by F(x) = sum_m c_m e^{2 pi i m.x}.
  fft::dft2(fh.data.data(), gridG, gridG, d * d, +1);
  return fh;
}

/// Inverse of transfer_tilde: alpha_m = tau_q((C^{m1} S^{m2})* c_m).
inline QTorusPoly pull_back(const OpGrid& F, RationalAngle angle, double drop_below = 0.0) {
  require(F.domain == Domain::torus, "pull_back expects a torus grid");
  require(F.n % angle.q == 0, "grid matrix size is not a multiple of q");
  const int amplify = static_cast<int>(F.n / angle.q);
  OpGrid ch = F;
  fft::dft2(ch.data.data(), F.G, F.G, F.n * F.n, -1);
  const double s = 1.0 / (static_cast<double>(F.G) * F.G);
  QTorusPoly out(angle);
  for (int a = 0; a < F.G; ++a)
    for (int b = 0; b < F.G; ++b) {
      const Index2 m{fft::signed_freq(a, F.G), fft::signed_freq(b, F.G)};
      const MatElem u = clock_shift_power(angle, m, amplify);
      cplx acc = 0.0;
      for (int i = 0; i < F.n; ++i)
        for (int j = 0; j < F.n; ++j) acc += std::conj(u(i, j)) * ch.at(i, j, a, b);
      acc *= s / F.n;
      if (std::abs(acc) > drop_below) out.coeffs[m] = acc;
    }
  return out;
}

/// Applies {m(z)} on the torus and m on a P-periodic box tiling of F, then
/// restricts the box result to one period. Returns the max entrywise gap.
inline double transference_check(const MultiplierFn& m, const OpGrid& F, int periods = 2,
                                 double alias_tol = 1e-10) {
  require(F.domain == Domain::torus, "transference_check expects a torus grid");
  require(periods >= 1 && fft::is_pow2(periods), "periods must be a power of two");
  // Band limit: energy on the Nyquist lines cannot be represented consistently.
  OpGrid fh = op_fft(F);
  double total = 0.0, nyq = 0.0;
  const int h = F.G / 2;
  for (int i = 0; i < F.n; ++i)
    for (int j = 0; j < F.n; ++j)
      for (int a = 0; a < F.G; ++a)
        for (int b = 0; b < F.G; ++b) {
          const double e = std::norm(fh.at(i, j, a, b));
          total += e;
          if (a == h || b == h) nyq += e;
        }
  if (nyq > alias_tol * alias_tol * std::max(total, 1e-300))
    throw invalid_input("grid function is not band-limited inside the box window");

  const OpGrid torus_out = apply_multiplier(F, m);

  const int Gb = F.G * periods;
  const double L = periods;
  OpGrid box(Gb, F.n, Domain::box, L);
  // Box index a sits at -L/2 + a/G; with L even this is an integer shift of the torus lattice.
  const int shift = fft::wrap_index(-static_cast<long>(periods / 2) * F.G, F.G);
  for (int i = 0; i < F.n; ++i)
    for (int j = 0; j < F.n; ++j)
      for (int a = 0; a < Gb; ++a)
        for (int b = 0; b < Gb; ++b)
          box.at(i, j, a, b) = F.at(i, j, (a + shift) % F.G, (b + shift) % F.G);
  const OpGrid box_out = apply_multiplier(box, m);

  double gap = 0.0;
  for (int i = 0; i < F.n; ++i)
    for (int j = 0; j < F.n; ++j)
      for (int a = 0; a < Gb; ++a)
        for (int b = 0; b < Gb; ++b)
          gap = std::max(gap,
                         std::abs(box_out.at(i, j, a, b) - torus_out.at(i, j, (a + shift) % F.G, (b + shift) % F.G)));
  return gap;
}

// ---------------------------------------------------------------------------
// Families

/// Zeroes every frequency with |m_i| >= cut on either axis.
inline OpGrid band_limit(const OpGrid& f, int cut) {
  OpGrid fh = op_fft(f);
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j)
      for (int a = 0; a < f.G; ++a)
        for (int b = 0; b < f.G; ++b)
          if (std::abs(fft::signed_freq(a, f.G)) >= cut || std::abs(fft::signed_freq(b, f.G)) >= cut)
            fh.at(i, j, a, b) = 0.0;
  return op_ifft(fh);
}

/// Focusing ring: unimodular coefficients on R - w < |m| <= R + w, all in phase at the origin.
inline OpGrid ring_sum(int G, double R, double width = 1.0) {
  OpGrid fh(G, 1);
  for (int a = 0; a < G; ++a)
    for (int b = 0; b < G; ++b) {
      const double r = std::hypot(fft::signed_freq(a, G), fft::signed_freq(b, G));
      if (r > R - width && r <= R + width) fh.at(0, 0, a, b) = 1.0;
    }
  return op_ifft(fh);
}

/// |K|^{1/3} sgn K for the torus kernel K of B_R^lambda (the L4 dual extremizer
/// shape), band-limited to half the window.
inline OpGrid riesz_dual_extremizer(int G, double R, cplx lambda) {
  OpGrid delta(G, 1);
  delta.at(0, 0, 0, 0) = 1.0;
  OpGrid k = bochner_riesz_grid(delta, R, lambda);
  OpGrid f(G, 1);
  for (size_t i = 0; i < k.data.size(); ++i) {
    const double v = k.data[i].real();
    f.data[i] = std::copysign(std::cbrt(std::abs(v)), v);
  }
  return band_limit(f, G / 4);
}

/// Gaussian matrix coefficients on |m_i| < K, normalized in L2.
inline OpGrid random_matrix_field(int G, int n, int K, std::mt19937_64& rng) {
  require(2 * K <= G, "band too wide for the grid");
  std::normal_distribution<double> nd(0.0, 1.0);
  OpGrid fh(G, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int m1 = -K + 1; m1 < K; ++m1)
        for (int m2 = -K + 1; m2 < K; ++m2)
          fh.at(i, j, fft::wrap_index(m1, G), fft::wrap_index(m2, G)) = cplx(nd(rng), nd(rng));
  OpGrid f = op_ifft(fh);
  const double s = lp_norm_grid(f, 2);
  for (auto& v : f.data) v /= s;
  return f;
}

/// diag(f_1, ..., f_n) from scalar grids.
inline OpGrid diagonal_embedding(const std::vector<OpGrid>& scalars) {
  require(!scalars.empty(), "empty embedding");
  const int G = scalars[0].G;
  const int n = static_cast<int>(scalars.size());
  OpGrid out(G, n, scalars[0].domain, scalars[0].L);
  for (int i = 0; i < n; ++i) {
    require(scalars[i].G == G && scalars[i].n == 1, "embedding expects scalar grids of equal size");
    std::copy(scalars[i].data.begin(), scalars[i].data.end(), out.plane(i, i));
  }
  return out;
}

inline OpGrid conj_grid(const OpGrid& f) {
  OpGrid out = f;
  for (auto& v : out.data) v = std::conj(v);
  return out;
}

}  // namespace ncflab

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "ncflab/error.hpp"
#include "ncflab/ncmat.hpp"

namespace ncflab {

using Index2 = std::pair<long, long>;

/// theta = p/q in lowest terms, q >= 1.
struct RationalAngle {
  long p = 0;
  long q = 1;

  RationalAngle() = default;
  RationalAngle(long p_, long q_) : p(p_), q(q_) {
    require(q != 0, "angle denominator must be nonzero");
    if (q < 0) {
      p = -p;
      q = -q;
    }
    const long g = std::gcd(p < 0 ? -p : p, q);
    if (g > 1) {
      p /= g;
      q /= g;
    }
  }

  double value() const { return static_cast<double>(p) / static_cast<double>(q); }

  /// e^{2 pi i theta n}, reduced exactly modulo q before the exponential.
  cplx phase(long n) const {
    long r = ((p % q) * (n % q)) % q;
    if (r < 0) r += q;
    const double a = 2.0 * kPi * static_cast<double>(r) / static_cast<double>(q);
    return {std::cos(a), std::sin(a)};
  }

  bool operator==(const RationalAngle& o) const { return p == o.p && q == o.q; }
};

/// Finite sum of alpha_k U1^{k1} U2^{k2}.
struct QTorusPoly {
  RationalAngle angle;
  std::map<Index2, cplx> coeffs;

  QTorusPoly() = default;
  explicit QTorusPoly(RationalAngle a) : angle(a) {}

  static QTorusPoly monomial(RationalAngle a, Index2 k, cplx c = 1.0) {
    QTorusPoly f(a);
    f.coeffs[k] = c;
    return f;
  }

  cplx coeff(Index2 k) const {
    auto it = coeffs.find(k);
    return it == coeffs.end() ? cplx(0.0) : it->second;
  }

  void add(Index2 k, cplx c) {
    auto& slot = coeffs[k];
    slot += c;
  }

  /// max over axes of (max k_i - min k_i); 0 for empty or constant.
  long support_diameter() const {
    if (coeffs.empty()) return 0;
    long lo1 = coeffs.begin()->first.first, hi1 = lo1;
    long lo2 = coeffs.begin()->first.second, hi2 = lo2;
    for (const auto& [k, c] : coeffs) {
      lo1 = std::min(lo1, k.first);
      hi1 = std::max(hi1, k.first);
      lo2 = std::min(lo2, k.second);
      hi2 = std::max(hi2, k.second);
    }
    return std::max(hi1 - lo1, hi2 - lo2);
  }

  long max_abs_index() const {
    long m = 0;
    for (const auto& [k, c] : coeffs) m = std::max({m, std::abs(k.first), std::abs(k.second)});
    return m;
  }

  double coeff_l2() const {
    double s = 0.0;
    for (const auto& [k, c] : coeffs) s += std::norm(c);
    return std::sqrt(s);
  }
};

// Algebra. U^k U^m = w^{-k2 m1} U^{k+m} and (U^k)* = w^{-k1 k2} U^{-k}, w = e^{2 pi i theta}.

inline QTorusPoly operator+(const QTorusPoly& a, const QTorusPoly& b) {
  require(a.angle == b.angle, "angle mismatch");
  QTorusPoly out = a;
  for (const auto& [k, c] : b.coeffs) out.add(k, c);
  return out;
}

inline QTorusPoly operator-(const QTorusPoly& a, const QTorusPoly& b) {
  require(a.angle == b.angle, "angle mismatch");
  QTorusPoly out = a;
  for (const auto& [k, c] : b.coeffs) out.add(k, -c);
  return out;
}

inline QTorusPoly operator*(cplx s, const QTorusPoly& a) {
  QTorusPoly out = a;
  for (auto& [k, c] : out.coeffs) c *= s;
  return out;
}

inline QTorusPoly operator*(const QTorusPoly& a, const QTorusPoly& b) {
  require(a.angle == b.angle, "angle mismatch");
  QTorusPoly out(a.angle);
  for (const auto& [k, ck] : a.coeffs)
    for (const auto& [m, cm] : b.coeffs)
      out.add({k.first + m.first, k.second + m.second}, ck * cm * a.angle.phase(-k.second * m.first));
  return out;
}

inline QTorusPoly adjoint(const QTorusPoly& a) {
  QTorusPoly out(a.angle);
  for (const auto& [k, c] : a.coeffs)
    out.add({-k.first, -k.second}, std::conj(c) * a.angle.phase(-k.first * k.second));
  return out;
}

/// tau(f) = alpha_0.
inline cplx trace(const QTorusPoly& f) { return f.coeff({0, 0}); }

/// tau((U^m)* f), evaluated through the algebra rather than read off the map.
inline cplx fourier_coeff(const QTorusPoly& f, Index2 m) {
  return trace(adjoint(QTorusPoly::monomial(f.angle, m)) * f);
}

/// Clock C = diag(w^j) and shift S e_j = e_{j+1} of size amplify*q, so C S = w S C.
struct ClockShift {
  MatElem u1;
  MatElem u2;
};

inline ClockShift clock_shift_rep(const RationalAngle& a, int amplify = 1) {
  require(amplify >= 1, "amplification factor must be positive");
  const long d = a.q * amplify;
  ClockShift cs{MatElem::Zero(d, d), MatElem::Zero(d, d)};
  for (long j = 0; j < d; ++j) {
    cs.u1(j, j) = a.phase(j);
    cs.u2((j + 1) % d, j) = 1.0;
  }
  return cs;
}

namespace detail {

/// Adds c * C^{a} S^{b} (dimension d) into out.
inline void add_clock_shift_power(MatElem& out, const RationalAngle& ang, long a, long b, cplx c) {
  const long d = out.rows();
  long bs = b % d;
  if (bs < 0) bs += d;
  for (long j = 0; j < d; ++j) {
    const long i = (j + bs) % d;
    out(i, j) += c * ang.phase(a * i);
  }
}

}  // namespace detail

/// Matrix of C^{k1} S^{k2}.
inline MatElem clock_shift_power(const RationalAngle& a, Index2 k, int amplify = 1) {
  const long d = a.q * amplify;
  MatElem out = MatElem::Zero(d, d);
  detail::add_clock_shift_power(out, a, k.first, k.second, 1.0);
  return out;
}

/// rho_x(f) = sum_k alpha_k e^{2 pi i x.k} C^{k1} S^{k2}.
inline MatElem twisted_rep(const QTorusPoly& f, double x1, double x2, int amplify = 1) {
  const long d = f.angle.q * amplify;
  MatElem out = MatElem::Zero(d, d);
  for (const auto& [k, c] : f.coeffs) {
    const double ph = 2.0 * kPi * (x1 * static_cast<double>(k.first) + x2 * static_cast<double>(k.second));
    detail::add_clock_shift_power(out, f.angle, k.first, k.second, c * cplx(std::cos(ph), std::sin(ph)));
  }
  return out;
}

/// Coefficientwise (1 - |m/R|^2)_+^lambda.
inline cplx riesz_symbol(double r2_over_R2, cplx lambda) {
  if (r2_over_R2 >= 1.0) return 0.0;
  if (lambda == cplx(0.0)) return 1.0;
  return std::exp(lambda * std::log1p(-r2_over_R2));
}

/// riesz_symbol minus one, without cancellation near the origin.
inline cplx riesz_symbol_minus_one(double r2_over_R2, cplx lambda) {
  if (r2_over_R2 >= 1.0) return -1.0;
  if (lambda == cplx(0.0)) return 0.0;
  const cplx z = lambda * std::log1p(-r2_over_R2);
  if (std::abs(z) < 1e-3) {
    // expm1 for complex argument via series; |z| small
    cplx term = z, sum = z;
    for (int n = 2; n < 12; ++n) {
      term *= z / static_cast<double>(n);
      sum += term;
    }
    return sum;
  }
  return std::exp(z) - 1.0;
}

inline QTorusPoly bochner_riesz_qt(const QTorusPoly& f, double R, cplx lambda) {
  require(R > 0, "R must be positive");
  require(lambda.real() >= 0, "Re lambda must be nonnegative");
  QTorusPoly out(f.angle);
  for (const auto& [k, c] : f.coeffs) {
    const double r2 = static_cast<double>(k.first * k.first + k.second * k.second) / (R * R);
    const cplx m = riesz_symbol(r2, lambda);
    if (m != cplx(0.0)) out.coeffs[k] = c * m;
  }
  return out;
}

/// B_R^lambda f - f, computed coefficientwise so that small differences keep full relative precision.
inline QTorusPoly bochner_riesz_qt_defect(const QTorusPoly& f, double R, cplx lambda) {
  require(R > 0, "R must be positive");
  QTorusPoly out(f.angle);
  for (const auto& [k, c] : f.coeffs) {
    const double r2 = static_cast<double>(k.first * k.first + k.second * k.second) / (R * R);
    out.coeffs[k] = c * riesz_symbol_minus_one(r2, lambda);
  }
  return out;
}

inline QTorusPoly pi_x(const QTorusPoly& f, double x1, double x2) {
  QTorusPoly out = f;
  for (auto& [k, c] : out.coeffs) {
    const double ph = 2.0 * kPi * (x1 * static_cast<double>(k.first) + x2 * static_cast<double>(k.second));
    c *= cplx(std::cos(ph), std::sin(ph));
  }
  return out;
}

/// (M^-2 sum_x tau_q |rho_x(f)|^p)^(1/p) over an M x M grid of the torus.
inline double lp_norm_qt(const QTorusPoly& f, double p, int gridM, int amplify = 1) {
  require(p >= 1.0, "p must be >= 1");
  require(amplify >= 1, "amplification factor must be positive");
  require(gridM >= 2 * f.support_diameter() + 1, "gridM too small for the support diameter");
  // Grid points are x = (a, b)/M, so every phase is an M-th or q-th root of unity.
  std::vector<cplx> rootM(static_cast<size_t>(gridM));
  for (int i = 0; i < gridM; ++i) {
    const double ang = 2.0 * kPi * i / gridM;
    rootM[static_cast<size_t>(i)] = {std::cos(ang), std::sin(ang)};
  }
  const long q = f.angle.q;
  std::vector<cplx> rootQ(static_cast<size_t>(q));
  for (long i = 0; i < q; ++i) {
    const double ang = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(q);
    rootQ[static_cast<size_t>(i)] = {std::cos(ang), std::sin(ang)};
  }
  const long d = q * amplify;
  auto mod = [](long v, long m) {
    const long r = v % m;
    return r < 0 ? r + m : r;
  };
  double acc = 0.0;
  double sup = 0.0;
  MatElem r(d, d);
  for (int a = 0; a < gridM; ++a)
    for (int b = 0; b < gridM; ++b) {
      r.setZero();
      for (const auto& [k, c] : f.coeffs) {
        const cplx ck = c * rootM[static_cast<size_t>(mod(a * k.first + b * k.second, gridM))];
        const long bs = mod(k.second, d);
        for (long j = 0; j < d; ++j) {
          const long i = (j + bs) % d;
          r(i, j) += ck * rootQ[static_cast<size_t>(mod(f.angle.p * mod(k.first * i, q), q))];
        }
      }
      if (p == 2.0) {
        acc += r.squaredNorm() / static_cast<double>(d);
      } else if (std::isinf(p)) {
        sup = std::max(sup, op_norm(r));
      } else {
        const RVec s = singular_values(r);
        double t = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) t += std::pow(s[i], p);
        acc += t / static_cast<double>(s.size());
      }
    }
  if (std::isinf(p)) return sup;
  return std::pow(acc / (static_cast<double>(gridM) * gridM), 1.0 / p);
}

/// Gaussian coefficients on the box [-K, K]^2.
inline QTorusPoly random_qtorus_poly(RationalAngle a, int K, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  QTorusPoly f(a);
  for (long k1 = -K; k1 <= K; ++k1)
    for (long k2 = -K; k2 <= K; ++k2) f.coeffs[{k1, k2}] = cplx(nd(rng), nd(rng));
  return f;
}

}  // namespace ncflab

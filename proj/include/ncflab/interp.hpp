#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "ncflab/error.hpp"
#include "ncflab/ncmat.hpp"

namespace ncflab {

/// Default ceiling on the Gaussian growth rate beta in C e^{beta y^2}.
inline constexpr double kGaussianBetaLimit = kPi * kPi / 2.0;

/// Positive boundary majorant y -> M(y) on a line of the strip.
struct BoundaryMajorant {
  enum class Kind { constant, poly, gaussian, tabulated };

  Kind kind = Kind::constant;
  double C = 1.0;      // constant value, or the prefactor
  double alpha = 0.0;  // poly exponent
  double beta = 0.0;   // gaussian rate
  std::vector<double> ys, values;  // tabulated samples; log M is linear in between and flat outside

  static BoundaryMajorant constant(double c) { return {Kind::constant, c}; }
  static BoundaryMajorant poly(double c, double a) { return {Kind::poly, c, a}; }
  static BoundaryMajorant gaussian(double c, double b) { return {Kind::gaussian, c, 0.0, b}; }
  static BoundaryMajorant tabulated(std::vector<double> y, std::vector<double> v) {
    BoundaryMajorant m;
    m.kind = Kind::tabulated;
    m.ys = std::move(y);
    m.values = std::move(v);
    return m;
  }

  void validate(double beta_limit = kGaussianBetaLimit) const {
    switch (kind) {
      case Kind::constant:
      case Kind::poly:
        require(C > 0 && std::isfinite(C) && std::isfinite(alpha), "majorant parameters must be finite and C > 0");
        break;
      case Kind::gaussian:
        require(C > 0 && std::isfinite(C), "majorant prefactor must be positive");
        if (!(beta < beta_limit)) throw invalid_input("gaussian growth rate exceeds the admissibility margin");
        break;
      case Kind::tabulated:
        require(ys.size() >= 2 && ys.size() == values.size(), "tabulated majorant needs matching samples");
        require(std::is_sorted(ys.begin(), ys.end()), "tabulated abscissae must be sorted");
        for (double v : values) require(v > 0 && std::isfinite(v), "tabulated majorant must be positive");
        break;
    }
  }

  double log_value(double y) const {
    switch (kind) {
      case Kind::constant: return std::log(C);
      case Kind::poly: return std::log(C) + alpha * std::log1p(std::abs(y));
      case Kind::gaussian: return std::log(C) + beta * y * y;
      case Kind::tabulated: {
        if (y <= ys.front()) return std::log(values.front());
        if (y >= ys.back()) return std::log(values.back());
        const auto it = std::upper_bound(ys.begin(), ys.end(), y);
        const size_t i = static_cast<size_t>(it - ys.begin());
        const double w = (y - ys[i - 1]) / (ys[i] - ys[i - 1]);
        return (1 - w) * std::log(values[i - 1]) + w * std::log(values[i]);
      }
    }
    return 0.0;
  }

  /// |log M(y)| <= c[0] + c[1] |y| + c[2] y^2.
  std::array<double, 3> log_growth() const {
    switch (kind) {
      case Kind::constant: return {std::abs(std::log(C)), 0.0, 0.0};
      case Kind::poly: return {std::abs(std::log(C)), std::abs(alpha), 0.0};
      case Kind::gaussian: return {std::abs(std::log(C)), 0.0, std::abs(beta)};
      case Kind::tabulated: {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(std::log(v)));
        return {m, 0.0, 0.0};
      }
    }
    return {0.0, 0.0, 0.0};
  }
};

namespace detail {

/// Bound on int_Y^inf (c0 + c1 y + c2 y^2) * 4 e^{-pi y} dy.
inline double strip_tail(const std::array<double, 3>& c, double Y) {
  const double e = std::exp(-kPi * Y);
  const double I0 = e / kPi;
  const double I1 = e * (Y / kPi + 1.0 / (kPi * kPi));
  const double I2 = e * (Y * Y / kPi + 2.0 * Y / (kPi * kPi) + 2.0 / (kPi * kPi * kPi));
  return 4.0 * (c[0] * I0 + c[1] * I1 + c[2] * I2);
}

struct StripIntegral {
  double value = 0.0;
  double quad_error = 0.0;
  double tail_bound = 0.0;
  double Y = 0.0;
};

/// (sin pi t)/2 int [L0(y)/(cosh pi y - cos pi t) + L1(y)/(cosh pi y + cos pi t)] dy,
/// truncated at |y| = Y with Y doubled until the closed-form tail bound is below tail_tol.
inline StripIntegral strip_exponent(const std::function<double(double)>& L0, const std::function<double(double)>& L1,
                                    const std::array<double, 3>& g0, const std::array<double, 3>& g1, double t,
                                    double tail_tol = 1e-12) {
  require(t > 0.0 && t < 1.0, "t must lie in (0, 1)");
  const double pref = 0.5 * std::sin(kPi * t);
  StripIntegral out;
  double Y = 4.0;
  // two sides, prefactor sin(pi t)/2
  while (pref * 2.0 * (strip_tail(g0, Y) + strip_tail(g1, Y)) > tail_tol) {
    Y *= 2.0;
    if (Y > 1024.0) throw numeric_error("strip integral tail bound does not converge");
  }
  out.Y = Y;
  out.tail_bound = pref * 2.0 * (strip_tail(g0, Y) + strip_tail(g1, Y));
  // cosh(pi y) - cos(pi t) = 2 sinh^2(pi y / 2) + 2 sin^2(pi t / 2), free of cancellation near y = 0.
  const double sp = std::sin(0.5 * kPi * t), cp = std::cos(0.5 * kPi * t);
  auto f = [&](double y) {
    const double sh = std::sinh(0.5 * kPi * y);
    const double dm = 2.0 * sh * sh + 2.0 * sp * sp;
    const double dp = 2.0 * sh * sh + 2.0 * cp * cp;
    return L0(y) / dm + L1(y) / dp;
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double breaks[] = {-Y, -1.0, -t, 0.0, t, 1.0, Y};
  double total = 0.0, err = 0.0;
  for (int i = 0; i + 1 < 7; ++i) {
    double e = 0.0;
    total += GK::integrate(f, breaks[i], breaks[i + 1], 12, 1e-12, &e);
    err += e;
  }
  out.value = pref * total;
  out.quad_error = pref * err;
  if (!(out.quad_error < 1e-9) || !std::isfinite(out.value))
    throw numeric_error("strip quadrature did not converge (error estimate " + std::to_string(out.quad_error) + ")");
  return out;
}

}  // namespace detail

/// log M(t) with its error budget.
inline detail::StripIntegral interp_log_constant(const BoundaryMajorant& M0, const BoundaryMajorant& M1, double t,
                                                 double beta_limit = kGaussianBetaLimit) {
  M0.validate(beta_limit);
  M1.validate(beta_limit);
  return detail::strip_exponent([&](double y) { return M0.log_value(y); }, [&](double y) { return M1.log_value(y); },
                                M0.log_growth(), M1.log_growth(), t);
}

inline double interp_constant(const BoundaryMajorant& M0, const BoundaryMajorant& M1, double t,
                              double beta_limit = kGaussianBetaLimit) {
  return std::exp(interp_log_constant(M0, M1, t, beta_limit).value);
}

// ---------------------------------------------------------------------------
// Exponent bookkeeping for the Riesz means

struct RieszExponentRow {
  double lambda = 0.0;
  double eps = 0.0;
  double theta = 0.0;
  double p = 0.0;
  double p_limit = 0.0;  // 4 / (1 - 2 lambda), infinite at lambda = 1/2
  bool in_range = false;
  double M = 0.0;        // M(theta) for M0 = C1 (1+|y|)^3, M1 = C2 e^{1.5 y^2}
};

inline RieszExponentRow riesz_exponent_table(double lambda, double eps, double C1 = 1.0, double C2 = 1.0) {
  if (!(lambda > 0.0 && lambda <= 0.5)) throw invalid_input("lambda must lie in (0, 1/2]");
  if (!(eps > 0.0 && eps < 0.5)) throw invalid_input("eps must lie in (0, 1/2)");
  RieszExponentRow r;
  r.lambda = lambda;
  r.eps = eps;
  r.theta = 2.0 * (lambda - eps);
  if (!(r.theta > 0.0 && r.theta < 1.0)) throw invalid_input("eps must be smaller than lambda");
  r.p = 4.0 / (1.0 - r.theta);
  r.p_limit = lambda == 0.5 ? kInf : 4.0 / (1.0 - 2.0 * lambda);
  r.in_range = r.p < r.p_limit;
  r.M = interp_constant(BoundaryMajorant::poly(C1, 3.0), BoundaryMajorant::gaussian(C2, 1.5), r.theta);
  return r;
}

// ---------------------------------------------------------------------------
// Three-lines check

/// F(z) = sum coef z^power e^{c pi z}.
struct StripTerm {
  cplx coef = 1.0;
  int power = 0;
  double c = 0.0;
};

struct StripFunction {
  std::vector<StripTerm> terms;

  void validate() const {
    require(!terms.empty(), "test function needs at least one term");
    for (const auto& t : terms) {
      require(t.power >= 0, "powers must be nonnegative");
      if (!(std::abs(t.c) < 1.0)) throw invalid_input("exponential rate must satisfy |c| < 1");
    }
  }

  cplx operator()(cplx z) const {
    cplx s = 0.0;
    for (const auto& t : terms) s += t.coef * std::pow(z, t.power) * std::exp(t.c * kPi * z);
    return s;
  }

  /// log|F| <= a + b |y| on both boundary lines.
  std::array<double, 3> log_growth() const {
    double a = 0.0, b = 0.0;
    for (const auto& t : terms) {
      a += std::abs(t.coef) * std::exp(std::max(t.c, 0.0) * kPi) * std::pow(2.0, t.power);
      b = std::max(b, static_cast<double>(t.power));
    }
    return {std::abs(std::log(std::max(a, 1e-300))) + 1.0, b, 0.0};
  }
};

struct ThreeLinesResult {
  double bound = 0.0;
  double value = 0.0;
  double slack = 0.0;
};

/// exp{(sin pi x)/2 int [log|F(iy)|/(cosh - cos) + log|F(1+iy)|/(cosh + cos)]} - |F(x)|.
inline ThreeLinesResult three_lines_check(const StripFunction& F, double x) {
  F.validate();
  require(x > 0.0 && x < 1.0, "x must lie in (0, 1)");
  auto L0 = [&](double y) { return std::log(std::abs(F(cplx(0.0, y)))); };
  auto L1 = [&](double y) { return std::log(std::abs(F(cplx(1.0, y)))); };
  const auto g = F.log_growth();
  const detail::StripIntegral e = detail::strip_exponent(L0, L1, g, g, x);
  ThreeLinesResult r;
  r.bound = std::exp(e.value);
  r.value = std::abs(F(cplx(x, 0.0)));
  r.slack = r.bound - r.value;
  return r;
}

}  // namespace ncflab

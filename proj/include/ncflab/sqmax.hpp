#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ncflab/error.hpp"
#include "ncflab/ncmat.hpp"
#include "ncflab/optorus.hpp"

namespace ncflab {

using OpSequence = std::vector<MatElem>;
using GridSequence = std::vector<OpGrid>;

namespace detail {

/// tau(s^{p/2}) for PSD s, i.e. || s^{1/2} ||_p^p.
inline double psd_sqrt_pnorm_p(const MatElem& s, double p) {
  const RVec ev = herm_eig(s, 1e-8).values;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) acc += std::pow(std::max(ev[i], 0.0), 0.5 * p);
  return acc / static_cast<double>(ev.size());
}

inline void check_sequence(const OpSequence& seq) {
  require(!seq.empty(), "empty sequence");
  for (const auto& x : seq) {
    require_square(x);
    require(x.rows() == seq.front().rows(), "sequence items must share their dimension");
  }
}

template <bool Row>
MatElem square_sum(const OpSequence& seq) {
  const auto n = seq.front().rows();
  MatElem s = MatElem::Zero(n, n);
  for (const auto& x : seq) s += Row ? MatElem(x * x.adjoint()) : MatElem(x.adjoint() * x);
  return 0.5 * (s + s.adjoint());
}

}  // namespace detail

/// || (sum f_j* f_j)^{1/2} ||_p.
inline double col_sq_norm(const OpSequence& seq, double p) {
  require(p >= 1.0 && std::isfinite(p), "p must lie in [1, inf)");
  detail::check_sequence(seq);
  return std::pow(detail::psd_sqrt_pnorm_p(detail::square_sum<false>(seq), p), 1.0 / p);
}

/// || (sum f_j f_j*)^{1/2} ||_p.
inline double row_sq_norm(const OpSequence& seq, double p) {
  require(p >= 1.0 && std::isfinite(p), "p must lie in [1, inf)");
  detail::check_sequence(seq);
  return std::pow(detail::psd_sqrt_pnorm_p(detail::square_sum<true>(seq), p), 1.0 / p);
}

struct RcNorm {
  double row = 0.0;
  double col = 0.0;
  double value = 0.0;
  bool is_infimum = true;  // false when value is only the trivial upper bound (p < 2)
};

inline RcNorm rc_from(double row, double col, double p) {
  RcNorm r{row, col, 0.0, true};
  if (p >= 2.0) {
    r.value = std::max(row, col);
  } else {
    r.value = std::min(row, col);
    r.is_infimum = false;
  }
  return r;
}

inline RcNorm rc_norm(const OpSequence& seq, double p) { return rc_from(row_sq_norm(seq, p), col_sq_norm(seq, p), p); }

// Grid sequences: the norms integrate tau(.)^p over the grid cells.

namespace detail {

template <bool Row>
double grid_sq_norm(const GridSequence& seq, double p) {
  require(p >= 1.0 && std::isfinite(p), "p must lie in [1, inf)");
  require(!seq.empty(), "empty sequence");
  for (const auto& g : seq) require(g.same_shape(seq.front()), "sequence grids must share their shape");
  const OpGrid& f0 = seq.front();
  double acc = 0.0;
  if (f0.n == 1) {
    for (size_t i = 0; i < f0.plane_size(); ++i) {
      double s = 0.0;
      for (const auto& g : seq) s += std::norm(g.data[i]);
      acc += std::pow(s, 0.5 * p);
    }
  } else {
    for (int a = 0; a < f0.G; ++a)
      for (int b = 0; b < f0.G; ++b) {
        OpSequence pt;
        pt.reserve(seq.size());
        for (const auto& g : seq) pt.push_back(g.sample(a, b));
        acc += psd_sqrt_pnorm_p(square_sum<Row>(pt), p);
      }
  }
  return std::pow(acc * f0.cell_area(), 1.0 / p);
}

}  // namespace detail

inline double col_sq_norm(const GridSequence& seq, double p) { return detail::grid_sq_norm<false>(seq, p); }
inline double row_sq_norm(const GridSequence& seq, double p) { return detail::grid_sq_norm<true>(seq, p); }
inline RcNorm rc_norm(const GridSequence& seq, double p) { return rc_from(row_sq_norm(seq, p), col_sq_norm(seq, p), p); }

/// id (x) P_j for the frequency intervals [-G/2 + jL, -G/2 + (j+1)L) along the second axis.
inline GridSequence lp_projections(const OpGrid& F, int L) {
  require(L >= 1 && F.G % L == 0, "interval length must divide the frequency window");
  const int count = F.G / L;
  OpGrid fh = F;
  fft::dft2(fh.data.data(), F.G, F.G, F.n * F.n, -1);
  const double s = 1.0 / (static_cast<double>(F.G) * F.G);
  const size_t ps = F.plane_size();
  GridSequence out;
  out.reserve(count);
  for (int j = 0; j < count; ++j) {
    OpGrid pj(F.G, F.n, F.domain, F.L);
    const int lo = -F.G / 2 + j * L;
    for (size_t pl = 0; pl < static_cast<size_t>(F.n) * F.n; ++pl)
      for (int a = 0; a < F.G; ++a)
        for (int b = 0; b < F.G; ++b) {
          const int xi = fft::signed_freq(b, F.G);
          if (xi >= lo && xi < lo + L) {
            const size_t idx = pl * ps + static_cast<size_t>(a) * F.G + b;
            pj.data[idx] = fh.data[idx] * s;
          }
        }
    fft::dft2(pj.data.data(), F.G, F.G, F.n * F.n, +1);
    out.push_back(std::move(pj));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Maximal norm of a positive sequence

struct MaxNormEstimate {
  double lower = 0.0;
  double upper = 0.0;
  MatElem basis;         // dual certificate: y_n = sum over rows assigned to n of c_i v_i v_i*
  std::vector<int> assignment;
  MatElem majorant;      // a with a >= x_n for all n
  std::vector<double> lower_trace;  // lower bound after each ascent step
};

namespace detail {

struct BasisEval {
  double lower;
  double upper;
  std::vector<int> assign;
  MatElem majorant;
};

/// For a unit basis V: d_i = max_n <v_i, x_n v_i>; lower = ||d||_p; upper from the
/// majorant V diag(d) V* + mu I lifted until it dominates every x_n.
inline BasisEval eval_basis(const OpSequence& xs, const MatElem& V, double p, bool want_upper) {
  const auto d = V.cols();
  RVec best = RVec::Constant(d, -std::numeric_limits<double>::infinity());
  std::vector<int> assign(d, 0);
  for (size_t n = 0; n < xs.size(); ++n) {
    const MatElem xv = xs[n] * V;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double v = (V.col(i).adjoint() * xv.col(i))(0, 0).real();
      if (v > best[i]) {
        best[i] = v;
        assign[i] = static_cast<int>(n);
      }
    }
  }
  for (Eigen::Index i = 0; i < d; ++i) best[i] = std::max(best[i], 0.0);
  BasisEval out{schatten_from_singular(best, p), 0.0, assign, MatElem()};
  if (want_upper) {
    MatElem a = V * best.cast<cplx>().asDiagonal() * V.adjoint();
    a = 0.5 * (a + a.adjoint());
    double mu = 0.0;
    for (const auto& x : xs) mu = std::max(mu, herm_eig(x - a, 1e-8).values.maxCoeff());
    a += MatElem::Identity(d, d) * (mu * (1.0 + 1e-12) + 1e-300);
    out.majorant = a;
    out.upper = schatten_from_singular(herm_eig(a, 1e-8).values.cwiseMax(0.0), p);
  }
  return out;
}

}  // namespace detail

inline void require_positive_items(const OpSequence& xs) {
  detail::check_sequence(xs);
  for (const auto& x : xs) {
    require(is_self_adjoint(x, 1e-10), "maxnorm_positive needs self-adjoint items");
    const RVec ev = herm_eig(x).values;
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-10 * scale) throw invalid_input("maxnorm_positive needs positive semidefinite items");
  }
}

/// Two-sided estimate of || sup_n x_n ||_p for x_n >= 0.
inline MaxNormEstimate maxnorm_positive(const OpSequence& xs, double p, std::uint64_t seed = 1, int ascent_steps = 200) {
  require(p >= 1.0, "p must be >= 1");
  require_positive_items(xs);
  const auto d = xs.front().rows();
  std::mt19937_64 rng(seed);

  std::vector<MatElem> bases{MatElem::Identity(d, d)};
  MatElem sum = MatElem::Zero(d, d);
  for (const auto& x : xs) {
    bases.push_back(herm_eig(x).vectors);
    sum += x;
  }
  bases.push_back(herm_eig(0.5 * (sum + sum.adjoint())).vectors);
  for (int r = 0; r < 4; ++r) bases.push_back(random_unitary(static_cast<int>(d), rng));

  MaxNormEstimate est;
  est.upper = std::numeric_limits<double>::infinity();
  est.lower = -1.0;
  for (const auto& V : bases) {
    const detail::BasisEval e = detail::eval_basis(xs, V, p, true);
    if (e.upper < est.upper) {
      est.upper = e.upper;
      est.majorant = e.majorant;
    }
    if (e.lower > est.lower) {
      est.lower = e.lower;
      est.basis = V;
      est.assignment = e.assign;
    }
  }
  est.lower_trace.push_back(est.lower);

  // Random-rotation ascent on the dual certificate; only improvements are accepted.
  double step = 0.3;
  for (int it = 0; it < ascent_steps && d > 1; ++it) {
    const MatElem H = random_hermitian(static_cast<int>(d), rng);
    const HermEig he = herm_eig(H);
    Eigen::VectorXcd ph(he.values.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph[i] = std::exp(cplx(0.0, step * he.values[i]));
    const MatElem U = he.vectors * ph.asDiagonal() * he.vectors.adjoint();
    const MatElem V = est.basis * U;
    const detail::BasisEval e = detail::eval_basis(xs, V, p, true);
    if (e.upper < est.upper) {
      est.upper = e.upper;
      est.majorant = e.majorant;
    }
    if (e.lower > est.lower) {
      est.lower = e.lower;
      est.basis = V;
      est.assignment = e.assign;
    } else {
      step = std::max(step * 0.9, 1e-4);
    }
    est.lower_trace.push_back(est.lower);
  }
  return est;
}

/// Grid sequences: per-sample certificates combined in L_p over the grid.
inline MaxNormEstimate maxnorm_positive(const GridSequence& xs, double p, std::uint64_t seed = 1, int ascent_steps = 50) {
  require(!xs.empty(), "empty sequence");
  const OpGrid& f0 = xs.front();
  for (const auto& g : xs) require(g.same_shape(f0), "sequence grids must share their shape");
  double lo = 0.0, hi = 0.0;
  for (int a = 0; a < f0.G; ++a)
    for (int b = 0; b < f0.G; ++b) {
      OpSequence pt;
      for (const auto& g : xs) pt.push_back(g.sample(a, b));
      const MaxNormEstimate e = maxnorm_positive(pt, p, seed + static_cast<std::uint64_t>(a) * f0.G + b, ascent_steps);
      if (std::isinf(p)) {
        lo = std::max(lo, e.lower);
        hi = std::max(hi, e.upper);
      } else {
        lo += std::pow(e.lower, p);
        hi += std::pow(e.upper, p);
      }
    }
  MaxNormEstimate out;
  if (std::isinf(p)) {
    out.lower = lo;
    out.upper = hi;
  } else {
    out.lower = std::pow(lo * f0.cell_area(), 1.0 / p);
    out.upper = std::pow(hi * f0.cell_area(), 1.0 / p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operator-inequality fuzzing

struct FuzzReport {
  std::string kind;
  int dim = 0;
  long trials = 0;
  long violations = 0;
  double min_scaled_slack = std::numeric_limits<double>::infinity();
  OpSequence worst_instance;
  // Khintchine: observed range of E||sum eps_i f_i||_p / ||{f_i}||_rc.
  double khintchine_lower = std::numeric_limits<double>::infinity();
  double khintchine_upper = 0.0;
};

inline const std::vector<std::string>& fuzz_kinds() {
  static const std::vector<std::string> k{"convexity", "trace-cs", "holder-sq", "khintchine", "monotone"};
  return k;
}

inline constexpr double kFuzzTolerance = 1e-9;

namespace detail {

struct Trial {
  double slack;
  double scale;
  OpSequence instance;
};

inline Trial trial_convexity(int n, std::mt19937_64& rng) {
  // |sum_i c_i g_i mu_i|^2 <= (sum_i |c_i|^2 mu_i) (sum_i |g_i|^2 mu_i), c scalar, g matrix.
  std::uniform_int_distribution<int> ld(1, 6);
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int len = ld(rng);
  MatElem X = MatElem::Zero(n, n), G2 = MatElem::Zero(n, n);
  double c2 = 0.0;
  OpSequence inst;
  for (int i = 0; i < len; ++i) {
    const double mu = ud(rng);
    const cplx c(nd(rng), nd(rng));
    const MatElem g = random_gaussian(n, rng);
    X += c * g * mu;
    G2 += g.adjoint() * g * mu;
    c2 += std::norm(c) * mu;
    inst.push_back(c * g);
  }
  MatElem rhs = c2 * G2 - X.adjoint() * X;
  rhs = 0.5 * (rhs + rhs.adjoint());
  return {herm_eig(rhs, 1e-6).values.minCoeff(), std::max(1.0, (c2 * G2).norm()), inst};
}

inline Trial trial_trace_cs(int n, std::mt19937_64& rng) {
  // |tau(ab)|^2 <= tau(|a| b) tau(|a*| b) for b >= 0.
  const MatElem a = random_gaussian(n, rng);
  const MatElem b = random_psd(n, rng);
  const double lhs = std::norm(tau(a * b));
  const double rhs = tau(abs_value(a) * b).real() * tau(abs_value(a.adjoint()) * b).real();
  return {rhs - lhs, std::max(1.0, rhs), {a, b}};
}

inline Trial trial_holder_sq(int n, std::mt19937_64& rng) {
  // || sum f_i* g_i ||_r <= col(f, p) col(g, q), 1/r = 1/p + 1/q, p, q >= 2.
  static const double ps[] = {2.0, 3.0, 4.0, 6.0, 8.0};
  std::uniform_int_distribution<int> pd(0, 4), ld(1, 5);
  const double p = ps[pd(rng)], q = ps[pd(rng)];
  const double r = 1.0 / (1.0 / p + 1.0 / q);
  const int len = ld(rng);
  OpSequence f, g;
  MatElem s = MatElem::Zero(n, n);
  for (int i = 0; i < len; ++i) {
    f.push_back(random_gaussian(n, rng));
    g.push_back(random_gaussian(n, rng));
    s += f.back().adjoint() * g.back();
  }
  const double lhs = schatten_from_singular(singular_values(s), r);
  const double rhs = col_sq_norm(f, p) * col_sq_norm(g, q);
  OpSequence inst = f;
  inst.insert(inst.end(), g.begin(), g.end());
  return {rhs - lhs, std::max(1.0, rhs), inst};
}

struct KhintchineTrial {
  double ratio;
  OpSequence instance;
};

/// (E || sum eps_i f_i ||_4^4)^{1/4} / max(row, col) at p = 4 over all sign vectors.
inline KhintchineTrial trial_khintchine(int n, std::mt19937_64& rng, int max_len = 8) {
  std::uniform_int_distribution<int> ld(1, max_len);
  const int len = ld(rng);
  OpSequence f;
  for (int i = 0; i < len; ++i) f.push_back(random_gaussian(n, rng));
  double acc = 0.0;
  const long total = 1L << len;
  for (long mask = 0; mask < total; ++mask) {
    MatElem s = MatElem::Zero(n, n);
    for (int i = 0; i < len; ++i) s += ((mask >> i) & 1) ? MatElem(-f[i]) : f[i];
    const MatElem ss = s.adjoint() * s;
    acc += (ss * ss).trace().real() / n;
  }
  const double lhs = std::pow(acc / static_cast<double>(total), 0.25);
  return {lhs / rc_norm(f, 4.0).value, f};
}

inline Trial trial_monotone(int n, std::mt19937_64& rng) {
  // 0 <= a <= b  =>  ||a||_p <= ||b||_p  and  a^alpha <= b^alpha for alpha in [0, 1].
  std::uniform_int_distribution<int> rd(1, n);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const MatElem a = random_psd(n, rng, rd(rng));
  const MatElem c = random_gaussian(n, rng) * ud(rng);
  MatElem b = a + c.adjoint() * c;
  b = 0.5 * (b + b.adjoint());
  static const double ps[] = {1.0, 1.5, 2.0, 3.0, 4.0};
  std::uniform_int_distribution<int> pd(0, 4);
  const double p = ps[pd(rng)];
  const double alpha = ud(rng);
  const double s1 = schatten_norm(b, p) - schatten_norm(a, p);
  MatElem diff = mat_power(b, alpha) - mat_power(a, alpha);
  diff = 0.5 * (diff + diff.adjoint());
  const double s2 = herm_eig(diff, 1e-6).values.minCoeff();
  return {std::min(s1, s2), std::max(1.0, b.norm()), {a, b}};
}

}  // namespace detail

inline FuzzReport ineq_fuzz(const std::string& kind, long trials, std::uint64_t seed, int dim) {
  if (std::find(fuzz_kinds().begin(), fuzz_kinds().end(), kind) == fuzz_kinds().end())
    throw invalid_input("unknown inequality kind '" + kind + "'");
  require(dim >= 1, "dimension must be positive");
  require(trials >= 0, "trial count must be nonnegative");
  std::mt19937_64 rng(seed);
  FuzzReport rep;
  rep.kind = kind;
  rep.dim = dim;
  rep.trials = trials;
  for (long t = 0; t < trials; ++t) {
    if (kind == "khintchine") {
      detail::KhintchineTrial k = detail::trial_khintchine(dim, rng);
      rep.khintchine_lower = std::min(rep.khintchine_lower, k.ratio);
      rep.khintchine_upper = std::max(rep.khintchine_upper, k.ratio);
      // For p >= 2 the lower Khintchine constant is 1.
      const double slack = k.ratio - 1.0;
      if (slack < rep.min_scaled_slack) {
        rep.min_scaled_slack = slack;
        rep.worst_instance = k.instance;
      }
      if (slack < -kFuzzTolerance) ++rep.violations;
      continue;
    }
    detail::Trial tr = kind == "convexity"   ? detail::trial_convexity(dim, rng)
                       : kind == "trace-cs"  ? detail::trial_trace_cs(dim, rng)
                       : kind == "holder-sq" ? detail::trial_holder_sq(dim, rng)
                                             : detail::trial_monotone(dim, rng);
    const double scaled = tr.slack / tr.scale;
    if (scaled < rep.min_scaled_slack) {
      rep.min_scaled_slack = scaled;
      rep.worst_instance = std::move(tr.instance);
    }
    if (scaled < -kFuzzTolerance) ++rep.violations;
  }
  return rep;
}

}  // namespace ncflab

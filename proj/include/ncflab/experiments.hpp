#pragma once

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncflab/config.hpp"
#include "ncflab/error.hpp"
#include "ncflab/interp.hpp"
#include "ncflab/io.hpp"
#include "ncflab/kakeya.hpp"
#include "ncflab/multilab.hpp"
#include "ncflab/optorus.hpp"
#include "ncflab/qtorus.hpp"
#include "ncflab/sqmax.hpp"
#include "ncflab/version.hpp"

namespace ncflab::experiments {

using json = nlohmann::json;

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Outcome of one experiment. Checks are the assertions; the table is the CSV payload.
struct Result {
  std::string id;
  std::uint64_t seed = 0;
  json params = json::object();
  json values = json::object();
  std::vector<Check> checks;
  io::CsvTable table{{}};
  double wall_seconds = 0.0;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }

  void check(std::string name, bool ok, std::string detail) { checks.push_back({std::move(name), ok, std::move(detail)}); }

  json to_json() const {
    json c = json::array();
    for (const auto& ch : checks) c.push_back({{"name", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
    return {{"experiment", id},     {"seed", seed},         {"params", params},
            {"values", values},     {"checks", c},          {"passed", passed()},
            {"wall_seconds", wall_seconds}, {"version", kVersion}};
  }
};

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Quantum-torus Parseval and Riesz-mean convergence

inline Result qt_riesz(const config::Section& s, std::uint64_t seed) {
  Result r;
  const long p = s.integer("p", 1), q = s.integer("q", 5);
  const int K = static_cast<int>(s.integer("K", 10));
  const long seeds = s.integer("seeds", 20);
  const double lambda = s.num("lambda", 0.3);
  const double R0 = s.num("R0", 16.0);
  const int doublings = static_cast<int>(s.integer("doublings", 24));
  const double target = s.num("target", 1e-12);
  const double parseval_tol = s.num("parseval_tol", 1e-10);
  const int gridM = static_cast<int>(s.integer("gridM", 4 * K + 1));
  r.params = {{"p", p}, {"q", q}, {"K", K}, {"seeds", seeds}, {"lambda", lambda}, {"R0", R0},
              {"doublings", doublings}, {"gridM", gridM}};
  r.table = io::CsvTable({"seed", "R", "defect_l2", "parseval_gap"});
  const RationalAngle ang(p, q);
  double worst_parseval = 0.0, worst_final = 0.0;
  long monotone_breaks = 0;
  for (long sd = 0; sd < seeds; ++sd) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(sd));
    const QTorusPoly f = random_qtorus_poly(ang, K, rng);
    const double gap = std::abs(lp_norm_qt(f, 2.0, gridM) - f.coeff_l2());
    worst_parseval = std::max(worst_parseval, gap);
    double prev = kInf;
    double R = R0;
    for (int j = 0; j <= doublings; ++j, R *= 2.0) {
      const double e = lp_norm_qt(bochner_riesz_qt_defect(f, R, lambda), 2.0, gridM);
      r.table.row() << sd << R << e << gap;
      if (!(e < prev)) ++monotone_breaks;
      prev = e;
    }
    worst_final = std::max(worst_final, prev);
  }
  r.values = {{"max_parseval_gap", worst_parseval}, {"max_final_defect", worst_final},
              {"monotonicity_breaks", monotone_breaks}};
  r.check("parseval", worst_parseval <= parseval_tol, "max |norm - coeff l2| = " + fmt(worst_parseval));
  r.check("monotone", monotone_breaks == 0, std::to_string(monotone_breaks) + " non-decreasing steps");
  r.check("converged", worst_final < target, "final defect " + fmt(worst_final));
  return r;
}

// ---------------------------------------------------------------------------
// Transference path equality

inline Result transference(const config::Section& s, std::uint64_t seed) {
  Result r;
  std::vector<long> ps = s.integers("theta_p", {1, 1, 2}), qs = s.integers("theta_q", {3, 5, 7});
  require(ps.size() == qs.size(), "theta_p and theta_q must have equal length");
  const long seeds = s.integer("seeds", 10);
  const int K = static_cast<int>(s.integer("K", 6));
  const int G = static_cast<int>(s.integer("grid", 32));
  const std::vector<double> Rs = s.nums("R_list", {2.5, 4.0, 5.5, 9.0});
  const double lambda = s.num("lambda", 0.5);
  const double tol = s.num("tol", 1e-10);
  r.params = {{"theta_p", ps}, {"theta_q", qs}, {"seeds", seeds}, {"K", K}, {"grid", G}, {"R_list", Rs},
              {"lambda", lambda}};
  r.table = io::CsvTable({"p", "q", "seed", "R", "residual", "pullback_residual"});
  double worst = 0.0;
  for (size_t t = 0; t < ps.size(); ++t) {
    const RationalAngle ang(ps[t], qs[t]);
    for (long sd = 0; sd < seeds; ++sd) {
      std::mt19937_64 rng(seed + 1000 * t + static_cast<std::uint64_t>(sd));
      const QTorusPoly f = random_qtorus_poly(ang, K, rng);
      const OpGrid F = transfer_tilde(f, G);
      for (double R : Rs) {
        const OpGrid via_grid = bochner_riesz_grid(F, R, lambda);
        const QTorusPoly direct = bochner_riesz_qt(f, R, lambda);
        const double res = max_abs_diff(via_grid, transfer_tilde(direct, G));
        const QTorusPoly back = pull_back(via_grid, ang);
        double pres = 0.0;
        for (const auto& [k, c] : back.coeffs) pres = std::max(pres, std::abs(c - direct.coeff(k)));
        for (const auto& [k, c] : direct.coeffs) pres = std::max(pres, std::abs(c - back.coeff(k)));
        r.table.row() << ps[t] << qs[t] << sd << R << res << pres;
        worst = std::max({worst, res, pres});
      }
    }
  }
  r.values = {{"max_residual", worst}};
  r.check("path-equality", worst <= tol, "max entrywise residual " + fmt(worst));
  return r;
}

// ---------------------------------------------------------------------------
// Kakeya maximal norm scaling

inline std::vector<FamilyMember> kakeya_family(const std::vector<std::string>& kinds, int G, int N, double radius) {
  std::vector<FamilyMember> out;
  for (const auto& kind : kinds) {
    if (kind == "radial") {
      out.push_back({"radial", radial_power_field(G, radius / N, radius, 1.0)});
    } else if (kind == "tube") {
      out.push_back({"tube", tube_field(G, 2.0 * radius, N, 0.3)});
    } else if (kind == "besicovitch") {
      out.push_back({"besicovitch", besicovitch_field(G, 2.0 * radius, N)});
    } else {
      throw invalid_input("unknown kakeya family '" + kind + "'");
    }
  }
  return out;
}

inline Result kakeya_scaling(const config::Section& s, std::uint64_t seed) {
  Result r;
  const std::vector<long> Nl = s.integers("N_list", {8, 16, 32, 64, 128, 256});
  const int G = static_cast<int>(s.integer("grid", 1024));
  const double radius = s.num("radius", 0.4);
  const std::vector<std::string> fam = s.strings("family", {"radial"});
  const double r2_min = s.num("r2_min", 0.95);
  const double margin = s.num("trivial_fraction", 0.5);
  const long margin_from = s.integer("trivial_from_N", 64);
  const double inc_factor = s.num("increment_factor", 2.0);
  r.params = {{"N_list", Nl}, {"grid", G}, {"radius", radius}, {"family", fam}};
  require(fft::is_pow2(G), "grid must be a power of two");
  std::vector<int> Ns(Nl.begin(), Nl.end());
  for (int N : Ns) require(N >= 1 && N * kMinShortCells / G <= 0.5, "N too large for the grid");
  const ScalingReport rep = kakeya_norm_scaling(Ns, G, [&](int N) { return kakeya_family(fam, G, N, radius); });
  r.table = io::CsvTable({"N", "measured_norm", "best_member", "sqrtN", "log_fit_a", "log_fit_b", "log_fit_r2"});
  json rows = json::array();
  bool margin_ok = true;
  for (const auto& row : rep.rows) {
    r.table.row() << row.N << row.ratio << row.best_member << row.trivial_margin << rep.log_fit.a << rep.log_fit.b
                  << rep.log_fit.r2;
    rows.push_back({{"N", row.N}, {"ratio", row.ratio}, {"member", row.best_member}});
    if (row.N >= margin_from && !(row.ratio <= margin * row.trivial_margin)) margin_ok = false;
  }
  std::vector<double> inc;
  for (size_t i = 1; i < rep.rows.size(); ++i) inc.push_back(rep.rows[i].ratio - rep.rows[i - 1].ratio);
  bool inc_ok = !inc.empty();
  for (size_t i = 1; i < inc.size(); ++i) {
    const double a = inc[i - 1], b = inc[i];
    if (!(a > 0 && b > 0 && std::max(a, b) <= inc_factor * std::min(a, b))) inc_ok = false;
  }
  r.values = {{"rows", rows},
              {"log_fit", {{"a", rep.log_fit.a}, {"b", rep.log_fit.b}, {"r2", rep.log_fit.r2}}},
              {"power_fit", {{"a", rep.power_fit.a}, {"c", rep.power_fit.b}, {"r2", rep.power_fit.r2}}},
              {"increments", inc}};
  (void)seed;
  r.check("log-fit", rep.log_fit.r2 >= r2_min, "R^2 = " + fmt(rep.log_fit.r2));
  r.check("below-trivial", margin_ok, "ratio <= " + fmt(margin) + " sqrt(N) for N >= " + std::to_string(margin_from));
  std::string incs;
  for (double v : inc) incs += fmt(v) + " ";
  r.check("log-increments", inc_ok, "increments " + incs);
  return r;
}

inline Result kakeya_key_inequality(const config::Section& s, std::uint64_t seed) {
  Result r;
  const std::vector<long> ms = s.integers("m_list", {3, 4, 5, 6, 7});
  const int G = static_cast<int>(s.integer("grid", 256));
  const std::vector<std::string> fam = s.strings("family", {"radial", "tube"});
  r.params = {{"m_list", ms}, {"grid", G}, {"family", fam}};
  r.table = io::CsvTable({"m", "member", "lhs", "rhs", "gap"});
  json rows = json::array();
  double max_gap = 0.0;
  for (long m : ms) {
    for (const auto& mem : kakeya_family(fam, G, 1 << m, 0.4)) {
      const KeyInequalityRow row = key_inequality_probe(static_cast<int>(m), mem.f);
      r.table.row() << row.m << mem.id << row.lhs << row.rhs << row.gap;
      rows.push_back({{"m", m}, {"member", mem.id}, {"lhs", row.lhs}, {"rhs", row.rhs}, {"gap", row.gap}});
      max_gap = std::max(max_gap, row.gap);
    }
  }
  (void)seed;
  r.values = {{"rows", rows}, {"max_gap", max_gap}};
  return r;
}

/// Samplewise ratios K_R F / A_h F and A_h F / K_{R'} F on random positive fields.
inline Result kakeya_sandwich(const config::Section& s, std::uint64_t seed) {
  Result r;
  const long trials = s.integer("trials", 1000);
  const int G = static_cast<int>(s.integer("grid", 256));
  const double bound = s.num("bound", 8.0);
  r.params = {{"trials", trials}, {"grid", G}, {"bound", bound}};
  r.table = io::CsvTable({"trial", "N", "k", "h", "upper_ratio", "lower_ratio"});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  double worst_up = 0.0, worst_lo = 0.0;
  const std::vector<int> Ns{1, 2, 4};
  for (long t = 0; t < trials; ++t) {
    const int N = Ns[static_cast<size_t>(t) % Ns.size()];
    const int k = static_cast<int>(std::floor(ud(rng) * N));
    // h_R such that A_h (h = 2 h_R, at least two cells) and R' (8h) both fit.
    const double hmin = 1.0 / G;
    double hR = hmin * (1 << static_cast<int>(std::floor(ud(rng) * 2.0)));
    const double h = 2.0 * hR;
    if (8.0 * h * N > 0.5 || 2.0 * h * std::hypot(N, k) + 2.0 * h > 0.5) continue;
    OpGrid f(G, 1);
    for (auto& v : f.data) v = 0.05 + ud(rng);
    const std::vector<double> fv = real_plane(f);
    RealConvolver conv(fv, G);
    std::vector<double> kr, ah, kr8;
    conv.apply(rect_kernel(G, RectSpec{N, k, hR, 0}), kr);
    conv.apply(smoothed_kernel(G, k, N, h), ah);
    conv.apply(rect_kernel(G, RectSpec{N, k, 8.0 * h, 0}), kr8);
    double up = 0.0, lo = 0.0;
    for (size_t i = 0; i < kr.size(); ++i) {
      up = std::max(up, kr[i] / ah[i]);
      lo = std::max(lo, ah[i] / kr8[i]);
    }
    r.table.row() << t << N << k << hR << up << lo;
    worst_up = std::max(worst_up, up);
    worst_lo = std::max(worst_lo, lo);
  }
  r.values = {{"max_upper_ratio", worst_up}, {"max_lower_ratio", worst_lo}};
  r.check("sandwich", worst_up <= bound && worst_lo <= bound,
          "max ratios " + fmt(worst_up) + ", " + fmt(worst_lo));
  return r;
}

// ---------------------------------------------------------------------------
// Overlap audit

inline Result overlap_audit(const config::Section& s, std::uint64_t seed) {
  Result r;
  const std::vector<long> ks = s.integers("k_list", {22, 24, 26});
  const long samples = s.integer("samples", 10000);
  const long threshold = s.integer("threshold", 1000);
  const long max_allowed = s.integer("max_count", 100);
  const double ratio_allowed = s.num("ratio", 2.0);
  r.params = {{"k_list", ks}, {"samples", samples}, {"threshold", threshold}};
  r.table = io::CsvTable({"k", "lmax", "eligible_pairs", "max_count", "mean_count"});
  std::vector<long> maxima;
  json rows = json::array();
  for (long k : ks) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k));
    const long lm = case_a_lmax(static_cast<int>(k));
    const bool eligible = lm >= 0 && 2 * lm > threshold;
    long mx = 0;
    double mean = 0.0;
    std::uniform_int_distribution<long> ul(-std::max(lm, 0L), std::max(lm, 0L));
    for (long i = 0; i < samples; ++i) {
      // Targeted draw: a point of Gamma_l - Gamma_{l'} for a random separated pair when one exists.
      long l = ul(rng), lp = ul(rng);
      if (eligible) {
        while (std::abs(l - lp) <= threshold) {
          l = ul(rng);
          lp = ul(rng);
        }
      }
      const auto [a1, a2] = sample_arc(static_cast<int>(k), l, rng);
      const auto [b1, b2] = sample_arc(static_cast<int>(k), lp, rng);
      const long c = overlap_count(static_cast<int>(k), a1 - b1, a2 - b2, threshold);
      mx = std::max(mx, c);
      mean += static_cast<double>(c) / samples;
    }
    maxima.push_back(mx);
    r.table.row() << k << lm << eligible << mx << mean;
    rows.push_back({{"k", k}, {"lmax", lm}, {"separated_pairs_exist", eligible}, {"max", mx}, {"mean", mean}});
  }
  const long hi = *std::max_element(maxima.begin(), maxima.end());
  const long lo = *std::min_element(maxima.begin(), maxima.end());
  const double ratio = lo > 0 ? static_cast<double>(hi) / static_cast<double>(lo) : kInf;
  r.values = {{"rows", rows}, {"max_over_k", hi}, {"min_over_k", lo}, {"ratio", ratio}};
  r.check("bounded", hi <= max_allowed, "max overlap " + std::to_string(hi));
  r.check("k-stable", ratio <= ratio_allowed,
          "max/min over k = " + (lo > 0 ? fmt(ratio) : std::string("undefined (a k has no overlapping pair)")));
  return r;
}

// ---------------------------------------------------------------------------
// Multiplier-sum audit

inline Result multiplier_sum(const config::Section& s, std::uint64_t seed) {
  Result r;
  const std::vector<long> ms = s.integers("m_list", {4, 5, 6, 7, 8, 9, 10});
  const long samples = s.integer("samples", 10000);
  const double tail_tol = s.num("tail_tol", 1e-12);
  const double ratio_allowed = s.num("ratio", 2.0);
  r.params = {{"m_list", ms}, {"samples", samples}};
  r.table = io::CsvTable({"m", "sup", "worst_xi1", "worst_xi2", "max_tail"});
  std::vector<double> sups;
  double max_tail = 0.0;
  bool finite = true;
  for (long m : ms) {
    const SectorSet sec(static_cast<int>(m));
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(m));
    std::uniform_real_distribution<double> ua(0.0, 2.0 * kPi);
    double sup = 0.0, w1 = 0.0, w2 = 0.0, tail = 0.0;
    for (long i = 0; i < samples; ++i) {
      const double a = ua(rng);
      const MultiplierSumReport rep = multiplier_sum_bound(static_cast<int>(m), std::cos(a), std::sin(a), &sec);
      if (rep.value > sup) {
        sup = rep.value;
        w1 = std::cos(a);
        w2 = std::sin(a);
      }
      tail = std::max(tail, rep.tail_bound);
    }
    if (!std::isfinite(sup)) finite = false;
    sups.push_back(sup);
    max_tail = std::max(max_tail, tail);
    r.table.row() << m << sup << w1 << w2 << tail;
  }
  const double hi = *std::max_element(sups.begin(), sups.end());
  const double lo = *std::min_element(sups.begin(), sups.end());
  r.values = {{"sups", sups}, {"max_tail", max_tail}, {"ratio", hi / lo}};
  r.check("finite", finite, "sup per m finite");
  r.check("m-stable", lo > 0 && hi / lo <= ratio_allowed, "max/min over m = " + fmt(hi / lo));
  r.check("tails", max_tail < tail_tol, "largest certified tail " + fmt(max_tail));
  return r;
}

// ---------------------------------------------------------------------------
// Kernel L1 uniformity and decay

inline std::vector<cplx> parse_lambdas(const config::Section& s, const std::string& key, std::vector<cplx> def) {
  if (!s.has(key)) return def;
  // Either a list of reals, or a list of [re, im] pairs.
  const auto& v = s.values.at(key);
  require(v.kind == config::Value::Kind::list, key + " must be a list");
  std::vector<cplx> out;
  for (const auto& it : v.items) {
    if (it.kind == config::Value::Kind::number) {
      out.emplace_back(it.num, 0.0);
    } else if (it.kind == config::Value::Kind::list && it.items.size() == 2) {
      out.emplace_back(it.items[0].num, it.items[1].num);
    } else {
      throw invalid_input(key + " entries must be numbers or [re, im] pairs");
    }
  }
  return out;
}

inline std::string lambda_str(cplx l) { return l.imag() == 0.0 ? fmt(l.real()) : fmt(l.real()) + "+" + fmt(l.imag()) + "i"; }

inline Result kernel_l1(const config::Section& s, std::uint64_t seed) {
  Result r;
  const std::vector<long> ks = s.integers("k_list", {6, 7, 8, 9, 10, 11, 12, 13, 14});
  const std::vector<cplx> lams = parse_lambdas(s, "lambda", {0.1, 0.5, cplx(0.5, 1.0)});
  const int boxG = static_cast<int>(s.integer("box_grid", 2048));
  const double boxL = s.num("box_length", 32.0);
  const double ratio_allowed = s.num("ratio", 2.0);
  const double grid_tol = s.num("grid_tol", 1e-3);
  const double cfac = s.num("envelope_factor", 2.0);
  r.params = {{"k_list", ks}, {"box_grid", boxG}, {"box_length", boxL}};
  r.table = io::CsvTable({"lambda", "k", "l", "l1", "l1_scaled", "decay_constant", "violations"});
  const double radius = 0.25 * boxG / boxL;
  bool all_ok = true;
  json per_lambda = json::array();
  long total_viol = 0;
  for (cplx lam : lams) {
    const double lam3 = std::pow(1.0 + std::abs(lam), 3);
    const double C = cfac * decay_constant(kernel_mkl({static_cast<int>(ks.front()), 0, lam}, boxG, boxL), lam, radius);
    std::vector<double> per_k;
    for (long k : ks) {
      const auto ls = case_a_indices(static_cast<int>(k));
      if (ls.empty()) throw invalid_input("kernel-l1: no case-(a) sectors at k = " + std::to_string(k));
      double kmax = 0.0;
      for (long l : ls) {
        const KernelReport rep = kernel_mkl({static_cast<int>(k), l, lam}, boxG, boxL);
        const long v = decay_violations(rep, lam, C, radius, grid_tol);
        total_viol += v;
        r.table.row() << lambda_str(lam) << k << l << rep.l1 << rep.l1 / lam3 << decay_constant(rep, lam, radius) << v;
        kmax = std::max(kmax, rep.l1 / lam3);
      }
      per_k.push_back(kmax);
    }
    const double hi = *std::max_element(per_k.begin(), per_k.end());
    const double lo = *std::min_element(per_k.begin(), per_k.end());
    if (!(hi / lo <= ratio_allowed)) all_ok = false;
    per_lambda.push_back({{"lambda", lambda_str(lam)}, {"l1_scaled_per_k", per_k}, {"ratio", hi / lo}, {"C", C}});
  }
  (void)seed;
  r.values = {{"per_lambda", per_lambda}, {"violations", total_viol}};
  std::string detail;
  for (const auto& pl : per_lambda) detail += pl["lambda"].get<std::string>() + ": " + fmt(pl["ratio"].get<double>()) + "  ";
  r.check("l1-uniform", all_ok, "max/min over k per lambda  " + detail);
  r.check("decay", total_viol == 0, std::to_string(total_viol) + " envelope violations");
  return r;
}

// ---------------------------------------------------------------------------
// Partition exactness

inline Result partition(const config::Section& s, std::uint64_t seed) {
  Result r;
  const long samples = s.integer("samples", 10000);
  const double tol = s.num("tol", 1e-8);
  const std::vector<cplx> lams = parse_lambdas(s, "lambda", {0.0, 0.3, 0.5, cplx(0.5, 1.0), 1.7});
  const int kmax = static_cast<int>(s.integer("k_max", 40));
  r.params = {{"samples", samples}, {"k_max", kmax}};
  r.table = io::CsvTable({"lambda", "reconstruction_residual", "angular_residual"});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ur(0.0, 1.2), ua(-kPi, kPi), uk(0.0, 1.0);
  double worst_rec = 0.0, worst_ang = 0.0;
  for (cplx lam : lams) {
    double rec = 0.0, ang = 0.0;
    for (long i = 0; i < samples; ++i) {
      // Radii concentrate near the unit circle, where the dyadic pieces live.
      const double rad = (i % 2 == 0) ? ur(rng) : 1.0 - std::exp2(-kmax * uk(rng));
      const double a = ua(rng);
      const double x1 = rad * std::cos(a), x2 = rad * std::sin(a);
      // Reference at the radius of the rounded point, in the form (1 - r)(1 + r) that keeps
      // full relative precision as r -> 1.
      const double r0 = std::hypot(x1, x2);
      const cplx exact = r0 < 1.0 ? cpow_pos((1.0 - r0) * (1.0 + r0), lam) : cplx(0.0);
      rec = std::max(rec, std::abs(riesz_reconstruction(x1, x2, lam) - exact));
      const int k = static_cast<int>(uk(rng) * kmax);
      const double rk = 1.0 - std::ldexp(0.25 + 0.375 * uk(rng), -k);
      const double y1 = rk * std::cos(a), y2 = rk * std::sin(a);
      ang = std::max(ang, std::abs(sum_over_l(y1, y2, k, lam) - eval_mk(y1, y2, k, lam)));
    }
    r.table.row() << lambda_str(lam) << rec << ang;
    worst_rec = std::max(worst_rec, rec);
    worst_ang = std::max(worst_ang, ang);
  }
  r.values = {{"reconstruction_residual", worst_rec}, {"angular_residual", worst_ang}};
  r.check("radial", worst_rec <= tol, "max residual " + fmt(worst_rec));
  r.check("angular", worst_ang <= tol, "max residual " + fmt(worst_ang));
  return r;
}

// ---------------------------------------------------------------------------
// Interpolation constant

/// Harmonic measure of the line Re z = 1 seen from z = t in the strip 0 < Re z < 1,
/// computed through w = e^{i pi z} as a Poisson integral over the negative real axis.
inline double harmonic_measure_oracle(double t) {
  const double u = std::cos(kPi * t), v = std::sin(kPi * t);
  boost::math::quadrature::tanh_sinh<double> ts;
  auto poisson = [&](double s) { return v / (kPi * ((s - u) * (s - u) + v * v)); };
  return ts.integrate(poisson, -std::numeric_limits<double>::infinity(), 0.0);
}

inline Result interp_constant_check(const config::Section& s, std::uint64_t seed) {
  Result r;
  const long npts = s.integer("t_points", 99);
  const double c = s.num("c", 3.7);
  const double tol = s.num("tol", 1e-6);
  const double sym_tol = s.num("symmetry_tol", 1e-10);
  r.params = {{"t_points", npts}, {"c", c}};
  r.table = io::CsvTable({"t", "M_const", "M_e", "oracle", "symmetry_gap"});
  const auto M0c = BoundaryMajorant::constant(c);
  const auto one = BoundaryMajorant::constant(1.0);
  const auto e = BoundaryMajorant::constant(std::exp(1.0));
  const auto P = BoundaryMajorant::poly(2.0, 3.0);
  const auto Gs = BoundaryMajorant::gaussian(1.5, 1.5);
  double wc = 0.0, we = 0.0, ws = 0.0;
  for (long i = 1; i <= npts; ++i) {
    const double t = static_cast<double>(i) / (npts + 1);
    const double mc = interp_constant(M0c, M0c, t);
    const double me = interp_constant(one, e, t);
    const double oracle = std::exp(harmonic_measure_oracle(t));
    const double sym = std::abs(interp_log_constant(P, Gs, t).value - interp_log_constant(Gs, P, 1.0 - t).value);
    wc = std::max(wc, std::abs(mc - c));
    we = std::max(we, std::abs(me - oracle));
    ws = std::max(ws, sym);
    r.table.row() << t << mc << me << oracle << sym;
  }
  (void)seed;
  r.values = {{"constant_gap", wc}, {"oracle_gap", we}, {"symmetry_gap", ws}};
  r.check("constant", wc <= tol, "max |M - c| = " + fmt(wc));
  r.check("oracle", we <= tol, "max |M - e^omega| = " + fmt(we));
  r.check("symmetry", ws <= sym_tol, "max log gap " + fmt(ws));
  return r;
}

inline Result riesz_exponents(const config::Section& s, std::uint64_t seed) {
  Result r;
  const std::vector<double> lams = s.nums("lambda_list", {0.1, 0.2, 0.25, 0.3, 0.4, 0.5});
  const double eps = s.num("eps", 0.05);
  r.params = {{"lambda_list", lams}, {"eps", eps}};
  r.table = io::CsvTable({"lambda", "eps", "theta", "p", "p_limit", "in_range", "M_theta"});
  bool ok = true;
  for (double l : lams) {
    if (!(eps < l)) continue;
    const RieszExponentRow row = riesz_exponent_table(l, eps);
    r.table.row() << row.lambda << row.eps << row.theta << row.p << row.p_limit << row.in_range << row.M;
    ok = ok && row.in_range && std::isfinite(row.M);
  }
  (void)seed;
  r.check("range", ok, "p < 4/(1 - 2 lambda) and M(theta) finite");
  return r;
}

// ---------------------------------------------------------------------------
// Inequality fuzz

inline Result ineq_fuzz_suite(const config::Section& s, std::uint64_t seed) {
  Result r;
  const std::vector<std::string> kinds = s.strings("kinds", {"convexity", "trace-cs", "holder-sq", "monotone", "khintchine"});
  const std::vector<long> dims = s.integers("dims", {2, 3, 4, 8});
  const long trials = s.integer("trials", 10000);
  const long kh_trials = s.integer("khintchine_trials", 1000);
  r.params = {{"kinds", kinds}, {"dims", dims}, {"trials", trials}, {"khintchine_trials", kh_trials}};
  r.table = io::CsvTable({"kind", "dim", "trials", "violations", "min_scaled_slack", "khintchine_lower",
                          "khintchine_upper"});
  long viol = 0;
  bool kh_finite = true;
  json reports = json::array();
  for (const auto& kind : kinds)
    for (long d : dims) {
      const long n = kind == "khintchine" ? kh_trials : trials;
      const FuzzReport rep = ineq_fuzz(kind, n, seed + static_cast<std::uint64_t>(d) * 7919, static_cast<int>(d));
      viol += rep.violations;
      double klo = 0.0, khi = 0.0;
      if (kind == "khintchine") {
        klo = rep.khintchine_lower;
        khi = rep.khintchine_upper;
        kh_finite = kh_finite && std::isfinite(klo) && std::isfinite(khi) && khi > 0;
      }
      r.table.row() << kind << d << rep.trials << rep.violations << rep.min_scaled_slack << klo << khi;
      json worst = json::array();
      for (const auto& m : rep.worst_instance) worst.push_back(io::matrix_to_json(m));
      reports.push_back({{"kind", kind}, {"dim", d}, {"violations", rep.violations},
                         {"min_scaled_slack", rep.min_scaled_slack}, {"khintchine", {klo, khi}},
                         {"worst_instance", rep.violations > 0 ? worst : json::array()}});
    }
  r.values = {{"reports", reports}, {"violations", viol}};
  r.check("no-violations", viol == 0, std::to_string(viol) + " violations beyond scaled tolerance");
  r.check("khintchine-finite", kh_finite, "two-sided constants recorded");
  return r;
}

// ---------------------------------------------------------------------------
// Plancherel / Parseval

inline Result plancherel(const config::Section& s, std::uint64_t seed) {
  Result r;
  const std::vector<long> grids = s.integers("grids", {16, 64, 256});
  const int n = static_cast<int>(s.integer("dim", 4));
  const long reps = s.integer("repeats", 3);
  const double tol = s.num("tol", 1e-10);
  r.params = {{"grids", grids}, {"dim", n}, {"repeats", reps}};
  r.table = io::CsvTable({"G", "rep", "norm_gap", "roundtrip_gap", "pairing_gap"});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst = 0.0;
  for (long G : grids)
    for (long k = 0; k < reps; ++k) {
      OpGrid f(static_cast<int>(G), n), g(static_cast<int>(G), n);
      for (auto& v : f.data) v = cplx(nd(rng), nd(rng));
      for (auto& v : g.data) v = cplx(nd(rng), nd(rng));
      const OpGrid fh = op_fft(f), gh = op_fft(g);
      const double nf = lp_norm_grid(f, 2);
      const double ng = std::abs(l2_norm_freq(fh) - nf) / nf;
      const double rt = max_abs_diff(op_ifft(fh), f) / std::max(1.0, lp_norm_grid(f, kInf));
      const cplx pf = pairing(g, f), pfh = pairing_freq(gh, fh);
      const double pg = std::abs(pf - pfh) / (lp_norm_grid(f, 2) * lp_norm_grid(g, 2) * n);
      r.table.row() << G << k << ng << rt << pg;
      worst = std::max({worst, ng, rt, pg});
    }
  r.values = {{"max_relative_gap", worst}};
  r.check("unitary", worst <= tol, "max relative gap " + fmt(worst));
  return r;
}

// ---------------------------------------------------------------------------
// L4 ratio sweeps

inline Result riesz_sweep(const config::Section& s, std::uint64_t seed) {
  Result r;
  const int G = static_cast<int>(s.integer("grid", 512));
  const std::vector<double> Rs = s.nums("R_list", {4, 8, 16, 32, 64});
  const double p = s.num("p", 4.0);
  const double lam_bounded = s.num("lambda", 0.25);
  const double spread = s.num("spread", 1.2);
  const bool matrix_member = s.boolean("matrix_member", true);
  r.params = {{"grid", G}, {"R_list", Rs}, {"p", p}, {"lambda", lam_bounded}};
  r.table = io::CsvTable({"family_id", "R", "lambda", "ratio", "error_norm"});
  std::mt19937_64 rng(seed);

  auto sup_per_R = [&](double lambda, bool adversarial) {
    std::vector<double> sup;
    for (double R : Rs) {
      std::vector<FamilyMember> fam{{"dual", riesz_dual_extremizer(G, R, lambda)}, {"ring", ring_sum(G, R, 1.0)}};
      if (adversarial && matrix_member) {
        fam.push_back({"matrix-dual", diagonal_embedding({fam[0].f, fam[1].f})});
        fam.push_back({"matrix-random", random_matrix_field(G, 2, static_cast<int>(R) + 1, rng)});
      }
      const SweepResult sw = riesz_ratio_sweep(fam, p, lambda, {R});
      double m = 0.0;
      for (const auto& row : sw.rows) {
        r.table.row() << row.family_id << row.R << lambda << row.ratio << row.error_norm;
        m = std::max(m, row.ratio);
      }
      sup.push_back(m);
    }
    return sup;
  };

  const std::vector<double> bounded = sup_per_R(lam_bounded, true);
  const std::vector<double> focusing = sup_per_R(0.0, false);
  std::vector<double> sorted = bounded;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted.size() % 2 ? sorted[sorted.size() / 2]
                                          : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
  const double mx = sorted.back();
  bool increasing = true;
  for (size_t i = 1; i < focusing.size(); ++i) increasing = increasing && focusing[i] > focusing[i - 1];
  r.values = {{"bounded_sup_per_R", bounded}, {"focusing_sup_per_R", focusing}, {"median", median}, {"max", mx}};
  r.check("uniform", mx <= spread * median, "max " + fmt(mx) + " vs median " + fmt(median));
  std::string fs;
  for (double v : focusing) fs += fmt(v) + " ";
  r.check("focusing-increasing", increasing, "lambda = 0 sups " + fs);
  return r;
}

// ---------------------------------------------------------------------------
// Registry

using Fn = std::function<Result(const config::Section&, std::uint64_t)>;

inline const std::map<std::string, Fn>& registry() {
  static const std::map<std::string, Fn> reg{
      {"qt-riesz", qt_riesz},
      {"transference", transference},
      {"kakeya-scaling", kakeya_scaling},
      {"kakeya-key-inequality", kakeya_key_inequality},
      {"kakeya-sandwich", kakeya_sandwich},
      {"overlap-audit", overlap_audit},
      {"multiplier-sum", multiplier_sum},
      {"kernel-l1", kernel_l1},
      {"partition", partition},
      {"interp-constant", interp_constant_check},
      {"riesz-exponents", riesz_exponents},
      {"ineq-fuzz", ineq_fuzz_suite},
      {"plancherel", plancherel},
      {"riesz-sweep", riesz_sweep},
  };
  return reg;
}

/// Keys each experiment reads; "assert" is accepted everywhere.
inline const std::map<std::string, std::vector<std::string>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"qt-riesz", {"p", "q", "K", "seeds", "lambda", "R0", "doublings", "target", "parseval_tol", "gridM"}},
      {"transference", {"theta_p", "theta_q", "seeds", "K", "grid", "R_list", "lambda", "tol"}},
      {"kakeya-scaling",
       {"N_list", "grid", "radius", "family", "r2_min", "trivial_fraction", "trivial_from_N", "increment_factor"}},
      {"kakeya-key-inequality", {"m_list", "grid", "family"}},
      {"kakeya-sandwich", {"trials", "grid", "bound"}},
      {"overlap-audit", {"k_list", "samples", "threshold", "max_count", "ratio"}},
      {"multiplier-sum", {"m_list", "samples", "tail_tol", "ratio"}},
      {"kernel-l1", {"k_list", "lambda", "box_grid", "box_length", "ratio", "grid_tol", "envelope_factor"}},
      {"partition", {"samples", "tol", "lambda", "k_max"}},
      {"interp-constant", {"t_points", "c", "tol", "symmetry_tol"}},
      {"riesz-exponents", {"lambda_list", "eps"}},
      {"ineq-fuzz", {"kinds", "dims", "trials", "khintchine_trials"}},
      {"plancherel", {"grids", "dim", "repeats", "tol"}},
      {"riesz-sweep", {"grid", "R_list", "p", "lambda", "spread", "matrix_member"}},
  };
  return keys;
}

/// Rejects unknown experiment ids and unknown keys without running anything.
inline void validate_section(const std::string& id, const config::Section& s) {
  const auto it = known_keys().find(id);
  if (it == known_keys().end()) throw invalid_input("unknown experiment '" + id + "'");
  for (const auto& [key, v] : s.values) {
    if (key == "assert") {
      s.boolean("assert", true);
      continue;
    }
    if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
      throw invalid_input("[" + id + "] unknown key '" + key + "'");
  }
}

inline Result run_one(const std::string& id, const config::Section& s, std::uint64_t seed) {
  const auto& reg = registry();
  auto it = reg.find(id);
  if (it == reg.end()) throw invalid_input("unknown experiment '" + id + "'");
  const auto t0 = std::chrono::steady_clock::now();
  Result r = it->second(s, seed);
  r.id = id;
  r.seed = seed;
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace ncflab::experiments

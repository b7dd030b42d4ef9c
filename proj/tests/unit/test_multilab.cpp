#include <gtest/gtest.h>

#include <set>

#include "ncflab/multilab.hpp"

using namespace ncflab;

namespace {

// Cosine transform of the normalized bump by composite Simpson on [0, 2].
double psi_hat_oracle(double eta) {
  const int n = 40000;
  const double h = 2.0 / n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    num += w * avg_bump(t) * std::cos(2.0 * kPi * t * eta);
    den += w * avg_bump(t);
  }
  return num / den;
}

}  // namespace

TEST(Cutoffs, PartitionAtOrigin) {
  EXPECT_EQ(CutoffSet::phi(0.0), 1.0);
  EXPECT_LT(radial_partition_residual(0.0), 1e-15);
}

TEST(Cutoffs, PsiPeakTerm) {
  EXPECT_NEAR(CutoffSet::psi(0.375), 1.0, 1e-15);
  for (int k : {0, 3, 10, 30}) EXPECT_LT(radial_partition_residual(1.0 - std::ldexp(0.375, -k)), 1e-8);
}

TEST(Cutoffs, AngularPartition) {
  EXPECT_LT(angular_partition_residual(0.1), 1e-8);
  for (double x = -3.0; x < 3.0; x += 0.0137) EXPECT_LT(angular_partition_residual(x), 1e-12);
}

TEST(Cutoffs, Supports) {
  EXPECT_EQ(CutoffSet::psi(0.2499), 0.0);
  EXPECT_EQ(CutoffSet::psi(0.6251), 0.0);
  EXPECT_EQ(CutoffSet::omega(0.75), 0.0);
  EXPECT_EQ(CutoffSet::omega(0.25), 1.0);
  EXPECT_NO_THROW(build_cutoffs());
}

TEST(AnnularPieces, VanishOnUnitCircle) {
  for (int k : {0, 4, 12}) EXPECT_EQ(eval_mk(0.6, 0.8, k, 0.5), cplx(0.0));
}

TEST(AnnularPieces, PeakValue) {
  for (int k : {1, 6, 14}) {
    const double r = 1.0 - std::ldexp(0.375, -k);
    EXPECT_NEAR(std::abs(eval_mk(r, 0.0, k, 0.0) - cplx(1.0)), 0.0, 1e-15);
  }
}

TEST(AnnularPieces, ReconstructRieszSymbol) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (cplx lam : {cplx(0.0), cplx(0.3), cplx(0.5, 1.0), cplx(1.7)})
    for (int t = 0; t < 2000; ++t) {
      const double x = u(rng), y = u(rng);
      EXPECT_LT(std::abs(riesz_reconstruction(x, y, lam) - riesz_symbol(x * x + y * y, lam)), 1e-8);
    }
}

TEST(MicrolocalPieces, ZeroOutsideSupport) {
  const MicrolocalPiece pc{8, 3, 0.5};
  EXPECT_EQ(eval_mkl(0.5, 0.0, pc), cplx(0.0));
  EXPECT_EQ(eval_mkl(0.999, -0.01, pc), cplx(0.0));
}

TEST(MicrolocalPieces, ArcCenter) {
  for (int k : {6, 10}) {
    const MicrolocalPiece pc{k, 2, 0.0};
    const double r = 1.0 - std::ldexp(0.375, -k), a = 2.0 * kPi * pc.angle();
    EXPECT_NEAR(std::abs(eval_mkl(r * std::cos(a), r * std::sin(a), pc) - cplx(1.0)), 0.0, 1e-12);
  }
}

TEST(MicrolocalPieces, SumOverAnglesRecoversAnnulus) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ua(-0.5, 0.5), us(0.2, 0.7);
  for (int k : {4, 9, 16})
    for (int t = 0; t < 2000; ++t) {
      const double r = 1.0 - std::ldexp(us(rng), -k), a = 2.0 * kPi * ua(rng);
      const cplx lam(0.5, 1.0);
      EXPECT_LT(std::abs(sum_over_l(r * std::cos(a), r * std::sin(a), k, lam) - eval_mk(r * std::cos(a), r * std::sin(a), k, lam)),
                1e-8);
    }
}

TEST(MicrolocalPieces, CaseAIndexRange) {
  EXPECT_EQ(case_a_lmax(6), 0);
  EXPECT_EQ(case_a_lmax(14), 15);
  EXPECT_EQ(case_a_lmax(22), 255);
  EXPECT_EQ(case_a_indices(14).size(), 31u);
  // Every case (a) arc stays inside |xi_2| < xi_1.
  for (int k : {10, 14, 20}) {
    const long lm = case_a_lmax(k);
    EXPECT_LT((lm + 1) / half_power(k), 0.125 + 1e-12);
  }
}

TEST(DerivBounds, ZeroOrderIsSupNorm) {
  for (int k : {6, 10, 14}) {
    const auto rep = verify_deriv_bounds(k, 0, 0.0, 0);
    ASSERT_EQ(rep.size(), 1u);
    EXPECT_LE(rep[0].constant, 1.0 + 1e-12);
    EXPECT_GT(rep[0].constant, 0.9);
  }
}

TEST(DerivBounds, FirstRadialOrderStableAcrossK) {
  for (cplx lam : {cplx(0.0), cplx(0.5, 1.0)}) {
    double lo = kInf, hi = 0.0;
    for (int k = 6; k <= 14; ++k) {
      for (const auto& d : verify_deriv_bounds(k, 1, lam, 1))
        if (d.alpha == 1 && d.beta == 0) {
          EXPECT_TRUE(std::isfinite(d.constant));
          lo = std::min(lo, d.constant);
          hi = std::max(hi, d.constant);
        }
    }
    EXPECT_LE(hi / lo, 2.0);
  }
}

TEST(Kernel, MassVanishesAndL1IsFinite) {
  const KernelReport rep = kernel_mkl({6, 0, 0.5}, 512, 16.0);
  EXPECT_LT(rep.mass, 1e-8);
  EXPECT_LT(rep.frame_origin_symbol, 1e-8);
  EXPECT_TRUE(std::isfinite(rep.l1));
  EXPECT_GT(rep.l1, 0.0);
}

TEST(Kernel, MatchesDirectQuadrature) {
  // For l = 0 the frame is the identity: |K~(y)| = 2^{3k/2} |K(2^k y1, 2^{k/2} y2)|.
  const MicrolocalPiece pc{6, 0, 0.5};
  const KernelReport rep = kernel_mkl(pc, 512, 16.0);
  const OpGrid& K = rep.kernel;
  const double scale = std::pow(2.0, 1.5 * pc.k);
  for (auto [a, b] : std::vector<std::pair<int, int>>{{256, 256}, {259, 254}, {250, 262}}) {
    const double y1 = K.coord(a), y2 = K.coord(b);
    const cplx direct = kernel_direct(pc, std::ldexp(y1, pc.k), std::exp2(0.5 * pc.k) * y2, 800);
    EXPECT_NEAR(std::abs(K.at(0, 0, a, b)), scale * std::abs(direct), 2e-3 * rep.sup) << y1 << "," << y2;
  }
}

TEST(Kernel, RejectsCoarseWindow) { EXPECT_THROW(kernel_mkl({6, 0, 0.5}, 256, 16.0), invalid_input); }

TEST(Kernel, DecayEnvelopeHoldsWithMeasuredConstant) {
  const KernelReport rep = kernel_mkl({7, 0, 0.1}, 512, 16.0);
  const double C = decay_constant(rep, 0.1, 8.0);
  EXPECT_GT(C, 0.0);
  EXPECT_EQ(decay_violations(rep, 0.1, C, 8.0), 0);
  EXPECT_GT(decay_violations(rep, 0.1, 0.01 * C, 8.0, 0.0), 0);
}

TEST(Strips, CenteredStrip) {
  const int k = 12;
  const Strip st = strip_assign(k, 0);
  const double s = std::exp2(-0.5 * k);
  EXPECT_LE(st.lo, -10.0 * s + 1e-15);
  EXPECT_GE(st.hi, 10.0 * s - 1e-15);
}

TEST(Strips, ContainmentAndDistinctness) {
  const int k = 12;
  std::map<int, std::set<long>> bases;
  for (long l : case_a_indices(k)) {
    const Strip st = strip_assign(k, l);
    EXPECT_LE(st.lo, st.jt_lo);
    EXPECT_GE(st.hi, st.jt_hi);
    EXPECT_NEAR((st.hi - st.lo) * std::exp2(0.5 * k), 40.0, 1e-9);
    EXPECT_TRUE(bases[st.subfamily].insert(st.sigma).second) << "duplicate strip in subfamily " << st.subfamily;
  }
  EXPECT_THROW(strip_assign(k, case_a_lmax(k) + 1), invalid_input);
}

TEST(Overlap, FarPointsAndSmallK) {
  EXPECT_EQ(overlap_count(24, 4.5, 0.0), 0);
  EXPECT_EQ(overlap_count(19, 0.0, 1.0), 0);
  EXPECT_EQ(overlap_count(12, 0.0, 0.3), 0);
}

TEST(Overlap, DifferencePointOfSeparatedArcsIsCounted) {
  const int k = 26;
  std::mt19937_64 rng(3);
  const auto [a1, a2] = sample_arc(k, 900, rng);
  const auto [b1, b2] = sample_arc(k, -600, rng);
  const auto pairs = overlap_pairs(k, a1 - b1, a2 - b2);
  bool found = false;
  for (const auto& p : pairs) found = found || (p.l == 900 && p.lp == -600);
  EXPECT_TRUE(found);
}

TEST(Geometry, EqualIndicesGiveZeroOffset) {
  std::mt19937_64 rng(4);
  const GeometryWitness g = geometry_witness(20, 5, 5, 10, rng);
  EXPECT_EQ(g.w1, 0.0);
  EXPECT_EQ(g.w2, 0.0);
}

TEST(Geometry, OffsetLength) {
  std::mt19937_64 rng(5);
  const int k = 24;
  const double d = std::exp2(-0.5 * k);
  for (auto [l, lp] : std::vector<std::pair<long, long>>{{100, -300}, {511, -511}, {0, 7}}) {
    const GeometryWitness g = geometry_witness(k, l, lp, 0, rng);
    EXPECT_NEAR(std::hypot(g.w1, g.w2), 2.0 * std::abs(std::sin(kPi * static_cast<double>(l - lp) * d)), 1e-14);
  }
}

TEST(Geometry, DifferencesStayInTheRectangle) {
  std::mt19937_64 rng(6);
  const GeometryWitness g = geometry_witness(26, 1000, -1000, 1000, rng);
  EXPECT_EQ(g.outside, 0);
  EXPECT_GT(g.max_along, 0.0);
}

TEST(PsiHatTable, MatchesDirectTransform) {
  const PsiHat& ph = PsiHat::instance();
  EXPECT_NEAR(ph(0.0), 1.0, 1e-12);
  for (double eta : {0.1, 0.37, 1.0, 2.5, 7.3}) EXPECT_NEAR(ph(eta), psi_hat_oracle(eta), 1e-9) << eta;
}

TEST(PsiHatTable, CertifiedDecayDominates) {
  const PsiHat& ph = PsiHat::instance();
  for (double x = 0.5; x < 255.0; x *= 1.37) EXPECT_LE(std::abs(ph(x)), ph.decay_bound(x) + 1e-15) << x;
  EXPECT_LT(ph.decay_bound(256.0), 1e-20);
  EXPECT_THROW(ph(300.0), invalid_input);
}

TEST(PsiHatTable, SecondMomentLipschitz) {
  const PsiHat& ph = PsiHat::instance();
  const double M = ph.second_moment_bound();
  for (double x : {0.1, 0.3, 0.8})
    for (double y : {0.05, 0.5, 1.1}) EXPECT_LE(std::abs(ph(x) - ph(y)), 0.5 * M * std::abs(x * x - y * y) + 1e-12);
}

TEST(MultiplierSum, AxisPointCancels) {
  const MultiplierSumReport r = multiplier_sum_bound(4, 1.0, 0.0);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.terms, 0);
}

TEST(MultiplierSum, SectorMembersAreSkipped) {
  // xi normal to e^0_m lies in Gamma_0, so the l = 0 term drops out entirely.
  const SectorSet sec(4);
  EXPECT_TRUE(sec.contains(0, 0.0, 1.0));
  const MultiplierSumReport r = multiplier_sum_bound(4, 0.0, 1.0, &sec);
  EXPECT_TRUE(std::isfinite(r.value));
}

TEST(MultiplierSum, FiniteWithCertifiedTails) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ua(0.0, 2.0 * kPi);
  for (int m : {4, 7, 10}) {
    double sup = 0.0;
    for (int t = 0; t < 300; ++t) {
      const double a = ua(rng);
      const MultiplierSumReport r = multiplier_sum_bound(m, std::cos(a), std::sin(a));
      EXPECT_TRUE(std::isfinite(r.value));
      EXPECT_LT(r.tail_bound, 1e-12);
      sup = std::max(sup, r.value);
    }
    EXPECT_GT(sup, 1.0);
    EXPECT_LT(sup, 4.0);
  }
}

TEST(MultiplierSum, RejectsDegenerateInput) {
  EXPECT_THROW(multiplier_sum_bound(1, 1.0, 0.5), invalid_input);
  EXPECT_THROW(multiplier_sum_bound(4, 0.0, 0.0), invalid_input);
}

#include <gtest/gtest.h>

#include "ncflab/optorus.hpp"

using namespace ncflab;

namespace {

OpGrid random_grid(int G, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  OpGrid f(G, n);
  for (auto& v : f.data) v = cplx(nd(rng), nd(rng));
  return f;
}

// Naive 2D DFT of one plane, O(G^4); only for small G.
std::vector<cplx> naive_dft(const OpGrid& f, int i, int j) {
  const int G = f.G;
  std::vector<cplx> out(static_cast<size_t>(G) * G);
  for (int u = 0; u < G; ++u)
    for (int v = 0; v < G; ++v) {
      cplx acc = 0.0;
      for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b) acc += f.at(i, j, a, b) * std::polar(1.0, -2.0 * kPi * (u * a + v * b) / G);
      out[static_cast<size_t>(u) * G + v] = acc / static_cast<double>(G);
    }
  return out;
}

}  // namespace

TEST(OpFft, DeltaGivesConstant) {
  OpGrid d(16, 2);
  d.at(0, 0, 0, 0) = 1.0;
  d.at(1, 1, 0, 0) = 1.0;
  const OpGrid h = op_fft(d);
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      EXPECT_NEAR(std::abs(h.at(0, 0, a, b) - cplx(1.0 / 16)), 0.0, 1e-15);
      EXPECT_NEAR(std::abs(h.at(0, 1, a, b)), 0.0, 1e-15);
    }
}

TEST(OpFft, MatchesNaiveTransform) {
  const OpGrid f = random_grid(8, 2, 3);
  const OpGrid h = op_fft(f);
  const std::vector<cplx> ref = naive_dft(f, 1, 0);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) EXPECT_LT(std::abs(h.at(1, 0, a, b) - ref[a * 8 + b]), 1e-12);
}

TEST(OpFft, UnitaryAndInvertible) {
  const OpGrid f = random_grid(64, 3, 5);
  const OpGrid h = op_fft(f);
  EXPECT_NEAR(l2_norm_freq(h), lp_norm_grid(f, 2.0), 1e-10 * lp_norm_grid(f, 2.0));
  EXPECT_LT(max_abs_diff(op_ifft(h), f), 1e-12);
}

TEST(OpFft, ParsevalPairing) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const OpGrid f = random_grid(32, 2, 2 * s), g = random_grid(32, 2, 2 * s + 1);
    const cplx lhs = pairing(g, f), rhs = pairing_freq(op_fft(g), op_fft(f));
    EXPECT_LT(std::abs(lhs - rhs), 1e-10 * std::abs(lhs) + 1e-12);
  }
}

TEST(ApplyMultiplier, IdentitySymbol) {
  const OpGrid f = random_grid(32, 2, 9);
  const MultiplierFn one{[](double, double) { return cplx(1.0); }, "one"};
  EXPECT_LT(max_abs_diff(apply_multiplier(f, one), f), 1e-12);
}

TEST(ApplyMultiplier, ZeroFrequencyProjectionIsMean) {
  const OpGrid f = random_grid(16, 2, 10);
  const MultiplierFn chi0{[](double x, double y) { return cplx(x == 0.0 && y == 0.0 ? 1.0 : 0.0); }, "chi0"};
  const OpGrid out = apply_multiplier(f, chi0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      cplx mean = 0.0;
      for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) mean += f.at(i, j, a, b);
      mean /= 256.0;
      for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) EXPECT_LT(std::abs(out.at(i, j, a, b) - mean), 1e-13);
    }
}

TEST(ApplyMultiplier, CompositionIsProduct) {
  const OpGrid f = random_grid(32, 2, 11);
  const MultiplierFn m1{[](double x, double y) { return cplx(std::cos(x), y); }, "m1"};
  const MultiplierFn m2{[](double x, double y) { return cplx(1.0 / (1.0 + x * x + y * y), 0.5); }, "m2"};
  const MultiplierFn m12{[&](double x, double y) { return m1.eval(x, y) * m2.eval(x, y); }, "m12"};
  EXPECT_LT(max_abs_diff(apply_multiplier(apply_multiplier(f, m2), m1), apply_multiplier(f, m12)), 1e-10);
}

TEST(ApplyMultiplier, RejectsNonFiniteSymbol) {
  const OpGrid f = random_grid(8, 1, 1);
  const MultiplierFn bad{[](double x, double) { return cplx(1.0 / x); }, "bad"};
  EXPECT_THROW(apply_multiplier(f, bad), invalid_input);
}

TEST(BochnerRieszGrid, ConstantIsFixed) {
  OpGrid f(16, 2);
  for (auto& v : f.data) v = cplx(0.3, -1.0);
  EXPECT_LT(max_abs_diff(bochner_riesz_grid(f, 1.5, 0.7), f), 1e-13);
}

TEST(BochnerRieszGrid, SingleModeScaledByThreeQuarters) {
  OpGrid fh(16, 1);
  fh.at(0, 0, 1, 0) = 1.0;
  const OpGrid f = op_ifft(fh);
  const OpGrid out = op_fft(bochner_riesz_grid(f, 2.0, 1.0));
  EXPECT_NEAR(std::abs(out.at(0, 0, 1, 0) - cplx(0.75)), 0.0, 1e-14);
}

TEST(BochnerRieszGrid, LambdaZeroIsSharpBallTruncation) {
  const OpGrid f = random_grid(32, 1, 12);
  const double R = 5.5;  // between shells 30 and 31.25 of |m|^2
  OpGrid fh = op_fft(f);
  for (int a = 0; a < 32; ++a)
    for (int b = 0; b < 32; ++b) {
      const int m1 = fft::signed_freq(a, 32), m2 = fft::signed_freq(b, 32);
      if (m1 * m1 + m2 * m2 >= R * R) fh.at(0, 0, a, b) = 0.0;
    }
  EXPECT_LT(max_abs_diff(bochner_riesz_grid(f, R, 0.0), op_ifft(fh)), 1e-12);
}

TEST(LpNormGrid, IdentityField) {
  OpGrid f(16, 3);
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) f.set_sample(a, b, MatElem::Identity(3, 3));
  for (double p : {1.0, 2.0, 3.0, 4.0, kInf}) EXPECT_NEAR(lp_norm_grid(f, p), 1.0, 1e-13);
}

TEST(LpNormGrid, ScalarIsDiscreteNorm) {
  const OpGrid f = random_grid(16, 1, 13);
  for (double p : {1.0, 2.0, 3.0, 4.0}) {
    double acc = 0.0;
    for (const auto& v : f.data) acc += std::pow(std::abs(v), p);
    EXPECT_NEAR(lp_norm_grid(f, p), std::pow(acc / 256.0, 1.0 / p), 1e-12);
  }
}

TEST(LpNormGrid, MatrixFourNormMatchesSchatten) {
  const OpGrid f = random_grid(8, 3, 14);
  double acc = 0.0;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) acc += std::pow(schatten_norm(f.sample(a, b), 4.0), 4.0);
  EXPECT_NEAR(lp_norm_grid(f, 4.0), std::pow(acc / 64.0, 0.25), 1e-12);
}

TEST(Transfer, ConstantPolynomial) {
  const RationalAngle a(1, 3);
  const OpGrid F = transfer_tilde(QTorusPoly::monomial(a, {0, 0}, 2.0), 8);
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) EXPECT_LT((F.sample(x, y) - 2.0 * MatElem::Identity(3, 3)).norm(), 1e-14);
}

TEST(Transfer, SingleModeIsSingleFrequency) {
  const RationalAngle a(1, 3);
  const OpGrid Fh = op_fft(transfer_tilde(QTorusPoly::monomial(a, {1, 0}), 16));
  double off = 0.0, on = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int x = 0; x < 16; ++x)
        for (int y = 0; y < 16; ++y) (x == 1 && y == 0 ? on : off) += std::norm(Fh.at(i, j, x, y));
  EXPECT_GT(on, 1.0);
  EXPECT_LT(off, 1e-26);
}

TEST(Transfer, SamplesAreTwistedRepresentations) {
  std::mt19937_64 rng(15);
  const RationalAngle a(2, 7);
  const QTorusPoly f = random_qtorus_poly(a, 3, rng);
  const OpGrid F = transfer_tilde(f, 16);
  for (int x : {0, 5, 11})
    for (int y : {3, 14})
      EXPECT_LT((F.sample(x, y) - twisted_rep(f, x / 16.0, y / 16.0)).norm(), 1e-11);
}

TEST(Transfer, BochnerRieszCommutes) {
  for (auto [p, q] : std::vector<std::pair<long, long>>{{1, 3}, {1, 5}, {2, 7}}) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(q));
    const RationalAngle a(p, q);
    const QTorusPoly f = random_qtorus_poly(a, 5, rng);
    for (double R : {2.5, 4.0, 9.0}) {
      const OpGrid lhs = bochner_riesz_grid(transfer_tilde(f, 32), R, 0.5);
      const OpGrid rhs = transfer_tilde(bochner_riesz_qt(f, R, 0.5), 32);
      EXPECT_LT(max_abs_diff(lhs, rhs), 1e-10);
    }
  }
}

TEST(Transfer, PullBackInverts) {
  std::mt19937_64 rng(16);
  const RationalAngle a(1, 5);
  const QTorusPoly f = random_qtorus_poly(a, 4, rng);
  const QTorusPoly g = pull_back(transfer_tilde(f, 16, 2), a, 1e-13);
  EXPECT_EQ(g.coeffs.size(), f.coeffs.size());
  for (const auto& [k, c] : f.coeffs) EXPECT_LT(std::abs(g.coeff(k) - c), 1e-12);
}

TEST(Transfer, RejectsWideSupport) {
  std::mt19937_64 rng(1);
  const QTorusPoly f = random_qtorus_poly({1, 3}, 8, rng);
  EXPECT_THROW(transfer_tilde(f, 16), invalid_input);
  EXPECT_THROW(transfer_tilde(f, 24), invalid_input);
}

TEST(TransferenceCheck, IdentitySymbolHasNoGap) {
  std::mt19937_64 rng(2);
  const OpGrid F = random_matrix_field(32, 2, 6, rng);
  const MultiplierFn one{[](double, double) { return cplx(1.0); }, "one"};
  EXPECT_LT(transference_check(one, F), 1e-13);
}

TEST(TransferenceCheck, BochnerRieszOnBandLimitedField) {
  std::mt19937_64 rng(3);
  const OpGrid F = random_matrix_field(32, 2, 8, rng);
  for (int periods : {2, 4}) EXPECT_LE(transference_check(riesz_multiplier(6.5, 0.5), F, periods), 1e-8);
}

TEST(TransferenceCheck, DilatedSymbolMatchesDilatedRadius) {
  std::mt19937_64 rng(4);
  const OpGrid F = random_matrix_field(32, 1, 8, rng);
  const double R = 6.0, s = 2.0;
  const MultiplierFn dilated{[&](double x, double y) { return riesz_symbol((x * x + y * y) / (s * s * R * R), 0.5); },
                             "dilated"};
  EXPECT_LT(max_abs_diff(apply_multiplier(F, dilated), bochner_riesz_grid(F, s * R, 0.5)), 1e-13);
  EXPECT_LE(transference_check(dilated, F), 1e-8);
}

TEST(TransferenceCheck, RejectsNyquistEnergy) {
  OpGrid F(16, 1);
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) F.at(0, 0, a, b) = (a % 2 ? -1.0 : 1.0);
  const MultiplierFn one{[](double, double) { return cplx(1.0); }, "one"};
  EXPECT_THROW(transference_check(one, F), invalid_input);
}

TEST(RatioSweep, SmoothFieldConverges) {
  std::mt19937_64 rng(5);
  const std::vector<FamilyMember> fam{{"smooth", random_matrix_field(64, 2, 4, rng)}};
  const SweepResult r = riesz_ratio_sweep(fam, 4.0, 0.25, {8, 64, 512, 4096});
  ASSERT_EQ(r.rows.size(), 4u);
  for (size_t i = 1; i < r.rows.size(); ++i) EXPECT_LT(r.rows[i].error_norm, r.rows[i - 1].error_norm);
  EXPECT_NEAR(r.rows.back().ratio, 1.0, 1e-5);
  EXPECT_LT(r.rows.back().error_norm, 1e-5);
}

TEST(RatioSweep, SkipsZeroMembers) {
  const std::vector<FamilyMember> fam{{"zero", OpGrid(8, 1)}};
  const SweepResult r = riesz_ratio_sweep(fam, 2.0, 0.5, {2.0});
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Families, RingIsUnimodularOnShell) {
  const OpGrid f = ring_sum(64, 10.0, 1.0);
  const OpGrid fh = op_fft(f);
  for (int a = 0; a < 64; ++a)
    for (int b = 0; b < 64; ++b) {
      const double r = std::hypot(fft::signed_freq(a, 64), fft::signed_freq(b, 64));
      const double expect = (r > 9.0 && r <= 11.0) ? 1.0 : 0.0;
      EXPECT_NEAR(std::abs(fh.at(0, 0, a, b)), expect, 1e-14);
    }
}

TEST(Families, DiagonalEmbedding) {
  const OpGrid a = random_grid(8, 1, 1), b = random_grid(8, 1, 2);
  const OpGrid d = diagonal_embedding({a, b});
  EXPECT_EQ(d.n, 2);
  EXPECT_EQ(d.at(1, 1, 3, 4), b.at(0, 0, 3, 4));
  EXPECT_EQ(d.at(0, 1, 3, 4), cplx(0.0));
}

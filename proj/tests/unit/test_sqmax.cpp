#include <gtest/gtest.h>

#include "ncflab/sqmax.hpp"

using namespace ncflab;

namespace {

MatElem diag(std::initializer_list<double> v) {
  MatElem d = MatElem::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i, i) = x, ++i;
  return d;
}

double grid_two_norm_sq(const OpGrid& f) { return std::pow(lp_norm_grid(f, 2.0), 2); }

}  // namespace

TEST(SquareFunction, SingleItem) {
  std::mt19937_64 rng(1);
  const MatElem x = random_gaussian(4, rng);
  for (double p : {1.0, 2.0, 3.0, 6.0}) {
    EXPECT_NEAR(col_sq_norm(OpSequence{x}, p), schatten_norm(x, p), 1e-10 * schatten_norm(x, p));
    EXPECT_NEAR(row_sq_norm(OpSequence{x}, p), schatten_norm(x, p), 1e-10 * schatten_norm(x, p));
  }
}

TEST(SquareFunction, ScalarItemsGiveEuclideanNorm) {
  MatElem a(1, 1), b(1, 1);
  a(0, 0) = 3.0;
  b(0, 0) = cplx(0.0, 4.0);
  const RcNorm r = rc_norm(OpSequence{a, b}, 3.0);
  EXPECT_NEAR(r.row, 5.0, 1e-12);
  EXPECT_NEAR(r.col, 5.0, 1e-12);
  EXPECT_NEAR(r.value, 5.0, 1e-12);
}

TEST(SquareFunction, RowAndColumnDifferExceptAtTwo) {
  std::mt19937_64 rng(2);
  OpSequence s;
  for (int i = 0; i < 3; ++i) s.push_back(random_gaussian(4, rng));
  EXPECT_GT(std::abs(row_sq_norm(s, 4.0) - col_sq_norm(s, 4.0)), 1e-6);
  EXPECT_NEAR(row_sq_norm(s, 2.0), col_sq_norm(s, 2.0), 1e-12);
}

TEST(SquareFunction, ColumnNormMatchesMatrixPowerOracle) {
  std::mt19937_64 rng(3);
  OpSequence s;
  MatElem sum = MatElem::Zero(3, 3);
  for (int i = 0; i < 4; ++i) {
    s.push_back(random_gaussian(3, rng));
    sum += s.back().adjoint() * s.back();
  }
  sum = 0.5 * (sum + sum.adjoint());
  EXPECT_NEAR(col_sq_norm(s, 3.0), schatten_norm(mat_power(sum, 0.5), 3.0), 1e-10);
}

TEST(SquareFunction, RcUsesMaxAboveTwoAndMinBelow) {
  const RcNorm hi = rc_from(2.0, 3.0, 4.0);
  EXPECT_EQ(hi.value, 3.0);
  EXPECT_TRUE(hi.is_infimum);
  const RcNorm lo = rc_from(2.0, 3.0, 1.5);
  EXPECT_EQ(lo.value, 2.0);
  EXPECT_FALSE(lo.is_infimum);
}

TEST(SquareFunction, RejectsBadInput) {
  EXPECT_THROW(col_sq_norm(OpSequence{}, 2.0), invalid_input);
  EXPECT_THROW(row_sq_norm(OpSequence{MatElem::Identity(2, 2)}, 0.5), invalid_input);
}

TEST(LpProjections, SingleIntervalIsIdentity) {
  std::mt19937_64 rng(4);
  const OpGrid F = random_matrix_field(32, 2, 6, rng);
  const GridSequence ps = lp_projections(F, 32);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_LT(max_abs_diff(ps[0], F), 1e-12);
}

TEST(LpProjections, PiecesSumToInputAndSplitEnergy) {
  std::mt19937_64 rng(5);
  const OpGrid F = random_matrix_field(32, 2, 10, rng);
  const GridSequence ps = lp_projections(F, 4);
  ASSERT_EQ(ps.size(), 8u);
  OpGrid sum(32, 2);
  double energy = 0.0;
  for (const auto& p : ps) {
    for (size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += p.data[i];
    energy += grid_two_norm_sq(p);
  }
  EXPECT_LT(max_abs_diff(sum, F), 1e-12);
  EXPECT_NEAR(energy, grid_two_norm_sq(F), 1e-10 * grid_two_norm_sq(F));
  // At p = 2 the square function norm is the L_2 norm.
  EXPECT_NEAR(col_sq_norm(ps, 2.0), lp_norm_grid(F, 2.0), 1e-10);
}

TEST(LpProjections, RejectsNonDivisor) {
  EXPECT_THROW(lp_projections(OpGrid(32, 1), 5), invalid_input);
}

TEST(MaxNorm, EqualItems) {
  std::mt19937_64 rng(6);
  const MatElem x = random_psd(4, rng);
  const MaxNormEstimate e = maxnorm_positive(OpSequence{x, x, x}, 3.0);
  EXPECT_NEAR(e.lower, schatten_norm(x, 3.0), 1e-8);
  EXPECT_NEAR(e.upper, schatten_norm(x, 3.0), 1e-8);
}

TEST(MaxNorm, CommutingItemsAreExact) {
  const OpSequence xs{diag({1.0, 4.0, 0.0}), diag({3.0, 1.0, 0.5}), diag({2.0, 2.0, 2.0})};
  const double expect = schatten_norm(diag({3.0, 4.0, 2.0}), 2.5);
  const MaxNormEstimate e = maxnorm_positive(xs, 2.5);
  EXPECT_NEAR(e.lower, expect, 1e-10);
  EXPECT_NEAR(e.upper, expect, 1e-10);
}

TEST(MaxNorm, OneByOneIsTheMaximum) {
  const MaxNormEstimate e = maxnorm_positive(OpSequence{diag({0.5}), diag({2.0}), diag({1.0})}, 4.0);
  EXPECT_NEAR(e.lower, 2.0, 1e-14);
  EXPECT_NEAR(e.upper, 2.0, 1e-12);
}

TEST(MaxNorm, BoundsAreOrderedAndCertified) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    OpSequence xs;
    for (int i = 0; i < 4; ++i) xs.push_back(random_psd(3, rng, 1 + i % 3));
    const double p = 1.0 + t * 0.5;
    const MaxNormEstimate e = maxnorm_positive(xs, p, 11, 60);
    EXPECT_LE(e.lower, e.upper * (1.0 + 1e-10));
    for (const auto& x : xs) EXPECT_TRUE(psd_leq(x, e.majorant, 1e-8));
    double best = 0.0;
    for (const auto& x : xs) best = std::max(best, schatten_norm(x, p));
    EXPECT_GE(e.upper, best * (1.0 - 1e-10));
    for (size_t i = 1; i < e.lower_trace.size(); ++i) EXPECT_GE(e.lower_trace[i], e.lower_trace[i - 1]);
  }
}

TEST(MaxNorm, RejectsNonPositiveItems) {
  EXPECT_THROW(maxnorm_positive(OpSequence{diag({1.0, -1.0})}, 2.0), invalid_input);
  EXPECT_THROW(maxnorm_positive(OpSequence{}, 2.0), invalid_input);
}

TEST(Fuzz, TraceCauchySchwarzHolds) {
  const FuzzReport r = ineq_fuzz("trace-cs", 10000, 9, 4);
  EXPECT_EQ(r.violations, 0);
  EXPECT_GE(r.min_scaled_slack, -1e-10);
}

TEST(Fuzz, AllKindsHoldOnSmallRuns) {
  for (const std::string& kind : fuzz_kinds()) {
    const FuzzReport r = ineq_fuzz(kind, 200, 13, 3);
    EXPECT_EQ(r.violations, 0) << kind << " slack " << r.min_scaled_slack;
  }
}

TEST(Fuzz, KhintchineSingleTermIsOne) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 20; ++t) EXPECT_NEAR(detail::trial_khintchine(3, rng, 1).ratio, 1.0, 1e-12);
}

TEST(Fuzz, RejectsUnknownKind) {
  EXPECT_THROW(ineq_fuzz("triangle", 1, 1, 2), invalid_input);
  EXPECT_THROW(ineq_fuzz("trace-cs", 1, 1, 0), invalid_input);
}

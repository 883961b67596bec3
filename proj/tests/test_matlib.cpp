#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "support.hpp"
#include "ulfe/errors.hpp"
#include "ulfe/matlib.hpp"

using namespace ulfe;
using ulfe::testing::random_hurwitz;
using ulfe::testing::random_mat;
using ulfe::testing::random_rank;

namespace {

double max_abs_diff(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(MakeMat, RowMajorAndFinite) {
  const Mat m = make_mat(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m(0, 2), 3.0);
  EXPECT_EQ(m(1, 0), 4.0);
  EXPECT_THROW(make_mat(2, 2, {1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(make_mat(1, 2, {1, std::numeric_limits<double>::quiet_NaN()}), NonFiniteValue);
}

TEST(PseudoInverse, OrthonormalColumn) {
  const Mat s = make_mat(2, 1, {0, 1});
  const Mat p = pseudo_inverse(s);
  EXPECT_EQ(p.rows(), 1);
  EXPECT_NEAR(p(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(p(0, 1), 1.0, 1e-15);
}

TEST(PseudoInverse, Identity) {
  EXPECT_LT(max_abs_diff(pseudo_inverse(Mat::Identity(3, 3)), Mat::Identity(3, 3)), 1e-15);
}

TEST(PseudoInverse, FullColumnRankIsLeftInverse) {
  std::mt19937_64 gen(11);
  const Mat s = random_mat(gen, 4, 2);
  EXPECT_LT(max_abs_diff(pseudo_inverse(s) * s, Mat::Identity(2, 2)), 1e-10);
  EXPECT_LT(max_abs_diff(s * pseudo_inverse(s) * s, s), 1e-10);
}

TEST(PseudoInverse, RejectsEmptyAndBadTolerance) {
  EXPECT_THROW(pseudo_inverse(Mat(0, 3)), std::invalid_argument);
  EXPECT_THROW(pseudo_inverse(Mat::Identity(2, 2), 0.0), std::invalid_argument);
}

TEST(PseudoInverse, PenroseIdentitiesAcrossRanks) {
  std::mt19937_64 gen(12);
  for (Eigen::Index r : {3, 5})
    for (Eigen::Index c : {2, 4})
      for (Eigen::Index k = 0; k <= std::min(r, c); ++k) {
        const Mat s = random_rank(gen, r, c, k);
        const Mat p = pseudo_inverse(s);
        const double tol = 1e-9 * (1.0 + s.norm()) * (1.0 + p.norm());
        EXPECT_LT(max_abs_diff(s * p * s, s), tol) << r << "x" << c << " rank " << k;
        EXPECT_LT(max_abs_diff(p * s * p, p), tol);
        EXPECT_LT(max_abs_diff((s * p).transpose(), s * p), tol);
        EXPECT_LT(max_abs_diff((p * s).transpose(), p * s), tol);
      }
}

TEST(RankFactorization, IdentityReproduced) {
  const auto f = rank_factorization(Mat::Identity(2, 2));
  EXPECT_EQ(f.q.cols(), 2);
  EXPECT_LT(max_abs_diff(f.q * f.r, Mat::Identity(2, 2)), 1e-14);
}

TEST(RankFactorization, RankOne) {
  const Mat f = make_mat(2, 2, {1, 2, 2, 4});
  const auto qr = rank_factorization(f);
  EXPECT_EQ(qr.q.cols(), 1);
  EXPECT_EQ(qr.r.rows(), 1);
  EXPECT_LT(max_abs_diff(qr.q * qr.r, f), 1e-12);
}

TEST(RankFactorization, ZeroMatrixGivesEmptyFactors) {
  const auto qr = rank_factorization(Mat::Zero(3, 2));
  EXPECT_EQ(qr.q.rows(), 3);
  EXPECT_EQ(qr.q.cols(), 0);
  EXPECT_EQ(qr.r.rows(), 0);
  EXPECT_EQ(qr.r.cols(), 2);
}

TEST(RankFactorization, FactorsHaveFullRank) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index r = 2 + trial % 4, c = 1 + trial % 3;
    const Eigen::Index k = trial % (std::min(r, c) + 1);
    const Mat f = random_rank(gen, r, c, k);
    const auto qr = rank_factorization(f);
    EXPECT_EQ(qr.q.cols(), k);
    EXPECT_LT(max_abs_diff(qr.q * qr.r, f), 1e-10 * (1.0 + f.norm()));
    EXPECT_EQ(numerical_rank(qr.q), qr.q.cols());
    EXPECT_EQ(numerical_rank(qr.r), qr.r.rows());
  }
}

TEST(LeftInverse, LeastSquares) {
  const Mat l = left_inverse(make_mat(2, 1, {1, 1}));
  EXPECT_NEAR(l(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(l(0, 1), 0.5, 1e-15);
  EXPECT_LT(max_abs_diff(left_inverse(Mat::Identity(4, 4)), Mat::Identity(4, 4)), 1e-15);
}

TEST(LeftInverse, RankDeficientThrows) {
  EXPECT_THROW(left_inverse(make_mat(2, 2, {1, 2, 2, 4})), ColumnRankDeficient);
}

TEST(LeftInverse, ZeroColumns) {
  const Mat l = left_inverse(Mat(3, 0));
  EXPECT_EQ(l.rows(), 0);
  EXPECT_EQ(l.cols(), 3);
}

TEST(Lyapunov, ScalarDecoupled) {
  const Mat p = solve_lyapunov(-Mat::Identity(2, 2), Mat::Identity(2, 2));
  EXPECT_LT(max_abs_diff(p, 0.5 * Mat::Identity(2, 2)), 1e-14);
}

TEST(Lyapunov, ResidualUpperTriangular) {
  const Mat a = make_mat(2, 2, {-1, 1, 0, -2});
  const Mat q = Mat::Identity(2, 2);
  const Mat p = solve_lyapunov(a, q);
  EXPECT_LT((a.transpose() * p + p * a + q).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(max_abs_diff(p, p.transpose()), 1e-15);
}

TEST(Lyapunov, RandomResidual) {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat a = random_hurwitz(gen, 6, 0.1);
    Mat q = random_mat(gen, 6, 6);
    q = (q + q.transpose()).eval();
    const Mat p = solve_lyapunov(a, q);
    EXPECT_LT((a.transpose() * p + p * a + q).norm(), 1e-8 * q.norm());
  }
}

TEST(Lyapunov, NotHurwitzThrows) {
  EXPECT_THROW(solve_lyapunov(make_mat(2, 2, {0, 1, -1, 0}), Mat::Identity(2, 2)), NotHurwitz);
}

TEST(Hurwitz, ThresholdExcludesMarginal) {
  EXPECT_FALSE(is_hurwitz(Mat::Zero(1, 1)));
  EXPECT_FALSE(is_hurwitz(Mat::Constant(1, 1, -1e-10)));
  EXPECT_TRUE(is_hurwitz(Mat::Constant(1, 1, -1e-8)));
}

TEST(HinfNorm, FirstOrderLowPass) {
  const Mat a = Mat::Constant(1, 1, -1.0);
  EXPECT_NEAR(hinf_norm(a, Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 1.0)), 1.0, 1e-6);
  EXPECT_NEAR(hinf_norm(a, Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 3.0)), 6.0, 6e-6);
}

TEST(HinfNorm, ResonantPeakMatchesClosedForm) {
  // 1 / (s^2 + 2 z s + 1) peaks at 1 / (2 z sqrt(1 - z^2)).
  const double z = 0.05;
  const Mat a = make_mat(2, 2, {0, 1, -1, -2 * z});
  const Mat b = make_mat(2, 1, {0, 1});
  const Mat c = make_mat(1, 2, {1, 0});
  EXPECT_NEAR(hinf_norm(a, b, c, 1e-9), 1.0 / (2 * z * std::sqrt(1 - z * z)), 1e-6);
}

TEST(HinfNorm, MatchesDenseGrid) {
  std::mt19937_64 gen(15);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat a = random_hurwitz(gen, 5, 0.05);
    const Mat b = random_mat(gen, 5, 2), c = random_mat(gen, 2, 5);
    const double h = hinf_norm(a, b, c);
    const double g = ulfe::testing::hinf_grid(a, b, c, 1e-3, 1e3, 10000);
    EXPECT_NEAR(h, g, 0.01 * g);
    EXPECT_GE(h, g * (1 - 1e-9));
  }
}

TEST(HinfNorm, UpperBoundsEverySample) {
  std::mt19937_64 gen(16);
  const Mat a = random_hurwitz(gen, 4, 0.1);
  const Mat b = random_mat(gen, 4, 2), c = random_mat(gen, 3, 4);
  const double h = hinf_norm(a, b, c);
  for (double w = 1e-3; w < 1e3; w *= 1.07) EXPECT_LE(sigma_max_at(a, b, c, w), h * (1 + 1e-9));
}

TEST(HinfNorm, NotHurwitzThrows) {
  EXPECT_THROW(hinf_norm(Mat::Zero(1, 1), Mat::Ones(1, 1), Mat::Ones(1, 1)), NotHurwitz);
}

TEST(H2Norm, FirstOrderClosedForm) {
  const Mat a = Mat::Constant(1, 1, -1.0), one = Mat::Constant(1, 1, 1.0);
  EXPECT_NEAR(h2_norm(a, one, one), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_EQ(h2_norm(a, Mat::Zero(1, 1), one), 0.0);
}

TEST(H2Norm, MatchesQuadrature) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat a = random_hurwitz(gen, 4, 0.2);
    const Mat b = random_mat(gen, 4, 2), c = random_mat(gen, 2, 4);
    const double h = h2_norm(a, b, c);
    EXPECT_NEAR(h, ulfe::testing::h2_quadrature(a, b, c), 0.01 * h);
  }
}

TEST(H2Norm, GramianRoutesAgree) {
  std::mt19937_64 gen(18);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat a = random_hurwitz(gen, 2 + trial % 6, 0.05);
    const Mat b = random_mat(gen, a.rows(), 1 + trial % 3);
    const Mat c = random_mat(gen, 1 + trial % 2, a.rows());
    const double h1 = h2_norm(a, b, c), h2 = h2_norm_observability(a, b, c);
    EXPECT_NEAR(h1, h2, 1e-8 * (1.0 + h1));
  }
}

TEST(Stacking, ZeroSizedBlocks) {
  const Mat v = vstack({Mat(0, 3), Mat::Ones(2, 3)});
  EXPECT_EQ(v.rows(), 2);
  const Mat h = hstack({Mat(2, 0), Mat::Ones(2, 1)});
  EXPECT_EQ(h.cols(), 1);
  EXPECT_THROW(vstack({Mat::Ones(1, 2), Mat::Ones(1, 3)}), std::invalid_argument);
}

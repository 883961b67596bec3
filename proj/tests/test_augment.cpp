#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "ulfe/augment.hpp"
#include "ulfe/errors.hpp"
#include "ulfe/manipulator.hpp"

using namespace ulfe;
using ulfe::testing::random_mat;

namespace {

PlantModel small_all_channels(std::mt19937_64& gen) {
  // n = 2 with one nonlinearity, one complementary process fault and one
  // sensor fault.
  PlantModel p = make_plant(random_mat(gen, 2, 2), random_mat(gen, 2, 2));
  p.B = random_mat(gen, 2, 1);
  p.S = make_mat(2, 1, {1, 0});
  p.V = Mat::Identity(2, 2);
  p.Fx = make_mat(2, 1, {1, 1});  // aligned part [1, 0], complement [0, 1]
  p.Fy = random_mat(gen, 2, 1);
  p.D = random_mat(gen, 2, 1);
  p.g = [](const Vec& vx, const Vec&, double) -> Vec { return Vec::Constant(1, std::sin(vx(0))); };
  return p;
}

}  // namespace

TEST(BuildAugmented, ManipulatorDimensions) {
  const auto aug = build_augmented(transform(manipulator::plant()), UltraLocalOrders::uniform(4));
  EXPECT_EQ(aug.n_z, 12);
  EXPECT_EQ(aug.D_a.rows(), 12);
  EXPECT_EQ(aug.D_a.cols(), 2);
  EXPECT_EQ(aug.Cbar_a.rows(), 6);
}

TEST(BuildAugmented, NoChannelsDegeneratesToPlant) {
  std::mt19937_64 gen(31);
  PlantModel p = make_plant(random_mat(gen, 3, 3), random_mat(gen, 2, 3));
  p.B = random_mat(gen, 3, 1);
  const auto aug = build_augmented(transform(p), UltraLocalOrders::uniform(3));
  EXPECT_EQ(aug.n_z, 3);
  EXPECT_EQ(aug.A_a, p.A);
  EXPECT_EQ(aug.C_a, p.C);
  EXPECT_EQ(aug.B_a, p.B);
  EXPECT_EQ(aug.D_a.cols(), 0);
}

TEST(BuildAugmented, HandAssembledSmallInstance) {
  std::mt19937_64 gen(32);
  const PlantModel p = small_all_channels(gen);
  const auto tp = transform(p);
  ASSERT_EQ(tp.n_fl(), 1);
  const auto aug = build_augmented(tp, UltraLocalOrders::uniform(2));
  ASSERT_EQ(aug.n_z, 8);
  // x_a = [x1 x2 | b1 b1' | b2 b2' | b3 b3'].
  Mat a = Mat::Zero(8, 8);
  a.topLeftCorner(2, 2) = p.A;
  a.block(0, 2, 2, 1) = p.S;
  a.block(0, 4, 2, 1) = tp.Q2;
  a(2, 3) = 1;
  a(4, 5) = 1;
  a(6, 7) = 1;
  EXPECT_EQ(aug.A_a, a);
  Mat c = Mat::Zero(2, 8);
  c.leftCols(2) = p.C;
  c.col(6) = p.Fy;
  EXPECT_EQ(aug.C_a, c);
  Mat d = Mat::Zero(8, 4);
  d.block(0, 0, 2, 1) = p.D;
  d(3, 1) = 1;
  d(5, 2) = 1;
  d(7, 3) = 1;
  EXPECT_EQ(aug.D_a, d);
}

TEST(BuildAugmented, OrderOneChainsTakeDisturbanceDirectly) {
  std::mt19937_64 gen(33);
  const auto tp = transform(small_all_channels(gen));
  const auto aug = build_augmented(tp, {1, 1, 1});
  EXPECT_EQ(aug.n_z, 5);
  EXPECT_EQ(aug.D_a(2, 1), 1.0);
  EXPECT_EQ(aug.D_a(3, 2), 1.0);
  EXPECT_EQ(aug.D_a(4, 3), 1.0);
  EXPECT_TRUE(aug.A_a.bottomRightCorner(3, 3).isZero(0.0));
}

TEST(BuildAugmented, StateDimensionFormula) {
  std::mt19937_64 gen(34);
  const auto tp = transform(small_all_channels(gen));
  for (int r1 = 1; r1 <= 4; ++r1)
    for (int r2 = 1; r2 <= 3; ++r2)
      for (int r3 = 1; r3 <= 3; ++r3) {
        const auto aug = build_augmented(tp, {r1, r2, r3});
        EXPECT_EQ(aug.n_z, 2 + r1 + r2 + r3);
      }
  EXPECT_THROW(build_augmented(tp, {0, 1, 1}), std::invalid_argument);
}

TEST(BuildAugmented, SelectorsRecoverComponents) {
  std::mt19937_64 gen(35);
  const auto tp = transform(small_all_channels(gen));
  const auto aug = build_augmented(tp, {3, 2, 2});
  const Vec x = random_mat(gen, 2, 1), b1 = random_mat(gen, 3, 1), b2 = random_mat(gen, 2, 1),
            b3 = random_mat(gen, 2, 1);
  Vec xa(aug.n_z);
  xa << x, b1, b2, b3;
  Vec expect(5);
  expect << x, b1(0), b2(0), b3(0);
  EXPECT_EQ(aug.Cbar_a * xa, expect);
}

TEST(BuildAugmented, AugmentedPairDetectable) {
  // (A, C) observable, F_y = 0, every channel present: PBH rank test at the
  // chain eigenvalue 0 must have full column rank.
  std::mt19937_64 gen(36);
  for (int trial = 0; trial < 10; ++trial) {
    PlantModel p = small_all_channels(gen);
    p.Fy = Mat(2, 0);
    const auto aug = build_augmented(transform(p), UltraLocalOrders::uniform(2));
    const Mat pbh = vstack({aug.A_a, aug.C_a});
    EXPECT_EQ(numerical_rank(pbh, 1e-9), aug.n_z);
  }
}

TEST(FaultReconstruction, ExactStateGivesZeroFault) {
  std::mt19937_64 gen(37);
  const PlantModel p = small_all_channels(gen);
  const auto tp = transform(p);
  const auto aug = build_augmented(tp, UltraLocalOrders::uniform(2));
  const Vec x = random_mat(gen, 2, 1), u = random_mat(gen, 1, 1);
  Vec xa = Vec::Zero(aug.n_z);
  xa.head(2) = x;
  xa(2) = eval_nonlinearity(p, x, u, 0.3)(0);
  const auto est = extract_fault_estimates(aug, tp, xa, u, 0.3);
  EXPECT_LT(est.fx.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(est.fy.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FaultReconstruction, RecoversConstructedFaults) {
  std::mt19937_64 gen(38);
  const PlantModel p = small_all_channels(gen);
  const auto tp = transform(p);
  const auto aug = build_augmented(tp, UltraLocalOrders::uniform(2));
  const Vec x = random_mat(gen, 2, 1), u = random_mat(gen, 1, 1);
  const Vec fx = random_mat(gen, 1, 1), fy = random_mat(gen, 1, 1);
  Vec xa = Vec::Zero(aug.n_z);
  xa.head(2) = x;
  xa.segment(2, 1) = eval_nonlinearity(p, x, u, 0.0) + tp.Q1 * tp.R1 * fx;
  xa.segment(4, 1) = tp.R2 * fx;
  xa.segment(6, 1) = fy;
  const auto est = extract_fault_estimates(aug, tp, xa, u, 0.0);
  EXPECT_NEAR(est.fx(0), fx(0), 1e-10);
  EXPECT_NEAR(est.fy(0), fy(0), 1e-10);
}

TEST(FaultReconstruction, ManipulatorLumpedFault) {
  const manipulator::Params prm;
  const PlantModel p = manipulator::plant(prm);
  const auto tp = transform(p);
  const auto aug = build_augmented(tp, UltraLocalOrders::uniform(4));
  Vec x(4);
  x << 0.4, -0.7, 0.3, 0.2;
  Vec u(2), tau_f(2);
  u << 0.3, 0.0;
  tau_f << 0.15, -0.05;
  const Vec fn = manipulator::lumped_fault(prm, x, tau_f);
  Vec xa = Vec::Zero(aug.n_z);
  xa.head(4) = x;
  xa.segment(4, 2) = eval_nonlinearity(p, x, u, 0.0) + fn;
  const auto est = extract_fault_estimates(aug, tp, xa, u, 0.0);
  EXPECT_LT((est.fx - fn).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + fn.norm()));
  EXPECT_EQ(est.fy.size(), 0);
}

TEST(FaultReconstruction, WrongLengthThrows) {
  const auto tp = transform(manipulator::plant());
  const auto aug = build_augmented(tp, UltraLocalOrders::uniform(4));
  EXPECT_THROW(extract_fault_estimates(aug, tp, Vec::Zero(5), Vec::Zero(2), 0.0),
               std::invalid_argument);
}

TEST(FaultReconstruction, LeftInversesCached) {
  const auto tp = transform(manipulator::plant());
  const auto aug = build_augmented(tp, UltraLocalOrders::uniform(4));
  const FaultReconstructor rec(tp, aug);
  EXPECT_LT((rec.q1_left() * tp.Q1 - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((rec.r_left() * vstack({tp.R1, tp.R2}) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
}

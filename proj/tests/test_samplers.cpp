#include <cmath>
#include <vector>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "cmlab/distributions.hpp"
#include "cmlab/errors.hpp"
#include "cmlab/models.hpp"
#include "cmlab/samplers.hpp"
#include "cmlab/schedule.hpp"

using namespace cmlab;

namespace {

RowMatrix one_by_one(double value) { return RowMatrix::Constant(1, 1, value); }

double batch_mean(const RowMatrix& m) { return m.mean(); }

double batch_var(const RowMatrix& m) {
  const double mu = m.mean();
  return (m.array() - mu).square().sum() / static_cast<double>(m.size() - 1);
}

}  // namespace

TEST(Samplers, SingleStepMultistepMatchesOneStepBitForBit) {
  const auto dist = MixtureParams::isotropic(2, 3.0);
  const auto f = ConsistencyModel::distilled(ScoreModel::exact(dist), build_grid(0.01, 0.1, 1.0));
  const SampleBatch a = one_step(f, 1.0, 50, 42);
  const auto b = multistep(f, MultistepSchedule::fixed(1.0, 0.5, 1, 0.01), 50, 42);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(a.points, b.front().points);
  const auto c = multistep(f, MultistepSchedule::fixed(1.0, 0.5, 3, 0.01), 50, 42);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(a.points, c.front().points);
  EXPECT_NE(c[1].points, c[0].points);
  ASSERT_TRUE(c.back().time_tag.has_value());
  EXPECT_EQ(*c.back().time_tag, 0.01);
}

TEST(Samplers, MultistepIsDeterministic) {
  const auto f = ConsistencyModel::exact(MixtureParams::isotropic(1, 2.0), 0.01);
  const auto sched = MultistepSchedule::fixed(1.0, 0.4, 3, 0.01);
  const auto a = multistep(f, sched, 20, 5);
  const auto b = multistep(f, sched, 20, 5);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].points, b[k].points);
}

TEST(Samplers, ScheduleValidation) {
  EXPECT_THROW(MultistepSchedule::fixed(1.0, 0.5, 0, 0.01), InvalidRangeError);
  EXPECT_THROW(MultistepSchedule::fixed(1.0, 2.0, 2, 0.01), InvalidRangeError);
  EXPECT_THROW(MultistepSchedule::fixed(1.0, 0.005, 2, 0.01), InvalidRangeError);
  MultistepSchedule empty;
  empty.delta = 0.01;
  EXPECT_THROW(empty.validate(), InvalidRangeError);
}

TEST(Samplers, ChooseTHatNearestGridPoint) {
  const TimeGrid grid = build_grid(0.01, 0.1, 2.0);
  // log(2) + 0.01 = 0.7031 -> 0.7
  EXPECT_NEAR(choose_t_hat(grid, 1.0), 0.7, 1e-12);
  // log(8) + 0.01 = 2.089 -> T
  EXPECT_NEAR(choose_t_hat(grid, 4.0), 2.0, 1e-12);
  EXPECT_THROW(choose_t_hat(grid, 0.5), std::invalid_argument);
}

TEST(Samplers, OuSmoothIdentityAndStationarity) {
  const SampleBatch x = sample(MixtureParams::isotropic(1, 1.0), 40000, 3);
  const SampleBatch same = ou_smooth(x, 0.0, 9);
  EXPECT_EQ(same.points, x.points);
  const SampleBatch y = ou_smooth(x, 0.3, 9);
  EXPECT_NEAR(batch_mean(y.points), 0.0, 4.0 / std::sqrt(40000.0));
  EXPECT_NEAR(batch_var(y.points), 1.0, 4.0 * std::sqrt(2.0 / 40000.0));
  SampleBatch tagged = x;
  tagged.time_tag = 0.01;
  EXPECT_NEAR(*ou_smooth(tagged, 0.05, 1).time_tag, 0.06, 1e-15);
  EXPECT_THROW(ou_smooth(x, -0.1, 1), InvalidRangeError);
}

TEST(Samplers, UlmcZeroStepsReturnsInput) {
  const SampleBatch x = sample(MixtureParams::isotropic(2, 1.0), 10, 3);
  const SampleBatch y = ulmc_run(ScoreModel::exact(MixtureParams::isotropic(2, 1.0)), x, 1.0, 0.01, 0, 4);
  EXPECT_EQ(x.points, y.points);
}

TEST(Samplers, UlmcBallisticLimit) {
  UlmcState s{one_by_one(0.5), one_by_one(2.0)};
  const std::vector<double> noise(2, 0.0);
  ulmc_step(s, one_by_one(0.0), 1e-9, 0.1, noise);
  EXPECT_NEAR(s.z(0, 0), 0.5 + 0.1 * 2.0, 1e-9);
  EXPECT_NEAR(s.v(0, 0), 2.0, 1e-9);
}

TEST(Samplers, UlmcStepSizesChecked) {
  UlmcState s{RowMatrix::Zero(2, 2), RowMatrix::Zero(2, 2)};
  const std::vector<double> short_noise(4, 0.0);
  EXPECT_THROW(ulmc_step(s, RowMatrix::Zero(2, 2), 1.0, 0.1, short_noise), DimensionError);
  const std::vector<double> noise(8, 0.0);
  EXPECT_THROW(ulmc_step(s, RowMatrix::Zero(2, 2), 0.0, 0.1, noise), InvalidRangeError);
}

// The frozen-drift step is the exact solution of the linear SDE
// d(z, v) = A (z, v) dt + (0, s) dt + (0, sqrt(2 gamma)) dW, A = [0 1; 0 -gamma].
// Mean map and noise covariance are read off matrix exponentials (Van Loan).
TEST(Samplers, UlmcStepMatchesMatrixExponentialOracle) {
  for (const double gamma : {0.5, 1.0, 4.0}) {
    for (const double tau : {0.01, 0.1, 0.5}) {
      Eigen::Matrix3d aug = Eigen::Matrix3d::Zero();
      aug(0, 1) = 1.0;
      aug(1, 1) = -gamma;
      aug(1, 2) = 1.0;  // constant drift enters v
      const Eigen::Matrix3d e = (aug * tau).exp();
      const double z0 = 0.7, v0 = -0.3, s = 1.9;
      const Eigen::Vector3d want = e * Eigen::Vector3d(z0, v0, s);

      UlmcState st{one_by_one(z0), one_by_one(v0)};
      const std::vector<double> zero(2, 0.0);
      ulmc_step(st, one_by_one(s), gamma, tau, zero);
      EXPECT_NEAR(st.z(0, 0), want(0), 1e-12) << gamma << ' ' << tau;
      EXPECT_NEAR(st.v(0, 0), want(1), 1e-12) << gamma << ' ' << tau;

      Eigen::Matrix4d vl = Eigen::Matrix4d::Zero();
      Eigen::Matrix2d a;
      a << 0.0, 1.0, 0.0, -gamma;
      Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
      q(1, 1) = 2.0 * gamma;
      vl.topLeftCorner<2, 2>() = -a;
      vl.topRightCorner<2, 2>() = q;
      vl.bottomRightCorner<2, 2>() = a.transpose();
      const Eigen::Matrix4d ve = (vl * tau).exp();
      const Eigen::Matrix2d cov = ve.bottomRightCorner<2, 2>().transpose() * ve.topRightCorner<2, 2>();

      // Columns of the step's noise factor: push unit noise through from zero state.
      Eigen::Matrix2d factor;
      for (int k = 0; k < 2; ++k) {
        UlmcState u{one_by_one(0.0), one_by_one(0.0)};
        std::vector<double> unit(2, 0.0);
        unit[k] = 1.0;
        ulmc_step(u, one_by_one(0.0), gamma, tau, unit);
        factor(0, k) = u.z(0, 0);
        factor(1, k) = u.v(0, 0);
      }
      const Eigen::Matrix2d got = factor * factor.transpose();
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          EXPECT_NEAR(got(i, j), cov(i, j), 1e-10 * std::max(1.0, std::abs(cov(i, j))) + 1e-15)
              << gamma << ' ' << tau << " entry " << i << j;
        }
      }
    }
  }
}

TEST(Samplers, UlmcKeepsStandardGaussianNearlyStationary) {
  const auto target = MixtureParams::isotropic(1, 1.0);
  const SampleBatch x = sample(target, 20000, 8);
  const double tau = 0.05;
  const SampleBatch y = ulmc_run(ScoreModel::exact(target), x, 1.0, tau, 100, 9);
  EXPECT_NEAR(batch_mean(y.points), 0.0, 0.05);
  const double var = batch_var(y.points);
  EXPECT_GE(var, 1.0 - 5.0 * tau);
  EXPECT_LE(var, 1.0 + 5.0 * tau);
}

TEST(Samplers, UlmcPullsShiftedBatchTowardTarget) {
  const auto target = MixtureParams::isotropic(1, 1.0);
  SampleBatch x = sample(target, 5000, 2);
  x.points.array() += 2.0;
  const SampleBatch y = ulmc_run(ScoreModel::exact(target), x, 1.0, 0.05, 200, 3);
  EXPECT_LT(std::abs(batch_mean(y.points)), 0.25);
}

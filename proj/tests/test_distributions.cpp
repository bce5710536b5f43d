#include <cmath>
#include <limits>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cmlab/distributions.hpp"
#include "cmlab/errors.hpp"
#include "cmlab/rng.hpp"

using namespace cmlab;

namespace {

MixtureParams two_bumps() {
  return MixtureParams{{0.5, 0.5}, {Vec::Constant(1, -2.0), Vec::Constant(1, 2.0)}, {Vec::Constant(1, 0.1), Vec::Constant(1, 0.1)}};
}

MixtureParams skewed_2d() {
  return MixtureParams{{0.2, 0.5, 0.3},
                       {Vec{{1.0, -1.0}}, Vec{{-0.5, 2.0}}, Vec{{0.0, 0.0}}},
                       {Vec{{0.3, 1.5}}, Vec{{2.0, 0.2}}, Vec{{0.0, 0.0}}}};
}

}  // namespace

TEST(Mixture, ValidateRejectsBadInput) {
  EXPECT_THROW((MixtureParams{{0.5, 0.6}, {Vec::Zero(1), Vec::Zero(1)}, {Vec::Ones(1), Vec::Ones(1)}}.validate()),
               std::invalid_argument);
  EXPECT_THROW((MixtureParams{{1.0}, {Vec::Zero(1)}, {Vec::Constant(1, -1.0)}}.validate()), std::invalid_argument);
  EXPECT_THROW((MixtureParams{{1.0}, {Vec::Zero(2)}, {Vec::Ones(1)}}.validate()), std::invalid_argument);
  EXPECT_THROW((MixtureParams{{}, {}, {}}.validate()), std::invalid_argument);
  EXPECT_NO_THROW(skewed_2d().validate());
}

TEST(Sample, StandardNormalMeanWithinClt) {
  const std::size_t n = 100000;
  const SampleBatch b = sample(MixtureParams::isotropic(2, 1.0), n, 3);
  EXPECT_LE(b.points.colwise().mean().norm(), 4.0 * std::sqrt(2.0 / n));
}

TEST(Sample, SymmetricMixtureMean) {
  const std::size_t n = 100000;
  const SampleBatch b = sample(two_bumps(), n, 5);
  EXPECT_LE(std::abs(b.points.mean()), 4.0 * std::sqrt(2.05 / n));
}

TEST(Sample, SameSeedSameBatch) {
  const SampleBatch a = sample(skewed_2d(), 1000, 42);
  const SampleBatch b = sample(skewed_2d(), 1000, 42);
  EXPECT_TRUE(a.points == b.points);
  EXPECT_EQ(a.seed, 42u);
  const SampleBatch c = sample(skewed_2d(), 1000, 43);
  EXPECT_FALSE(a.points == c.points);
}

TEST(Sample, MomentsOfMarginalsWithinBands) {
  const MixtureParams dist = skewed_2d();
  const std::size_t n = 200000;
  for (const double t : {0.05, 0.5, 2.0}) {
    const MixtureParams pt = marginal_at(dist, t);
    Vec mean = Vec::Zero(2), second = Vec::Zero(2);
    for (std::size_t i = 0; i < pt.components(); ++i) {
      mean += pt.weights[i] * pt.means[i];
      second += pt.weights[i] * (pt.vars[i] + pt.means[i].cwiseAbs2());
    }
    const Vec var = second - mean.cwiseAbs2();
    const SampleBatch b = sample(pt, n, 11);
    const Vec emp_mean = b.points.colwise().mean().transpose();
    const Vec emp_var = (b.points.rowwise() - emp_mean.transpose()).colwise().squaredNorm().transpose() / (n - 1.0);
    for (int j = 0; j < 2; ++j) {
      EXPECT_NEAR(emp_mean(j), mean(j), 5.0 * std::sqrt(var(j) / n)) << "t=" << t;
      // Variance of the sample variance is bounded by E[(x - mu)^4] / n; use a generous 5 sigma band.
      EXPECT_NEAR(emp_var(j), var(j), 5.0 * std::sqrt(3.0 * var(j) * var(j) / n) + 5.0 * std::sqrt(var(j) / n)) << "t=" << t;
    }
  }
}

TEST(Marginal, StationaryAndClosedForm) {
  const MixtureParams std_normal = MixtureParams::isotropic(3, 1.0);
  const MixtureParams p = marginal_at(std_normal, 0.7);
  EXPECT_NEAR((p.vars[0] - Vec::Ones(3)).norm(), 0.0, 1e-15);
  EXPECT_EQ(p.means[0], Vec::Zero(3));

  const MixtureParams q = marginal_at(MixtureParams::isotropic(2, 4.0), std::log(2.0));
  EXPECT_NEAR(q.vars[0](0), 1.75, 1e-15);
  EXPECT_NEAR(q.vars[0](1), 1.75, 1e-15);

  const MixtureParams masses{{0.5, 0.5}, {Vec::Constant(1, -2.0), Vec::Constant(1, 2.0)}, {Vec::Zero(1), Vec::Zero(1)}};
  const double t = 0.4;
  const MixtureParams m = marginal_at(masses, t);
  EXPECT_NEAR(m.means[1](0), 2.0 * std::exp(-t), 1e-15);
  EXPECT_NEAR(m.vars[0](0), 1.0 - std::exp(-2.0 * t), 1e-15);
}

TEST(Marginal, AtZeroIsIdentity) {
  const MixtureParams d = skewed_2d();
  const MixtureParams m = marginal_at(d, 0.0);
  EXPECT_EQ(m.weights, d.weights);
  for (std::size_t i = 0; i < d.components(); ++i) {
    EXPECT_TRUE(m.means[i] == d.means[i]);
    EXPECT_TRUE(m.vars[i] == d.vars[i]);
  }
  EXPECT_THROW(marginal_at(d, -0.1), InvalidRangeError);
}

TEST(Score, StandardNormalIsMinusX) {
  const MixtureParams d = MixtureParams::isotropic(2, 1.0);
  const Vec x{{0.3, -1.7}};
  for (const double t : {0.0, 0.1, 3.0}) EXPECT_NEAR((score(d, t, x) + x).norm(), 0.0, 1e-15);
}

TEST(Score, SymmetricMixtureVanishesAtOrigin) {
  EXPECT_NEAR(score(two_bumps(), 0.5, Vec::Zero(1))(0), 0.0, 1e-15);
}

TEST(Score, SingleGaussianClosedForm) {
  // -(x - e^{-t} mu) / (e^{-2t} sigma^2 + 1 - e^{-2t}) at mu = (1, -2), sigma^2 = (4, 0.5),
  // t = 0.3, x = (0.5, 0.7); values from an independent evaluation.
  const MixtureParams d = MixtureParams::gaussian(Vec{{1.0, -2.0}}, Vec{{4.0, 0.5}});
  const Vec s = score(d, 0.3, Vec{{0.5, 0.7}});
  EXPECT_NEAR(s(0), 0.09099722042211267, 1e-14);
  EXPECT_NEAR(s(1), -3.0066895457890945, 1e-14);
}

TEST(Score, MixtureFrozenValues) {
  // 0.5 N(-2, 0.1) + 0.5 N(2, 0.1) at t = 0.5, x = 0.3.
  EXPECT_NEAR(score(two_bumps(), 0.5, Vec::Constant(1, 0.3))(0), 0.4510846243994536, 1e-13);
  EXPECT_NEAR(score_hessian(two_bumps(), 0.5, Vec::Constant(1, 0.3))(0, 0), 0.9845486269879208, 1e-12);
}

TEST(Score, DegenerateAtTimeZeroThrows) {
  const MixtureParams masses = circle_point_masses(4, 1.0);
  EXPECT_THROW(score(masses, 0.0, Vec::Zero(2)), DegenerateDensityError);
  EXPECT_THROW(score_hessian_norm(masses, 0.0, Vec::Zero(2)), DegenerateDensityError);
  EXPECT_NO_THROW(score(masses, 1e-3, Vec::Zero(2)));
}

TEST(Score, WrongDimensionThrows) {
  EXPECT_THROW(score(MixtureParams::isotropic(2, 1.0), 0.1, Vec::Zero(3)), DimensionError);
}

TEST(Score, FarTailStaysFinite) {
  const Vec x = Vec::Constant(2, 1e3);
  EXPECT_TRUE(score(skewed_2d(), 0.01, x).allFinite());
  EXPECT_TRUE(std::isfinite(log_density(skewed_2d(), 0.01, x)));
}

// Property: central differences of log p_t reproduce the score.
TEST(ScoreProperty, MatchesFiniteDifferenceOfLogDensity) {
  Rng rng(17);
  for (const MixtureParams& d : {skewed_2d(), circle_point_masses(6, 2.0)}) {
    for (const double t : {0.05, 0.3, 1.5}) {
      for (int trial = 0; trial < 20; ++trial) {
        const Vec x{{2.0 * rng.gaussian(), 2.0 * rng.gaussian()}};
        const Vec s = score(d, t, x);
        const double h = 1e-5;
        for (int j = 0; j < 2; ++j) {
          Vec xp = x, xm = x;
          xp(j) += h;
          xm(j) -= h;
          const double fd = (log_density(d, t, xp) - log_density(d, t, xm)) / (2.0 * h);
          EXPECT_NEAR(fd, s(j), 1e-6 * std::max(1.0, std::abs(s(j))));
        }
      }
    }
  }
}

// Property: the Jacobian of the score is the analytic Hessian.
TEST(ScoreProperty, HessianMatchesFiniteDifferenceOfScore) {
  Rng rng(19);
  for (const MixtureParams& d : {skewed_2d(), circle_point_masses(6, 2.0)}) {
    for (const double t : {0.1, 0.5, 1.5}) {
      for (int trial = 0; trial < 20; ++trial) {
        const Vec x{{2.0 * rng.gaussian(), 2.0 * rng.gaussian()}};
        const Mat hess = score_hessian(d, t, x);
        const double h = 1e-5;
        for (int j = 0; j < 2; ++j) {
          Vec xp = x, xm = x;
          xp(j) += h;
          xm(j) -= h;
          const Vec col = (score(d, t, xp) - score(d, t, xm)) / (2.0 * h);
          for (int i = 0; i < 2; ++i) EXPECT_NEAR(col(i), hess(i, j), 1e-4 * std::max(1.0, std::abs(hess(i, j))));
        }
      }
    }
  }
}

TEST(Hessian, NormClosedForms) {
  const Vec x{{0.4, -0.9}};
  EXPECT_NEAR(score_hessian_norm(MixtureParams::isotropic(2, 1.0), 0.3, x), 1.0, 1e-14);
  // 1 / s_t^2 with s_t^2 = 1 + 3 e^{-1} for N(0, 4 I) at t = 0.5.
  EXPECT_NEAR(score_hessian_norm(MixtureParams::isotropic(2, 4.0), 0.5, x), 0.4753668864186717, 1e-14);
}

TEST(Hessian, CircleBoundHoldsAtEveryTestedPoint) {
  const MixtureParams d = circle_point_masses(8, 2.0);
  // e^{-1} 4 / (1 - e^{-1})^2 + 1 / (1 - e^{-1})
  EXPECT_NEAR(bounded_support_hessian_bound(2.0, 0.5), 5.264671083700496, 1e-12);
  EXPECT_NEAR(support_radius(d), 2.0, 1e-15);
  for (const double t : {0.05, 0.1, 0.5, 1.0, 2.0}) {
    const SampleBatch pts = sample(marginal_at(d, t), 200, 23);
    const double bound = bounded_support_hessian_bound(2.0, t);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LE(score_hessian_norm(d, t, pts.point(i)), bound);
    for (double r = 0.0; r <= 4.0; r += 0.25) EXPECT_LE(score_hessian_norm(d, t, Vec{{r, 0.3 * r}}), bound);
  }
}

TEST(Lipschitz, Examples) {
  EXPECT_NEAR(lipschitz_bound(MixtureParams::isotropic(2, 1.0), 0.1, 2.0, 5, 200, 1), 1.0, 1e-12);
  EXPECT_NEAR(lipschitz_bound(MixtureParams::isotropic(2, 4.0), 0.1, 2.0, 5, 200, 1), 1.0, 1e-12);
  const MixtureParams circle = circle_point_masses(8, 2.0);
  const double l = lipschitz_bound(circle, 0.1, 1.0, 4, 200, 1);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_GE(l, 1.0);
  EXPECT_LE(l, bounded_support_hessian_bound(2.0, 0.1));
}

TEST(Moments, SecondMoment) {
  EXPECT_DOUBLE_EQ(second_moment(MixtureParams::isotropic(3, 1.0)), 3.0);
  EXPECT_DOUBLE_EQ(second_moment(MixtureParams::gaussian(Vec{{1.0, 2.0}}, Vec::Zero(2))), 5.0);
  EXPECT_NEAR(second_moment(two_bumps()), 4.1, 1e-15);
  EXPECT_EQ(support_radius(two_bumps()), std::numeric_limits<double>::infinity());
}

TEST(MixtureJson, RoundTripAndStrictKeys) {
  const MixtureParams d = skewed_2d();
  const nlohmann::json j = d;
  const MixtureParams back = j.get<MixtureParams>();
  EXPECT_EQ(back.weights, d.weights);
  for (std::size_t i = 0; i < d.components(); ++i) {
    EXPECT_TRUE(back.means[i] == d.means[i]);
    EXPECT_TRUE(back.vars[i] == d.vars[i]);
  }
  nlohmann::json bad = j;
  bad["covariance"] = 1;
  try {
    (void)bad.get<MixtureParams>();
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "distribution.covariance");
  }
}

TEST(Batch, CheckRejectsNonFinite) {
  SampleBatch b = sample(MixtureParams::isotropic(1, 1.0), 4, 1);
  EXPECT_NO_THROW(check_batch(b));
  b.points(2, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(check_batch(b), std::invalid_argument);
}

TEST(Seeds, DerivedStreamsDiffer) {
  EXPECT_EQ(derive_seed(1, "a", 0), derive_seed(1, "a", 0));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "b", 0));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(2, "a", 0));
}

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cmlab/distributions.hpp"
#include "cmlab/errors.hpp"
#include "cmlab/models.hpp"
#include "cmlab/objectives.hpp"
#include "cmlab/schedule.hpp"

using namespace cmlab;

TEST(Objectives, ParametricBoundaryAndShape) {
  ParametricCM f(3, 0.02, 8, 1);
  f.randomize_theta(2);
  EXPECT_EQ(f.theta.rows(), 8);
  EXPECT_EQ(f.theta.cols(), 3);
  const SampleBatch pts = sample(MixtureParams::isotropic(3, 4.0), 20, 3);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(f(pts.point(i), 0.02), pts.point(i));
  EXPECT_NE(f(pts.point(0), 0.5), pts.point(0));
  EXPECT_EQ(f.as_model().provenance().kind, "parametric");
  EXPECT_THROW(ParametricCM(0, 0.01, 4, 1), DimensionError);
}

TEST(Objectives, DrawsCoverGridPairs) {
  const TimeGrid grid = build_grid(0.01, 0.25, 1.0);
  const ObjectiveDraws d = draw_objective(MixtureParams::isotropic(2, 1.0), grid, 2000, 4);
  std::vector<int> seen(grid.size() - 1, 0);
  for (const auto p : d.pair) {
    ASSERT_LT(p, grid.size() - 1);
    ++seen[p];
  }
  for (const int c : seen) EXPECT_GT(c, 0);
}

TEST(Objectives, LossesNonNegativeAndDeterministic) {
  const auto dist = MixtureParams::isotropic(2, 2.0);
  const TimeGrid grid = build_grid(0.01, 0.2, 1.0);
  ParametricCM f(2, 0.01, 6, 5);
  f.randomize_theta(6);
  const ScoreModel s = ScoreModel::exact(dist);
  const double cd = cd_loss(f, f, s, dist, grid, 500, 7);
  EXPECT_GE(cd, 0.0);
  EXPECT_EQ(cd, cd_loss(f, f, s, dist, grid, 500, 7));
  const double ct = ct_loss(f, f, dist, grid, 500, 7);
  EXPECT_GE(ct, 0.0);
  EXPECT_EQ(ct, ct_loss(f, f, dist, grid, 500, 7));
  EXPECT_NE(ct, ct_loss(f, f, dist, grid, 500, 8));
}

TEST(Objectives, CdVanishesForIdentityOnStationaryLaw) {
  const auto dist = MixtureParams::isotropic(2, 1.0);
  const TimeGrid grid = build_grid(0.01, 0.2, 1.0);
  const ParametricCM f(2, 0.01, 6, 5);  // theta = 0: the identity map
  const ObjectiveDraws d = draw_objective(dist, grid, 400, 9);
  const LossTerms cd = cd_terms(f, f, ScoreModel::exact(dist), grid, d);
  EXPECT_LT(cd.loss(f.theta), 1e-28);
  EXPECT_LT(fd_gradient(cd, f.theta, 1e-4).norm(), 1e-10);
}

TEST(Objectives, CtLossOfIdentityMatchesClosedForm) {
  // theta = 0: loss = (e^{-t1} - e^{-t0})^2 E||x0||^2 + (sigma_1 - c)^2 d,
  // sigma_1 = sqrt(1 - e^{-2 t1}), c = (1 - e^{-(t0 + t1)}) / sigma_1.
  const auto dist = MixtureParams::isotropic(2, 4.0);
  const double t0 = 0.5, t1 = 0.8;
  const TimeGrid grid = uniform_grid(t0, t1 - t0, 2);
  const ParametricCM f(2, 0.01, 4, 5);
  const double sig = std::sqrt(1.0 - std::exp(-2.0 * t1));
  const double c = (1.0 - std::exp(-(t0 + t1))) / sig;
  const double want = std::pow(std::exp(-t1) - std::exp(-t0), 2) * 8.0 + std::pow(sig - c, 2) * 2.0;
  EXPECT_NEAR(ct_loss(f, f, dist, grid, 200000, 10), want, 0.03 * want);
}

TEST(Objectives, FdGradientMatchesAnalyticGradient) {
  const auto dist = MixtureParams::isotropic(2, 2.0);
  const TimeGrid grid = build_grid(0.01, 0.2, 1.0);
  ParametricCM f(2, 0.01, 5, 11);
  f.randomize_theta(12);
  const LossTerms t = ct_terms(f, f, grid, draw_objective(dist, grid, 300, 13));
  const auto n = static_cast<double>(t.scaled_features.rows());
  Mat analytic(f.theta.rows(), f.theta.cols());
  for (Eigen::Index j = 0; j < f.theta.cols(); ++j) {
    analytic.col(j) = (2.0 / n) * t.scaled_features.transpose() * t.residual(f.theta, j);
  }
  EXPECT_LT((fd_gradient(t, f.theta, 1e-5) - analytic).norm(), 1e-6 * std::max(1.0, analytic.norm()));
}

TEST(Objectives, GradGapShrinksWithStep) {
  const auto dist = MixtureParams::isotropic(1, 2.0);
  ParametricCM f(1, 0.01, 8, 14);
  f.randomize_theta(15);
  const auto pts = grad_gap(f, dist, ScoreModel::exact(dist), {0.2, 0.1, 0.05}, 20000, 16);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_GT(pts[0].gap, pts[1].gap);
  EXPECT_GT(pts[1].gap, pts[2].gap);
  for (const auto& p : pts) EXPECT_GT(p.std_err, 0.0);
}

TEST(Objectives, GradGapArgumentChecks) {
  const auto dist = MixtureParams::isotropic(1, 2.0);
  const ParametricCM f(1, 0.01, 4, 1);
  const ScoreModel s = ScoreModel::exact(dist);
  EXPECT_THROW(grad_gap(f, dist, s, {0.2, 0.1}, 200, 1), std::invalid_argument);
  EXPECT_THROW(grad_gap(f, dist, s, {0.2, 0.3, 0.1}, 200, 1), std::invalid_argument);
  EXPECT_THROW(grad_gap(f, dist, perturb_score(dist, 0.1, 1), {0.2, 0.1, 0.05}, 200, 1), std::invalid_argument);
}

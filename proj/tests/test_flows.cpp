#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cmlab/distributions.hpp"
#include "cmlab/errors.hpp"
#include "cmlab/flows.hpp"
#include "cmlab/models.hpp"
#include "cmlab/score_model.hpp"

using namespace cmlab;

namespace {

// For N(0, s2 I) started at time 0 the OU marginal at t has variance
// 1 + (s2 - 1) e^{-2t}, and the PF ODE is a pure rescaling x -> (s_a / s_b) x.
double marginal_sd(double s2, double t) { return std::sqrt(1.0 + (s2 - 1.0) * std::exp(-2.0 * t)); }

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(Flows, PfRhsMatchesGaussianClosedForm) {
  const auto dist = MixtureParams::isotropic(2, 4.0);
  const Vec x = vec2(0.7, -1.3);
  const double t = 0.4;
  const double st2 = 1.0 + 3.0 * std::exp(-0.8);
  const Vec v = pf_rhs_exact(dist, x, t);
  EXPECT_NEAR(v(0), x(0) * (1.0 / st2 - 1.0), 1e-14);
  EXPECT_NEAR(v(1), x(1) * (1.0 / st2 - 1.0), 1e-14);
}

TEST(Flows, ExactConsistencyIsRescaling) {
  const auto dist = MixtureParams::isotropic(1, 4.0);
  const Vec x = Vec::Constant(1, 1.0);
  const Vec y = consistency_exact(dist, x, 1.0, 0.01);
  // s_delta / s_t for s2 = 4, delta = 0.01, t = 1, computed independently.
  EXPECT_NEAR(y(0), 1.6741231171102267, 1e-8);
  EXPECT_NEAR(y(0), marginal_sd(4.0, 0.01) / marginal_sd(4.0, 1.0), 1e-8);
}

TEST(Flows, ConsistencyBoundaryAndOrder) {
  const auto dist = MixtureParams::isotropic(2, 2.0);
  const Vec x = vec2(3.0, -4.0);
  EXPECT_EQ(consistency_exact(dist, x, 0.05, 0.05), x);
  EXPECT_THROW(consistency_exact(dist, x, 0.04, 0.05), InvalidRangeError);
}

TEST(Flows, ReferenceIntegratorAccuracy) {
  const auto dist = MixtureParams::gaussian(Vec::Zero(2), vec2(4.0, 0.25));
  const Vec x = vec2(0.9, -0.4);
  const Vec y = integrate_reference(exact_field(dist), x, 2.0, 0.1);
  EXPECT_NEAR(y(0), x(0) * marginal_sd(4.0, 0.1) / marginal_sd(4.0, 2.0), 1e-8);
  EXPECT_NEAR(y(1), x(1) * marginal_sd(0.25, 0.1) / marginal_sd(0.25, 2.0), 1e-8);
  EXPECT_THROW(integrate_reference(exact_field(dist), x, 0.1, 2.0), InvalidRangeError);
}

TEST(Flows, SemigroupAndInvertibility) {
  const MixtureParams mix{{0.3, 0.7}, {vec2(-1.0, 0.5), vec2(1.5, -0.5)}, {vec2(0.2, 0.3), vec2(0.5, 0.1)}};
  const VectorField field = exact_field(mix);
  const Vec x = vec2(0.4, 0.2);
  const Vec direct = flow(field, x, 1.5, 0.05);
  const Vec chained = flow(field, flow(field, x, 1.5, 0.6), 0.6, 0.05);
  EXPECT_LT((direct - chained).norm(), 1e-7);
  const Vec back = flow(field, direct, 0.05, 1.5);
  EXPECT_LT((back - x).norm(), 1e-7);
}

TEST(Flows, ExpIntegratorLocalErrorIsSecondOrder) {
  const auto dist = MixtureParams::isotropic(1, 4.0);
  const ScoreModel s = ScoreModel::exact(dist);
  const Vec x = Vec::Constant(1, 1.5);
  const double t_hi = 1.0;
  std::vector<double> err;
  for (const double h : {0.1, 0.05, 0.025, 0.0125}) {
    const double want = x(0) * marginal_sd(4.0, t_hi - h) / marginal_sd(4.0, t_hi);
    err.push_back(std::abs(exp_integrator_step(s, x, t_hi, t_hi - h)(0) - want));
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double ratio = err[i - 1] / err[i];
    EXPECT_NEAR(ratio, 4.0, 0.4) << "halving " << i;
  }
  const double slope = std::log(err.front() / err.back()) / std::log(8.0);
  EXPECT_NEAR(slope, 2.0, 0.2);
}

TEST(Flows, ExpIntegratorFormulaAndRange) {
  const auto dist = MixtureParams::isotropic(2, 3.0);
  const ScoreModel s = ScoreModel::exact(dist);
  const Vec x = vec2(1.0, 2.0);
  const double h = 0.2;
  const Vec want = std::exp(h) * x + std::expm1(h) * score(dist, 0.7, x);
  EXPECT_LT((exp_integrator_step(s, x, 0.7, 0.5) - want).norm(), 1e-14);
  EXPECT_THROW(exp_integrator_step(s, x, 0.5, 0.7), InvalidRangeError);
  EXPECT_THROW(exp_integrator_step(s, x, 0.5, 0.0), InvalidRangeError);
}

TEST(Flows, ScoreTimeDerivativeMatchesGaussianOracle) {
  // For N(0, s2) in 1-D: E||d/dt s(x_t, t)||^2 = ((s2 - 1) e^{-2t})^2 / s_t^6.
  const auto dist = MixtureParams::isotropic(1, 4.0);
  EXPECT_NEAR(score_time_derivative_norm(dist, 0.5, 20000, 11), 0.13083993611897343, 0.05 * 0.13083993611897343);
  EXPECT_NEAR(score_time_derivative_norm(dist, 1.0, 20000, 12), 0.05930662350239219, 0.05 * 0.05930662350239219);
}

TEST(Flows, ScoreTimeDerivativeVanishesAtStationarity) {
  const auto dist = MixtureParams::isotropic(3, 1.0);
  EXPECT_LT(score_time_derivative_norm(dist, 0.3, 2000, 5), 1e-10);
}

TEST(Flows, ScoreTimeDerivativeDecaysInTime) {
  const MixtureParams mix{{0.5, 0.5}, {Vec::Constant(1, -2.0), Vec::Constant(1, 2.0)}, {Vec::Constant(1, 0.1), Vec::Constant(1, 0.1)}};
  double prev = score_time_derivative_norm(mix, 0.2, 4000, 1);
  for (const double t : {0.6, 1.2, 2.4}) {
    const double cur = score_time_derivative_norm(mix, t, 4000, 1);
    EXPECT_LT(cur, prev) << "t = " << t;
    prev = cur;
  }
}

TEST(Flows, EmpiricalMapErrorIsLinearInScoreError) {
  const auto dist = MixtureParams::isotropic(2, 2.0);
  const Vec x = vec2(0.8, -0.6);
  const Vec ref = consistency_exact(dist, x, 1.0, 0.01);
  std::vector<double> gaps;
  for (const double eps : {0.04, 0.02, 0.01}) {
    const ScoreModel s = perturb_score(dist, eps, 99);
    gaps.push_back((consistency_empirical(s, x, 1.0, 0.01) - ref).norm());
  }
  EXPECT_NEAR(std::log(gaps[0] / gaps[2]) / std::log(4.0), 1.0, 0.05);
  EXPECT_GT(gaps[2], 0.0);
}

TEST(Flows, EmpiricalFieldOfExactScoreMatchesExactField) {
  const MixtureParams mix{{0.4, 0.6}, {vec2(-1.0, 0.0), vec2(1.0, 1.0)}, {vec2(0.3, 0.3), vec2(0.6, 0.2)}};
  const VectorField em = empirical_field(ScoreModel::exact(mix));
  const VectorField ex = exact_field(mix);
  EXPECT_EQ(em.kind, VectorField::Kind::empirical);
  EXPECT_EQ(ex.kind, VectorField::Kind::exact);
  const Vec x = vec2(0.2, -0.1);
  EXPECT_LT((em(x, 0.5) - ex(x, 0.5)).norm(), 1e-14);
}

#include "cmlab/flows.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "cmlab/errors.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

namespace {

constexpr double kMinStep = 1e-12;
constexpr double kTimeDerivativeStep = 1e-4;

using State = std::vector<double>;

}  // namespace

VectorField exact_field(const MixtureParams& dist) {
  return {VectorField::Kind::exact, [dist](const Vec& x, double t) { return pf_rhs_exact(dist, x, t); }};
}

VectorField empirical_field(const ScoreModel& score_model) {
  return {VectorField::Kind::empirical, [score_model](const Vec& x, double t) -> Vec { return -x - score_model(x, t); }};
}

Vec pf_rhs_exact(const MixtureParams& dist, const Vec& x, double t) { return -x - score(dist, t, x); }

Vec exp_integrator_step(const ScoreModel& score_model, const Vec& x, double t_hi, double t_lo) {
  if (!(t_lo > 0.0) || !(t_hi > t_lo)) throw InvalidRangeError("exp_integrator_step needs 0 < t_lo < t_hi");
  const double grow = std::expm1(t_hi - t_lo);  // e^h - 1
  return x + grow * (x + score_model(x, t_hi));
}

Vec flow(const VectorField& field, const Vec& x, double t_from, double t_to, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("flow: tol must be positive");
  if (t_from == t_to) return x;
  namespace ode = boost::numeric::odeint;

  const auto n = static_cast<Eigen::Index>(x.size());
  auto rhs = [&field, n](const State& s, State& ds, double t) {
    const Vec v = field(Eigen::Map<const Vec>(s.data(), n), t);
    Eigen::Map<Vec>(ds.data(), n) = v;
  };

  auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<State>());
  State state(x.data(), x.data() + n);
  State deriv(state.size());
  double t = t_from;
  const double direction = t_to > t_from ? 1.0 : -1.0;
  double dt = direction * std::min(std::abs(t_to - t_from), 1e-2);
  rhs(state, deriv, t);

  while (direction * (t_to - t) > 0.0) {
    if (direction * (t + dt - t_to) > 0.0) dt = t_to - t;
    const double t_before = t;
    const auto result = stepper.try_step(rhs, state, deriv, t, dt);
    if (result == ode::fail) {
      if (std::abs(dt) < kMinStep) {
        throw StepUnderflowError("reference integrator step fell below 1e-12 near t = " + std::to_string(t_before));
      }
      continue;
    }
    // Snap to the endpoint to avoid a sliver step caused by rounding.
    if (std::abs(t_to - t) < 1e-14 * std::max(1.0, std::abs(t_to))) t = t_to;
  }
  return Eigen::Map<const Vec>(state.data(), n);
}

Vec integrate_reference(const VectorField& field, const Vec& x, double t_from, double t_to, double tol) {
  if (!(t_to < t_from)) throw InvalidRangeError("integrate_reference solves backward: requires t_to < t_from");
  return flow(field, x, t_from, t_to, tol);
}

Vec consistency_exact(const MixtureParams& dist, const Vec& x, double t, double delta, double tol) {
  if (t < delta) throw InvalidRangeError("consistency map needs t >= delta");
  if (t == delta) return x;
  return integrate_reference(exact_field(dist), x, t, delta, tol);
}

Vec consistency_empirical(const ScoreModel& score_model, const Vec& x, double t, double delta, double tol) {
  if (t < delta) throw InvalidRangeError("consistency map needs t >= delta");
  if (t == delta) return x;
  return integrate_reference(empirical_field(score_model), x, t, delta, tol);
}

double score_time_derivative_norm(const MixtureParams& dist, double t, std::size_t n_mc, std::uint64_t seed) {
  if (!(t > kTimeDerivativeStep)) throw InvalidRangeError("score_time_derivative_norm needs t > 1e-4");
  if (n_mc < 1) throw std::invalid_argument("score_time_derivative_norm: n_mc must be >= 1");
  const VectorField field = exact_field(dist);
  const SampleBatch pts = sample(marginal_at(dist, t), n_mc, derive_seed(seed, "score_time_derivative"));
  const double eps = kTimeDerivativeStep;
  double acc = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec x = pts.point(i);
    const Vec ahead = flow(field, x, t, t + eps, 1e-12);
    const Vec behind = flow(field, x, t, t - eps, 1e-12);
    const Vec deriv = (score(dist, t + eps, ahead) - score(dist, t - eps, behind)) / (2.0 * eps);
    acc += deriv.squaredNorm();
  }
  return acc / static_cast<double>(pts.size());
}

}  // namespace cmlab

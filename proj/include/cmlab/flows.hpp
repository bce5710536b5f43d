#pragma once

// Probability-flow ODE dx/dt = -x - s(x, t) for the OU forward process, run
// backward in time by the samplers.

#include <cstdint>
#include <functional>

#include "cmlab/distributions.hpp"
#include "cmlab/score_model.hpp"
#include "cmlab/types.hpp"

namespace cmlab {

inline constexpr double kDefaultReferenceTol = 1e-10;

struct VectorField {
  enum class Kind { exact, empirical };
  Kind kind;
  std::function<Vec(const Vec& x, double t)> eval;

  Vec operator()(const Vec& x, double t) const { return eval(x, t); }
};

VectorField exact_field(const MixtureParams& dist);
VectorField empirical_field(const ScoreModel& score_model);

/// -x - grad log p_t(x).
Vec pf_rhs_exact(const MixtureParams& dist, const Vec& x, double t);

/// Exponential-integrator step from t_hi down to t_lo with the score frozen at
/// (x, t_hi): e^{h} x + (e^{h} - 1) s(x, t_hi), h = t_hi - t_lo.
Vec exp_integrator_step(const ScoreModel& score_model, const Vec& x, double t_hi, double t_lo);

/// Adaptive Dormand-Prince 5(4) solve of dx/dt = field(x, t) from t_from to
/// t_to in either direction. Absolute and relative local error are both
/// controlled to `tol`. Throws StepUnderflowError when the controller asks for
/// a step below 1e-12.
Vec flow(const VectorField& field, const Vec& x, double t_from, double t_to, double tol = kDefaultReferenceTol);

/// Backward solve (t_to < t_from) used as the oracle for consistency maps.
Vec integrate_reference(const VectorField& field, const Vec& x, double t_from, double t_to,
                        double tol = kDefaultReferenceTol);

/// f^ex(x, t): endpoint at delta of the exact PF ODE through (x, t).
Vec consistency_exact(const MixtureParams& dist, const Vec& x, double t, double delta,
                      double tol = kDefaultReferenceTol);

/// f^em(x, t): same with the empirical field -x - s(x, t).
Vec consistency_empirical(const ScoreModel& score_model, const Vec& x, double t, double delta,
                          double tol = kDefaultReferenceTol);

/// Monte-Carlo estimate of E_{p_t} ||d/dt grad log p_t(x_t)||^2 where x_t moves
/// along the exact PF ODE; central difference in t with step 1e-4.
double score_time_derivative_norm(const MixtureParams& dist, double t, std::size_t n_mc, std::uint64_t seed);

}  // namespace cmlab

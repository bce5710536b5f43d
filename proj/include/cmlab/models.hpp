#pragma once

// Score and consistency models with injected, measurable errors.
//
// Perturbations use the fixed sinusoidal field g_j(x, t) = sin(w_j . x + a_j t + b_j),
// j = 1..d. Every coordinate lies in [-1, 1], so ||g|| <= sqrt(d), and
// ||grad_x g||_op <= ||W||_op with W the frequency matrix.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "cmlab/distributions.hpp"
#include "cmlab/flows.hpp"
#include "cmlab/schedule.hpp"
#include "cmlab/score_model.hpp"
#include "cmlab/types.hpp"

namespace cmlab {

class PerturbationField {
 public:
  PerturbationField(std::size_t dim, std::uint64_t seed);

  Vec operator()(const Vec& x, double t) const;
  /// Upper bound on sup ||grad_x g||_op.
  double gradient_bound() const;
  const Mat& frequencies() const { return freq_; }

 private:
  Mat freq_;
  Vec time_freq_;
  Vec phase_;
};

struct CmProvenance {
  std::string kind = "exact";  ///< "exact", "empirical", "distilled", "perturbed" or "parametric"
  double tol = 0.0;            ///< reference-integrator tolerance, 0 when no integrator is used
  double eps_target = 0.0;
  std::uint64_t seed = 0;
  std::string base_kind;  ///< kind of the wrapped model for "perturbed"
  double grid_h = 0.0;    ///< stage-1 step of the grid behind a "distilled" map
};

/// f(x, t) mapping a point at time t to the trajectory endpoint at delta.
/// Evaluation at t <= delta returns x unchanged whatever the underlying map.
class ConsistencyModel {
 public:
  using Fn = std::function<Vec(const Vec& x, double t)>;

  ConsistencyModel(std::size_t dim, double delta, Fn fn, CmProvenance provenance);

  /// f^ex: exact PF ODE solved by the reference integrator.
  static ConsistencyModel exact(const MixtureParams& dist, double delta, double tol = kDefaultReferenceTol);
  /// f^em: the empirical PF ODE of `score_model` solved by the reference integrator.
  static ConsistencyModel empirical(const ScoreModel& score_model, double delta,
                                    double tol = kDefaultReferenceTol);
  /// Chain of exponential-integrator steps through the points of `grid`, i.e.
  /// the map that has zero one-step consistency error on that grid. From an
  /// off-grid t it first steps to the largest grid point below t.
  static ConsistencyModel distilled(const ScoreModel& score_model, const TimeGrid& grid);

  Vec operator()(const Vec& x, double t) const;
  /// Applies the map to every row of `batch` at time t.
  RowMatrix apply(const RowMatrix& batch, double t) const;

  std::size_t dim() const { return dim_; }
  double delta() const { return delta_; }
  const CmProvenance& provenance() const { return provenance_; }

  std::optional<double> measured_eps_cm;
  std::optional<double> measured_lf;

 private:
  std::size_t dim_;
  double delta_;
  Fn fn_;
  CmProvenance provenance_;
};

/// exact score + eps_target * g.
ScoreModel perturb_score(const MixtureParams& dist, double eps_target, std::uint64_t seed);

/// base + eps_target * (t - delta) * g.
ConsistencyModel perturb_cm(const ConsistencyModel& base, double eps_target, std::uint64_t seed);

/// max over grid times of the RMS score error under p_{t_n}.
double measure_score_error(const ScoreModel& model, const MixtureParams& dist, const TimeGrid& grid,
                           std::size_t n_mc, std::uint64_t seed);

/// max over adjacent grid pairs of RMS ||f(x_{n+1}, t_{n+1}) - f(x_hat_n, t_n)|| / (t_{n+1} - t_n),
/// with x_{n+1} ~ p_{t_{n+1}} and x_hat_n one exponential-integrator step of `score_model`.
double measure_cm_error(const ConsistencyModel& cm, const ScoreModel& score_model, const MixtureParams& dist,
                        const TimeGrid& grid, std::size_t n_mc, std::uint64_t seed);

/// Largest finite-difference ratio ||f(x + r u, t) - f(x, t)|| / r over x ~ p_t,
/// random unit u and r in {1e-3, 1e-2}, floored at 1.
double estimate_lipschitz(const ConsistencyModel& map, const MixtureParams& dist, double t, std::size_t n_pairs,
                          std::uint64_t seed);

/// Score at t_2 read off a consistency model: (f(x, t_2) - e^{h_1} x) / (e^{h_1} - 1),
/// h_1 = t_2 - t_1. The returned model ignores its time argument.
ScoreModel recover_score(const ConsistencyModel& cm, const TimeGrid& grid);

}  // namespace cmlab

#pragma once

// Consistency distillation (CD) and consistency training (CT) losses on a
// linear-in-theta family, and the finite-difference comparison of their
// gradients.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cmlab/distributions.hpp"
#include "cmlab/models.hpp"
#include "cmlab/schedule.hpp"
#include "cmlab/score_model.hpp"
#include "cmlab/types.hpp"

namespace cmlab {

/// f_theta(x, t) = x + (t - delta) theta^T phi(x, t) with m fixed random
/// features phi_k(x, t) = sin(w_k . x + a_k t + b_k).
class ParametricCM {
 public:
  ParametricCM(std::size_t dim, double delta, std::size_t features, std::uint64_t feature_seed);

  Vec operator()(const Vec& x, double t) const;
  void features(const Vec& x, double t, std::span<double> out) const;

  std::size_t dim() const { return dim_; }
  std::size_t feature_count() const { return static_cast<std::size_t>(freq_.rows()); }
  double delta() const { return delta_; }
  ConsistencyModel as_model() const;

  /// Draws theta entries i.i.d. N(0, 1) from the given seed.
  void randomize_theta(std::uint64_t seed);

  Mat theta;  ///< m x d

 private:
  std::size_t dim_;
  double delta_;
  Mat freq_;  ///< m x d
  Vec time_freq_;
  Vec phase_;
};

/// Shared random inputs of one loss evaluation: a grid pair index per sample,
/// data points x_0 and Gaussian noise z.
struct ObjectiveDraws {
  std::vector<std::size_t> pair;  ///< n such that the sample uses (t_n, t_{n+1})
  RowMatrix x0;
  RowMatrix z;
};

ObjectiveDraws draw_objective(const MixtureParams& dist, const TimeGrid& grid, std::size_t n_mc, std::uint64_t seed);

/// Per-sample loss ||x_{n+1} + c_{n+1} phi_i^T theta - target_i||^2 with the
/// frozen target precomputed, so the loss can be re-evaluated cheaply at many theta.
struct LossTerms {
  RowMatrix scaled_features;  ///< n x m, row i = c_out(t_{n+1}) phi(x_{n+1}, t_{n+1})
  Mat offset;                 ///< n x d, target_i - x_{n+1, i}

  double loss(const Mat& theta) const;
  /// Residual column j: scaled_features * theta_j - offset_j.
  Vec residual(const Mat& theta, Eigen::Index j) const;
};

LossTerms cd_terms(const ParametricCM& theta, const ParametricCM& theta_minus, const ScoreModel& score_model,
                   const TimeGrid& grid, const ObjectiveDraws& draws);
LossTerms ct_terms(const ParametricCM& theta, const ParametricCM& theta_minus, const TimeGrid& grid,
                   const ObjectiveDraws& draws);

double cd_loss(const ParametricCM& theta, const ParametricCM& theta_minus, const ScoreModel& score_model,
               const MixtureParams& dist, const TimeGrid& grid, std::size_t n_mc, std::uint64_t seed);
double ct_loss(const ParametricCM& theta, const ParametricCM& theta_minus, const MixtureParams& dist,
               const TimeGrid& grid, std::size_t n_mc, std::uint64_t seed);

struct GradGapPoint {
  double dt = 0.0;
  double gap = 0.0;
  double std_err = 0.0;
  bool noise_warning = false;  ///< gap < 10 std_err
};

struct GradGapOptions {
  double t_lo = 0.5;      ///< lower time of the two-point grid
  double fd_step = 1e-5;  ///< central-difference step per parameter
};

/// Central finite-difference gradients of both losses at theta = theta_minus = theta0.
/// Every dt reuses the same draws.
Mat fd_gradient(const LossTerms& terms, const Mat& theta, double step);

std::vector<GradGapPoint> grad_gap(const ParametricCM& theta0, const MixtureParams& dist, const ScoreModel& score_exact,
                                   const std::vector<double>& dt_list, std::size_t n_mc, std::uint64_t seed,
                                   const GradGapOptions& opts = {});

}  // namespace cmlab

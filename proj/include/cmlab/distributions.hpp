#pragma once

// Diagonal Gaussian mixtures and their exact Ornstein-Uhlenbeck marginals.
//
// Under dx = -x dt + sqrt(2) dW a component N(mu, diag(sigma^2)) evolves to
// N(e^{-t} mu, diag(e^{-2t} sigma^2 + 1 - e^{-2t})), so every marginal p_t of a
// mixture is again a mixture with the same weights. Scores and Hessians below
// are exact. Zero variance entries are allowed (point masses / bounded
// support); such a density only exists for t > 0.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "cmlab/types.hpp"

namespace cmlab {

struct MixtureParams {
  std::vector<double> weights;
  std::vector<Vec> means;
  std::vector<Vec> vars;  ///< per-component diagonal variances

  std::size_t dim() const { return means.empty() ? 0 : static_cast<std::size_t>(means.front().size()); }
  std::size_t components() const { return weights.size(); }
  bool has_degenerate_component() const;

  /// Throws std::invalid_argument unless weights form a probability vector
  /// (sum within 1e-12), variances are >= 0 and all shapes agree.
  void validate() const;

  static MixtureParams gaussian(Vec mean, Vec var);
  static MixtureParams isotropic(std::size_t dim, double var);
};

/// `count` equally weighted point masses evenly spaced on the circle of the given radius (d = 2).
MixtureParams circle_point_masses(std::size_t count, double radius);

SampleBatch sample(const MixtureParams& dist, std::size_t n, std::uint64_t seed);

MixtureParams marginal_at(const MixtureParams& dist, double t);

double log_density(const MixtureParams& dist, double t, const Vec& x);

/// grad log p_t(x). Throws DegenerateDensityError at t = 0 with zero variances.
Vec score(const MixtureParams& dist, double t, const Vec& x);

/// Hessian of log p_t at x: sum_i r_i (-diag(1/s_i^2) + g_i g_i^T) - g g^T with
/// g_i the component scores, r_i the posterior weights and g their average.
Mat score_hessian(const MixtureParams& dist, double t, const Vec& x);

/// Operator norm (largest |eigenvalue|) of score_hessian.
double score_hessian_norm(const MixtureParams& dist, double t, const Vec& x);

/// Estimate of sup_{x, t in [t_lo, t_hi]} ||Hess log p_t(x)||_op, floored at 1.
/// Scans n_grid geometrically spaced times; at each, n_mc points drawn from p_t
/// plus a deterministic lattice over the box of half-width 3 max(m_2, sqrt(d)).
double lipschitz_bound(const MixtureParams& dist, double t_lo, double t_hi, std::size_t n_grid,
                       std::size_t n_mc, std::uint64_t seed);

/// E||x_0||^2 under the data distribution.
double second_moment(const MixtureParams& dist);

/// Radius of the smallest origin-centred ball holding the support; +inf when
/// some component has positive variance.
double support_radius(const MixtureParams& dist);

/// Upper bound on the score-Hessian norm for data supported in B(0, R):
/// e^{-2t} R^2 / (1 - e^{-2t})^2 + 1 / (1 - e^{-2t}).
double bounded_support_hessian_bound(double radius, double t);

// JSON schema: {"weights": [w...], "means": [[...]...], "vars": [[...]...]}.
// Unknown keys are rejected.
void to_json(nlohmann::json& j, const MixtureParams& dist);
void from_json(const nlohmann::json& j, MixtureParams& dist);

}  // namespace cmlab

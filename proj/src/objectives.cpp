#include "cmlab/objectives.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cmlab/errors.hpp"
#include "cmlab/flows.hpp"
#include "cmlab/kernels.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

namespace {

std::span<const double> col(const Mat& m, Eigen::Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

Vec forward_point(const Vec& x0, const Vec& z, double t) {
  return std::exp(-t) * x0 + std::sqrt(-std::expm1(-2.0 * t)) * z;
}

template <class TargetFn>
LossTerms build_terms(const ParametricCM& theta, const TimeGrid& grid, const ObjectiveDraws& draws,
                      TargetFn&& target) {
  const auto n = draws.x0.rows();
  const auto m = static_cast<Eigen::Index>(theta.feature_count());
  LossTerms terms;
  terms.scaled_features.resize(n, m);
  terms.offset.resize(n, static_cast<Eigen::Index>(theta.dim()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t k = draws.pair[static_cast<std::size_t>(i)];
    const double t_lo = grid.points[k];
    const double t_hi = grid.points[k + 1];
    const Vec x0 = draws.x0.row(i).transpose();
    const Vec z = draws.z.row(i).transpose();
    const Vec x_hi = forward_point(x0, z, t_hi);
    theta.features(x_hi, t_hi, {terms.scaled_features.row(i).data(), static_cast<std::size_t>(m)});
    terms.scaled_features.row(i) *= (t_hi - theta.delta());
    terms.offset.row(i) = (target(x0, z, x_hi, t_lo, t_hi) - x_hi).transpose();
  }
  return terms;
}

void check_grid_pairs(const TimeGrid& grid) {
  if (grid.size() < 2) throw InvalidRangeError("objectives need a grid with at least two points");
}

}  // namespace

ParametricCM::ParametricCM(std::size_t dim, double delta, std::size_t features, std::uint64_t feature_seed)
    : dim_(dim), delta_(delta) {
  if (dim == 0 || features == 0) throw DimensionError("ParametricCM: dim and feature count must be positive");
  const auto m = static_cast<Eigen::Index>(features);
  const auto d = static_cast<Eigen::Index>(dim);
  Rng rng(derive_seed(feature_seed, "parametric.features"));
  freq_.resize(m, d);
  time_freq_.resize(m);
  phase_.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) freq_(k, j) = rng.gaussian();
    time_freq_(k) = rng.gaussian();
    phase_(k) = 2.0 * std::numbers::pi * rng.uniform();
  }
  theta = Mat::Zero(m, d);
}

void ParametricCM::features(const Vec& x, double t, std::span<double> out) const {
  if (out.size() != feature_count()) throw DimensionError("ParametricCM::features: output has wrong size");
  Eigen::Map<Vec>(out.data(), freq_.rows()) = (freq_ * x + t * time_freq_ + phase_).array().sin().matrix();
}

Vec ParametricCM::operator()(const Vec& x, double t) const {
  if (static_cast<std::size_t>(x.size()) != dim_) throw DimensionError("ParametricCM: point has wrong dimension");
  Vec phi(freq_.rows());
  features(x, t, {phi.data(), static_cast<std::size_t>(phi.size())});
  return x + (t - delta_) * (theta.transpose() * phi);
}

ConsistencyModel ParametricCM::as_model() const {
  CmProvenance prov;
  prov.kind = "parametric";
  ParametricCM copy = *this;
  return ConsistencyModel(dim_, delta_, [copy](const Vec& x, double t) { return copy(x, t); }, prov);
}

void ParametricCM::randomize_theta(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "parametric.theta"));
  rng.fill_gaussian({theta.data(), static_cast<std::size_t>(theta.size())});
}

ObjectiveDraws draw_objective(const MixtureParams& dist, const TimeGrid& grid, std::size_t n_mc, std::uint64_t seed) {
  check_grid_pairs(grid);
  if (n_mc == 0) throw std::invalid_argument("draw_objective: n_mc must be positive");
  ObjectiveDraws d;
  d.x0 = sample(dist, n_mc, derive_seed(seed, "objective.x0")).points;
  d.z.resize(static_cast<Eigen::Index>(n_mc), static_cast<Eigen::Index>(dist.dim()));
  Rng zr(derive_seed(seed, "objective.z"));
  zr.fill_gaussian({d.z.data(), static_cast<std::size_t>(d.z.size())});
  Rng pr(derive_seed(seed, "objective.pair"));
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 2);
  d.pair.resize(n_mc);
  for (auto& p : d.pair) p = pick(pr.engine());
  return d;
}

Vec LossTerms::residual(const Mat& theta, Eigen::Index j) const {
  const auto n = scaled_features.rows();
  Vec r(n);
  kernels::project_rows({scaled_features.data(), static_cast<std::size_t>(scaled_features.size())},
                        static_cast<std::size_t>(scaled_features.cols()), col(theta, j),
                        {r.data(), static_cast<std::size_t>(n)});
  r -= offset.col(j);
  return r;
}

double LossTerms::loss(const Mat& theta) const {
  if (theta.rows() != scaled_features.cols() || theta.cols() != offset.cols()) {
    throw DimensionError("LossTerms::loss: theta has wrong shape");
  }
  const auto n = scaled_features.rows();
  Vec proj(n);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    kernels::project_rows({scaled_features.data(), static_cast<std::size_t>(scaled_features.size())},
                          static_cast<std::size_t>(scaled_features.cols()), col(theta, j),
                          {proj.data(), static_cast<std::size_t>(n)});
    acc += kernels::sum_sq_diff({proj.data(), static_cast<std::size_t>(n)}, col(offset, j));
  }
  return acc / static_cast<double>(n);
}

LossTerms cd_terms(const ParametricCM& theta, const ParametricCM& theta_minus, const ScoreModel& score_model,
                   const TimeGrid& grid, const ObjectiveDraws& draws) {
  check_grid_pairs(grid);
  return build_terms(theta, grid, draws, [&](const Vec&, const Vec&, const Vec& x_hi, double t_lo, double t_hi) {
    return theta_minus(exp_integrator_step(score_model, x_hi, t_hi, t_lo), t_lo);
  });
}

LossTerms ct_terms(const ParametricCM& theta, const ParametricCM& theta_minus, const TimeGrid& grid,
                   const ObjectiveDraws& draws) {
  check_grid_pairs(grid);
  return build_terms(theta, grid, draws, [&](const Vec& x0, const Vec& z, const Vec&, double t_lo, double t_hi) {
    const double coef = -std::expm1(-(t_lo + t_hi)) / std::sqrt(-std::expm1(-2.0 * t_hi));
    const Vec y = std::exp(-t_lo) * x0 + coef * z;
    return theta_minus(y, t_lo);
  });
}

double cd_loss(const ParametricCM& theta, const ParametricCM& theta_minus, const ScoreModel& score_model,
               const MixtureParams& dist, const TimeGrid& grid, std::size_t n_mc, std::uint64_t seed) {
  const ObjectiveDraws draws = draw_objective(dist, grid, n_mc, seed);
  return cd_terms(theta, theta_minus, score_model, grid, draws).loss(theta.theta);
}

double ct_loss(const ParametricCM& theta, const ParametricCM& theta_minus, const MixtureParams& dist,
               const TimeGrid& grid, std::size_t n_mc, std::uint64_t seed) {
  const ObjectiveDraws draws = draw_objective(dist, grid, n_mc, seed);
  return ct_terms(theta, theta_minus, grid, draws).loss(theta.theta);
}

Mat fd_gradient(const LossTerms& terms, const Mat& theta, double step) {
  Mat grad(theta.rows(), theta.cols());
  Mat probe = theta;
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    for (Eigen::Index k = 0; k < theta.rows(); ++k) {
      probe(k, j) = theta(k, j) + step;
      const double up = terms.loss(probe);
      probe(k, j) = theta(k, j) - step;
      const double down = terms.loss(probe);
      probe(k, j) = theta(k, j);
      grad(k, j) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

std::vector<GradGapPoint> grad_gap(const ParametricCM& theta0, const MixtureParams& dist, const ScoreModel& score_exact,
                                   const std::vector<double>& dt_list, std::size_t n_mc, std::uint64_t seed,
                                   const GradGapOptions& opts) {
  if (dt_list.size() < 3) throw std::invalid_argument("grad_gap: need at least three dt values");
  for (std::size_t i = 0; i < dt_list.size(); ++i) {
    if (!(dt_list[i] > 0.0) || (i > 0 && !(dt_list[i] < dt_list[i - 1]))) {
      throw std::invalid_argument("grad_gap: dt values must be positive and decreasing");
    }
  }
  if (!(opts.t_lo > theta0.delta())) throw InvalidRangeError("grad_gap: t_lo must exceed delta");
  if (score_exact.provenance().kind != "exact") {
    throw std::invalid_argument("grad_gap: the CD side must use the exact score");
  }

  const Mat& th = theta0.theta;
  const Eigen::Index m = th.rows();
  const Eigen::Index d = th.cols();
  std::vector<GradGapPoint> out;
  for (const double dt : dt_list) {
    const TimeGrid grid = uniform_grid(opts.t_lo, dt, 2);
    const ObjectiveDraws draws = draw_objective(dist, grid, n_mc, seed);
    const LossTerms cd = cd_terms(theta0, theta0, score_exact, grid, draws);
    const LossTerms ct = ct_terms(theta0, theta0, grid, draws);

    // Per-sample central differences, so the gap's standard error comes from
    // the same evaluations as the gap itself. Changing theta(k, j) only moves
    // residual column j.
    const auto n = static_cast<Eigen::Index>(n_mc);
    Mat contrib(n, m * d);
    Mat probe = th;
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index k = 0; k < m; ++k) {
        probe(k, j) = th(k, j) + opts.fd_step;
        const Vec cd_up = cd.residual(probe, j).array().square();
        const Vec ct_up = ct.residual(probe, j).array().square();
        probe(k, j) = th(k, j) - opts.fd_step;
        const Vec cd_down = cd.residual(probe, j).array().square();
        const Vec ct_down = ct.residual(probe, j).array().square();
        probe(k, j) = th(k, j);
        contrib.col(j * m + k) = ((ct_up - ct_down) - (cd_up - cd_down)) / (2.0 * opts.fd_step);
      }
    }
    const Vec mean_gap = contrib.colwise().mean().transpose();
    GradGapPoint p;
    p.dt = dt;
    p.gap = mean_gap.norm();
    if (p.gap > 0.0 && n > 1) {
      const Vec proj = contrib * (mean_gap / p.gap);
      const double var = (proj.array() - proj.mean()).square().sum() / static_cast<double>(n - 1);
      p.std_err = std::sqrt(var / static_cast<double>(n));
    }
    p.noise_warning = p.gap < 10.0 * p.std_err;
    out.push_back(p);
  }
  return out;
}

}  // namespace cmlab

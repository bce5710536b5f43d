#include "cmlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "cmlab/errors.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

namespace {

void require_mc(std::size_t n, const char* what) {
  if (n < 100) throw std::invalid_argument(std::string(what) + ": need at least 100 Monte-Carlo points");
}

}  // namespace

PerturbationField::PerturbationField(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw DimensionError("PerturbationField: dim must be positive");
  Rng rng(derive_seed(seed, "perturbation"));
  const auto d = static_cast<Eigen::Index>(dim);
  freq_.resize(d, d);
  time_freq_.resize(d);
  phase_.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) freq_(j, k) = rng.gaussian();
    time_freq_(j) = rng.gaussian();
    phase_(j) = 2.0 * std::numbers::pi * rng.uniform();
  }
}

Vec PerturbationField::operator()(const Vec& x, double t) const {
  if (x.size() != freq_.cols()) throw DimensionError("PerturbationField: point has wrong dimension");
  return (freq_ * x + t * time_freq_ + phase_).array().sin().matrix();
}

double PerturbationField::gradient_bound() const {
  // grad_x g = diag(cos(.)) W, so its norm is at most ||W||_op.
  Eigen::JacobiSVD<Mat> svd(freq_);
  return svd.singularValues()(0);
}

ConsistencyModel::ConsistencyModel(std::size_t dim, double delta, Fn fn, CmProvenance provenance)
    : dim_(dim), delta_(delta), fn_(std::move(fn)), provenance_(std::move(provenance)) {
  if (!(delta > 0.0)) throw InvalidRangeError("ConsistencyModel: delta must be positive");
}

ConsistencyModel ConsistencyModel::exact(const MixtureParams& dist, double delta, double tol) {
  CmProvenance prov;
  prov.kind = "exact";
  prov.tol = tol;
  return ConsistencyModel(
      dist.dim(), delta, [dist, delta, tol](const Vec& x, double t) { return consistency_exact(dist, x, t, delta, tol); },
      prov);
}

ConsistencyModel ConsistencyModel::empirical(const ScoreModel& score_model, double delta, double tol) {
  CmProvenance prov;
  prov.kind = "empirical";
  prov.tol = tol;
  prov.eps_target = score_model.provenance().eps_target;
  prov.seed = score_model.provenance().seed;
  return ConsistencyModel(
      score_model.dim(), delta,
      [score_model, delta, tol](const Vec& x, double t) { return consistency_empirical(score_model, x, t, delta, tol); },
      prov);
}

ConsistencyModel ConsistencyModel::distilled(const ScoreModel& score_model, const TimeGrid& grid) {
  if (grid.size() < 2) throw InvalidRangeError("distilled map needs a grid with at least two points");
  CmProvenance prov;
  prov.kind = "distilled";
  prov.eps_target = score_model.provenance().eps_target;
  prov.seed = score_model.provenance().seed;
  prov.grid_h = grid.h;
  std::vector<double> pts = grid.points;
  return ConsistencyModel(
      score_model.dim(), grid.delta,
      [score_model, pts](const Vec& x, double t) {
        // Index of the largest grid point strictly below t.
        auto it = std::lower_bound(pts.begin(), pts.end(), t);
        Vec y = x;
        double cur = t;
        while (it != pts.begin()) {
          --it;
          y = exp_integrator_step(score_model, y, cur, *it);
          cur = *it;
        }
        return y;
      },
      prov);
}

Vec ConsistencyModel::operator()(const Vec& x, double t) const {
  if (static_cast<std::size_t>(x.size()) != dim_) throw DimensionError("ConsistencyModel: point has wrong dimension");
  if (t <= delta_) return x;
  return fn_(x, t);
}

RowMatrix ConsistencyModel::apply(const RowMatrix& batch, double t) const {
  RowMatrix out(batch.rows(), batch.cols());
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    out.row(i) = (*this)(batch.row(i).transpose(), t).transpose();
  }
  return out;
}

ScoreModel perturb_score(const MixtureParams& dist, double eps_target, std::uint64_t seed) {
  if (eps_target < 0.0) throw std::invalid_argument("perturb_score: eps_target must be >= 0");
  const PerturbationField g(dist.dim(), seed);
  ScoreProvenance prov{"perturbed", eps_target, seed};
  return ScoreModel(
      dist.dim(), [dist, g, eps_target](const Vec& x, double t) -> Vec { return score(dist, t, x) + eps_target * g(x, t); },
      prov);
}

ConsistencyModel perturb_cm(const ConsistencyModel& base, double eps_target, std::uint64_t seed) {
  if (eps_target < 0.0) throw std::invalid_argument("perturb_cm: eps_target must be >= 0");
  const PerturbationField g(base.dim(), seed);
  CmProvenance prov = base.provenance();
  prov.base_kind = prov.kind;
  prov.kind = "perturbed";
  prov.eps_target = eps_target;
  prov.seed = seed;
  const double delta = base.delta();
  return ConsistencyModel(
      base.dim(), delta,
      [base, g, eps_target, delta](const Vec& x, double t) -> Vec { return base(x, t) + eps_target * (t - delta) * g(x, t); },
      prov);
}

double measure_score_error(const ScoreModel& model, const MixtureParams& dist, const TimeGrid& grid,
                           std::size_t n_mc, std::uint64_t seed) {
  require_mc(n_mc, "measure_score_error");
  double worst = 0.0;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const double t = grid.points[n];
    const SampleBatch pts = sample(marginal_at(dist, t), n_mc, derive_seed(seed, "score_error", n));
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec x = pts.point(i);
      acc += (model(x, t) - score(dist, t, x)).squaredNorm();
    }
    worst = std::max(worst, std::sqrt(acc / static_cast<double>(n_mc)));
  }
  return worst;
}

double measure_cm_error(const ConsistencyModel& cm, const ScoreModel& score_model, const MixtureParams& dist,
                        const TimeGrid& grid, std::size_t n_mc, std::uint64_t seed) {
  require_mc(n_mc, "measure_cm_error");
  if (grid.size() < 2) throw InvalidRangeError("measure_cm_error: grid needs at least two points");
  double worst = 0.0;
  for (std::size_t n = 0; n + 1 < grid.size(); ++n) {
    const double t_lo = grid.points[n];
    const double t_hi = grid.points[n + 1];
    const SampleBatch pts = sample(marginal_at(dist, t_hi), n_mc, derive_seed(seed, "cm_error", n));
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec x = pts.point(i);
      const Vec x_hat = exp_integrator_step(score_model, x, t_hi, t_lo);
      acc += (cm(x, t_hi) - cm(x_hat, t_lo)).squaredNorm();
    }
    worst = std::max(worst, std::sqrt(acc / static_cast<double>(n_mc)) / (t_hi - t_lo));
  }
  return worst;
}

double estimate_lipschitz(const ConsistencyModel& map, const MixtureParams& dist, double t, std::size_t n_pairs,
                          std::uint64_t seed) {
  require_mc(n_pairs, "estimate_lipschitz");
  const SampleBatch pts = sample(marginal_at(dist, t), n_pairs, derive_seed(seed, "lipschitz.points"));
  Rng rng(derive_seed(seed, "lipschitz.directions"));
  const auto d = static_cast<Eigen::Index>(dist.dim());
  double worst = 1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec x = pts.point(i);
    Vec u(d);
    rng.fill_gaussian({u.data(), static_cast<std::size_t>(d)});
    u.normalize();
    const Vec fx = map(x, t);
    for (const double r : {1e-3, 1e-2}) {
      worst = std::max(worst, (map(x + r * u, t) - fx).norm() / r);
    }
  }
  return worst;
}

ScoreModel recover_score(const ConsistencyModel& cm, const TimeGrid& grid) {
  if (grid.size() < 2) throw InvalidRangeError("recover_score: grid needs at least two points");
  const double t2 = grid.points[1];
  const double h1 = t2 - grid.points[0];
  const double denom = std::expm1(h1);
  if (!(denom >= 1e-12)) throw InvalidRangeError("recover_score: e^{h_1} - 1 below 1e-12");
  ScoreProvenance prov{"recovered", cm.provenance().eps_target, cm.provenance().seed};
  return ScoreModel(
      cm.dim(), [cm, t2, denom](const Vec& x, double) -> Vec { return (cm(x, t2) - x - denom * x) / denom; }, prov);
}

}  // namespace cmlab

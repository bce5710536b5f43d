#include "cmlab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "cmlab/errors.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

namespace {

// Components whose log posterior weight falls this far below the maximum
// contribute exactly zero.
constexpr double kLogUnderflow = -745.0;

struct Marginal {
  double decay;        // e^{-t}
  double added_noise;  // 1 - e^{-2t}
};

Marginal marginal_coefficients(double t) {
  if (!(t >= 0.0)) throw InvalidRangeError("diffusion time must be >= 0, got " + std::to_string(t));
  return {std::exp(-t), -std::expm1(-2.0 * t)};
}

void require_density(const MixtureParams& dist, double t) {
  if (t == 0.0 && dist.has_degenerate_component()) {
    throw DegenerateDensityError("density undefined at t = 0 for a mixture with zero-variance entries");
  }
}

void require_dim(const MixtureParams& dist, const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != dist.dim()) {
    throw DimensionError("point has dimension " + std::to_string(x.size()) + ", mixture has " +
                         std::to_string(dist.dim()));
  }
}

// Per-component quantities of p_t evaluated at x.
struct Posterior {
  std::vector<double> weight;  // responsibilities r_i
  std::vector<Vec> grad;       // component scores -(x - m_i) / s_i^2
  std::vector<Vec> inv_var;    // 1 / s_i^2
  double log_density = 0.0;
};

Posterior posterior(const MixtureParams& dist, double t, const Vec& x) {
  require_dim(dist, x);
  require_density(dist, t);
  const auto [decay, added] = marginal_coefficients(t);
  const std::size_t k = dist.components();
  const double d = static_cast<double>(dist.dim());

  Posterior post;
  post.weight.resize(k);
  post.grad.resize(k);
  post.inv_var.resize(k);
  std::vector<double> log_terms(k);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const Vec var = decay * decay * dist.vars[i].array() + added;
    post.inv_var[i] = var.cwiseInverse();
    const Vec diff = x - decay * dist.means[i];
    post.grad[i] = -diff.cwiseProduct(post.inv_var[i]);
    const double quad = diff.cwiseProduct(post.grad[i]).sum();  // -(x-m)^T S^{-1} (x-m)
    const double log_det = var.array().log().sum();
    log_terms[i] = dist.weights[i] > 0.0
                       ? std::log(dist.weights[i]) + 0.5 * quad - 0.5 * log_det -
                             0.5 * d * std::log(2.0 * std::numbers::pi)
                       : -std::numeric_limits<double>::infinity();
    max_log = std::max(max_log, log_terms[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double rel = log_terms[i] - max_log;
    post.weight[i] = rel < kLogUnderflow ? 0.0 : std::exp(rel);
    total += post.weight[i];
  }
  for (double& w : post.weight) w /= total;
  post.log_density = max_log + std::log(total);
  return post;
}

}  // namespace

bool MixtureParams::has_degenerate_component() const {
  return std::any_of(vars.begin(), vars.end(), [](const Vec& v) { return (v.array() == 0.0).any(); });
}

void MixtureParams::validate() const {
  const std::size_t k = weights.size();
  if (k == 0) throw std::invalid_argument("mixture needs at least one component");
  if (means.size() != k || vars.size() != k) {
    throw std::invalid_argument("mixture weights, means and vars must have the same length");
  }
  const auto d = means.front().size();
  if (d < 1) throw std::invalid_argument("mixture dimension must be >= 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw std::invalid_argument("mixture weights must be finite and nonnegative");
    }
    sum += weights[i];
    if (means[i].size() != d || vars[i].size() != d) {
      throw std::invalid_argument("mixture component " + std::to_string(i) + " has inconsistent dimension");
    }
    if (!means[i].allFinite() || !vars[i].allFinite() || (vars[i].array() < 0.0).any()) {
      throw std::invalid_argument("mixture component " + std::to_string(i) + " has invalid mean or variance");
    }
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
}

MixtureParams MixtureParams::gaussian(Vec mean, Vec var) {
  MixtureParams p{{1.0}, {std::move(mean)}, {std::move(var)}};
  p.validate();
  return p;
}

MixtureParams MixtureParams::isotropic(std::size_t dim, double var) {
  return gaussian(Vec::Zero(static_cast<Eigen::Index>(dim)), Vec::Constant(static_cast<Eigen::Index>(dim), var));
}

MixtureParams circle_point_masses(std::size_t count, double radius) {
  if (count == 0) throw std::invalid_argument("circle mixture needs at least one point");
  MixtureParams p;
  for (std::size_t i = 0; i < count; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
    p.weights.push_back(1.0 / static_cast<double>(count));
    p.means.push_back(Vec{{radius * std::cos(angle), radius * std::sin(angle)}});
    p.vars.push_back(Vec::Zero(2));
  }
  // Renormalise so the weights sum to one exactly enough for validate().
  double sum = 0.0;
  for (double w : p.weights) sum += w;
  for (double& w : p.weights) w /= sum;
  p.validate();
  return p;
}

SampleBatch sample(const MixtureParams& dist, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  dist.validate();
  const auto d = static_cast<Eigen::Index>(dist.dim());
  Rng rng(derive_seed(seed, "mixture.sample"));
  std::discrete_distribution<std::size_t> pick(dist.weights.begin(), dist.weights.end());

  std::vector<Vec> stddev;
  stddev.reserve(dist.components());
  for (const Vec& v : dist.vars) stddev.push_back(v.cwiseSqrt());

  SampleBatch batch;
  batch.seed = seed;
  batch.points.resize(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < batch.points.rows(); ++i) {
    const std::size_t c = dist.components() == 1 ? 0 : pick(rng.engine());
    for (Eigen::Index j = 0; j < d; ++j) {
      batch.points(i, j) = dist.means[c](j) + stddev[c](j) * rng.gaussian();
    }
  }
  return batch;
}

MixtureParams marginal_at(const MixtureParams& dist, double t) {
  const auto [decay, added] = marginal_coefficients(t);
  if (t == 0.0) return dist;
  MixtureParams out = dist;
  for (std::size_t i = 0; i < dist.components(); ++i) {
    out.means[i] = decay * dist.means[i];
    out.vars[i] = (decay * decay * dist.vars[i].array() + added).matrix();
  }
  return out;
}

double log_density(const MixtureParams& dist, double t, const Vec& x) { return posterior(dist, t, x).log_density; }

Vec score(const MixtureParams& dist, double t, const Vec& x) {
  const Posterior post = posterior(dist, t, x);
  Vec s = Vec::Zero(x.size());
  for (std::size_t i = 0; i < post.weight.size(); ++i) {
    if (post.weight[i] != 0.0) s += post.weight[i] * post.grad[i];
  }
  return s;
}

Mat score_hessian(const MixtureParams& dist, double t, const Vec& x) {
  const Posterior post = posterior(dist, t, x);
  const auto d = x.size();
  Mat h = Mat::Zero(d, d);
  Vec mean_grad = Vec::Zero(d);
  for (std::size_t i = 0; i < post.weight.size(); ++i) {
    const double r = post.weight[i];
    if (r == 0.0) continue;
    h.diagonal() -= r * post.inv_var[i];
    h.noalias() += r * post.grad[i] * post.grad[i].transpose();
    mean_grad += r * post.grad[i];
  }
  h.noalias() -= mean_grad * mean_grad.transpose();
  return h;
}

double score_hessian_norm(const MixtureParams& dist, double t, const Vec& x) {
  const Mat h = score_hessian(dist, t, x);
  Eigen::SelfAdjointEigenSolver<Mat> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double lipschitz_bound(const MixtureParams& dist, double t_lo, double t_hi, std::size_t n_grid, std::size_t n_mc,
                       std::uint64_t seed) {
  if (!(t_lo > 0.0) || !(t_hi >= t_lo)) throw InvalidRangeError("lipschitz_bound needs 0 < t_lo <= t_hi");
  if (n_grid < 1) throw std::invalid_argument("lipschitz_bound: n_grid must be >= 1");
  const std::size_t d = dist.dim();
  const double half_width = 3.0 * std::max(std::sqrt(second_moment(dist)), std::sqrt(static_cast<double>(d)));

  // Lattice with k points per axis and k^d <= max(n_mc, 2^d).
  std::size_t per_axis = 2;
  while (std::pow(static_cast<double>(per_axis + 1), static_cast<double>(d)) <= static_cast<double>(n_mc)) {
    ++per_axis;
  }
  std::size_t lattice_size = 1;
  for (std::size_t j = 0; j < d; ++j) lattice_size *= per_axis;

  double best = 1.0;
  for (std::size_t g = 0; g < n_grid; ++g) {
    const double frac = n_grid == 1 ? 0.0 : static_cast<double>(g) / static_cast<double>(n_grid - 1);
    const double t = t_lo * std::pow(t_hi / t_lo, frac);
    if (n_mc > 0) {
      const SampleBatch pts = sample(marginal_at(dist, t), n_mc, derive_seed(seed, "lipschitz.mc", g));
      for (std::size_t i = 0; i < pts.size(); ++i) best = std::max(best, score_hessian_norm(dist, t, pts.point(i)));
    }
    Vec x(static_cast<Eigen::Index>(d));
    for (std::size_t idx = 0; idx < lattice_size; ++idx) {
      std::size_t rest = idx;
      for (std::size_t j = 0; j < d; ++j) {
        const double u = static_cast<double>(rest % per_axis) / static_cast<double>(per_axis - 1);
        x(static_cast<Eigen::Index>(j)) = -half_width + 2.0 * half_width * u;
        rest /= per_axis;
      }
      best = std::max(best, score_hessian_norm(dist, t, x));
    }
  }
  return best;
}

double second_moment(const MixtureParams& dist) {
  double m2 = 0.0;
  for (std::size_t i = 0; i < dist.components(); ++i) {
    m2 += dist.weights[i] * (dist.means[i].squaredNorm() + dist.vars[i].sum());
  }
  return m2;
}

double support_radius(const MixtureParams& dist) {
  double r = 0.0;
  for (std::size_t i = 0; i < dist.components(); ++i) {
    if ((dist.vars[i].array() > 0.0).any()) return std::numeric_limits<double>::infinity();
    r = std::max(r, dist.means[i].norm());
  }
  return r;
}

double bounded_support_hessian_bound(double radius, double t) {
  const double noise = -std::expm1(-2.0 * t);
  return std::exp(-2.0 * t) * radius * radius / (noise * noise) + 1.0 / noise;
}

void to_json(nlohmann::json& j, const MixtureParams& dist) {
  auto rows = [](const std::vector<Vec>& vs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Vec& v : vs) arr.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    return arr;
  };
  j = nlohmann::json{{"weights", dist.weights}, {"means", rows(dist.means)}, {"vars", rows(dist.vars)}};
}

void from_json(const nlohmann::json& j, MixtureParams& dist) {
  if (!j.is_object()) throw ConfigError("distribution", "expected an object");
  for (const auto& item : j.items()) {
    if (item.key() != "weights" && item.key() != "means" && item.key() != "vars") {
      throw ConfigError("distribution." + item.key(), "unknown key");
    }
  }
  for (const char* key : {"weights", "means", "vars"}) {
    if (!j.contains(key)) throw ConfigError(std::string("distribution.") + key, "missing");
  }
  auto rows = [](const nlohmann::json& arr, const std::string& name) {
    if (!arr.is_array()) throw ConfigError("distribution." + name, "expected an array of arrays");
    std::vector<Vec> out;
    for (const auto& row : arr) {
      const auto v = row.get<std::vector<double>>();
      out.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return out;
  };
  MixtureParams out;
  out.weights = j.at("weights").get<std::vector<double>>();
  out.means = rows(j.at("means"), "means");
  out.vars = rows(j.at("vars"), "vars");
  try {
    out.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("distribution", e.what());
  }
  dist = std::move(out);
}

void check_batch(const SampleBatch& batch) {
  if (batch.points.rows() < 1 || batch.points.cols() < 1) {
    throw std::invalid_argument("sample batch must hold at least one point of dimension >= 1");
  }
  if (!batch.points.allFinite()) throw std::invalid_argument("sample batch contains NaN or Inf entries");
}

}  // namespace cmlab

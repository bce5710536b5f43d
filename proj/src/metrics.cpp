#include "cmlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cmlab/errors.hpp"
#include "cmlab/kernels.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

namespace {

std::vector<double> sorted_column(const SampleBatch& b, std::size_t n) {
  std::vector<double> xs(b.points.data(), b.points.data() + n);
  std::sort(xs.begin(), xs.end());
  return xs;
}

double w2_sq_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

void require_single_gaussian(const MixtureParams& p, const char* what) {
  p.validate();
  if (p.components() != 1) throw std::invalid_argument(std::string(what) + ": needs a single-component Gaussian");
}

Mat sym_sqrt(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  const Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double normal_pdf(double x, double m, double s) {
  const double z = (x - m) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * M_PI));
}

}  // namespace

const char* method_name(MetricMethod m) {
  switch (m) {
    case MetricMethod::exact_1d: return "exact-1d";
    case MetricMethod::sliced: return "sliced";
    case MetricMethod::gaussian_closed_form: return "gaussian-closed-form";
    case MetricMethod::histogram_tv: return "histogram-tv";
    case MetricMethod::analytic_tv: return "analytic-tv";
  }
  return "unknown";
}

void to_json(nlohmann::json& j, const MetricReport& r) {
  j = nlohmann::json{{"name", r.name}, {"value", r.value}, {"method", method_name(r.method)}, {"n_used", r.n_used}};
  if (r.std_err) j["std_err"] = *r.std_err;
}

MetricReport w2_1d_exact(const SampleBatch& a, const SampleBatch& b) {
  if (a.dim() != 1 || b.dim() != 1) throw DimensionError("w2_1d_exact needs d = 1");
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) throw std::invalid_argument("w2_1d_exact: empty batch");
  const double v = std::sqrt(w2_sq_sorted(sorted_column(a, n), sorted_column(b, n)));
  return {"w2_1d", v, MetricMethod::exact_1d, n, std::nullopt};
}

double sliced_isotropic_calibration(std::size_t dim) { return std::sqrt(static_cast<double>(dim)); }

MetricReport w2_sliced(const SampleBatch& a, const SampleBatch& b, std::size_t n_proj, std::uint64_t seed) {
  if (a.dim() != b.dim()) throw DimensionError("w2_sliced: batches differ in dimension");
  if (n_proj == 0) throw std::invalid_argument("w2_sliced: n_proj must be positive");
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) throw std::invalid_argument("w2_sliced: empty batch");
  const std::size_t d = a.dim();
  Rng rng(derive_seed(seed, "sliced.directions"));
  std::vector<double> dir(d), pa(n), pb(n);
  double acc = 0.0;
  for (std::size_t p = 0; p < n_proj; ++p) {
    rng.fill_gaussian(dir);
    double norm = 0.0;
    for (double v : dir) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : dir) v /= norm;
    kernels::project_rows({a.points.data(), n * d}, d, dir, pa);
    kernels::project_rows({b.points.data(), n * d}, d, dir, pb);
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    acc += w2_sq_sorted(pa, pb);
  }
  return {"w2_sliced", std::sqrt(acc / static_cast<double>(n_proj)), MetricMethod::sliced, n, std::nullopt};
}

MetricReport w2_gaussian(const MixtureParams& p, const MixtureParams& q) {
  require_single_gaussian(p, "w2_gaussian");
  require_single_gaussian(q, "w2_gaussian");
  if (p.dim() != q.dim()) throw DimensionError("w2_gaussian: dimensions differ");
  const double mean_part = (p.means[0] - q.means[0]).squaredNorm();
  const double scale_part = (p.vars[0].cwiseSqrt() - q.vars[0].cwiseSqrt()).squaredNorm();
  return {"w2_gaussian", std::sqrt(mean_part + scale_part), MetricMethod::gaussian_closed_form, 0, std::nullopt};
}

GaussianFit fit_gaussian(const SampleBatch& batch) {
  if (batch.size() < 2) throw std::invalid_argument("fit_gaussian: need at least two points");
  GaussianFit fit;
  fit.mean = batch.points.colwise().mean().transpose();
  const Mat centred = batch.points.rowwise() - fit.mean.transpose();
  fit.cov = centred.transpose() * centred / static_cast<double>(batch.size() - 1);
  return fit;
}

double w2_gaussian_full(const Vec& m1, const Mat& c1, const Vec& m2, const Mat& c2) {
  if (m1.size() != m2.size() || c1.rows() != c2.rows()) throw DimensionError("w2_gaussian_full: dimensions differ");
  const Mat r2 = sym_sqrt(c2);
  const Mat cross = sym_sqrt(r2 * c1 * r2);
  const double bures = c1.trace() + c2.trace() - 2.0 * cross.trace();
  return std::sqrt(std::max(0.0, (m1 - m2).squaredNorm() + bures));
}

MetricReport w2_fitted_gaussian(const SampleBatch& batch, const Vec& mean, const Mat& cov) {
  const GaussianFit fit = fit_gaussian(batch);
  return {"w2_fitted_gaussian", w2_gaussian_full(fit.mean, fit.cov, mean, cov), MetricMethod::gaussian_closed_form,
          batch.size(), std::nullopt};
}

MetricReport tv_1d(const SampleBatch& a, const SampleBatch& b, std::size_t bins) {
  if (a.dim() != 1 || b.dim() != 1) throw DimensionError("tv_1d needs d = 1");
  if (bins < 10) throw std::invalid_argument("tv_1d: bins must be >= 10");
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("tv_1d: empty batch");
  const auto [amin, amax] = std::minmax_element(a.points.data(), a.points.data() + a.size());
  const auto [bmin, bmax] = std::minmax_element(b.points.data(), b.points.data() + b.size());
  const double lo = std::min(*amin, *bmin);
  const double hi = std::max(*amax, *bmax);
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  std::vector<double> diff(bins, 0.0);
  auto add = [&](const SampleBatch& s, double w) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto k = static_cast<std::size_t>((s.points.data()[i] - lo) / width);
      diff[std::min(k, bins - 1)] += w;
    }
  };
  add(a, 1.0 / static_cast<double>(a.size()));
  add(b, -1.0 / static_cast<double>(b.size()));
  double tv = 0.0;
  for (double v : diff) tv += std::abs(v);
  tv = std::min(1.0, 0.5 * tv);
  return {"tv_1d", tv, MetricMethod::histogram_tv, a.size() + b.size(), std::nullopt};
}

MetricReport tv_gaussian_1d(double m1, double s1, double m2, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw InvalidRangeError("tv_gaussian_1d: standard deviations must be positive");
  MetricReport r{"tv_gaussian_1d", 0.0, MetricMethod::analytic_tv, 0, 0.0};
  if (m1 == m2 && s1 == s2) return r;

  // Points where the two densities cross; |phi1 - phi2| is smooth between them.
  std::vector<double> cuts;
  if (s1 == s2) {
    cuts.push_back(0.5 * (m1 + m2));
  } else {
    // Solve A x^2 + B x + C = 0 from log phi1 = log phi2.
    const double a = 1.0 / (s2 * s2) - 1.0 / (s1 * s1);
    const double b = 2.0 * (m1 / (s1 * s1) - m2 / (s2 * s2));
    const double c = m2 * m2 / (s2 * s2) - m1 * m1 / (s1 * s1) + 2.0 * std::log(s2 / s1);
    const double disc = b * b - 4.0 * a * c;
    if (disc > 0.0) {
      const double root = std::sqrt(disc);
      cuts.push_back((-b - root) / (2.0 * a));
      cuts.push_back((-b + root) / (2.0 * a));
      std::sort(cuts.begin(), cuts.end());
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> edges{-inf};
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(inf);

  auto integrand = [&](double x) { return std::abs(normal_pdf(x, m1, s1) - normal_pdf(x, m2, s2)); };
  double total = 0.0;
  double err_total = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, edges[k], edges[k + 1], 15,
                                                                             1e-12, &err);
    err_total += err;
  }
  r.value = std::clamp(0.5 * total, 0.0, 1.0);
  r.std_err = 0.5 * err_total;
  return r;
}

MomentSummary moment_report(const SampleBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("moment_report: empty batch");
  MomentSummary s;
  const double n = static_cast<double>(batch.size());
  s.mean = batch.points.colwise().mean().transpose();
  const RowMatrix centred = batch.points.rowwise() - s.mean.transpose();
  s.var = batch.size() > 1 ? Vec(centred.colwise().squaredNorm().transpose() / (n - 1.0)) : Vec::Zero(s.mean.size());
  s.second_moment = batch.points.rowwise().squaredNorm().mean();
  return s;
}

}  // namespace cmlab

#pragma once

// W2 and TV between sample batches and/or Gaussians. The sliced W2 is a proxy
// and is labelled as such; it is only ever compared against other sliced values.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "cmlab/distributions.hpp"
#include "cmlab/types.hpp"

namespace cmlab {

enum class MetricMethod { exact_1d, sliced, gaussian_closed_form, histogram_tv, analytic_tv };

const char* method_name(MetricMethod m);

struct MetricReport {
  std::string name;
  double value = 0.0;
  MetricMethod method = MetricMethod::exact_1d;
  std::size_t n_used = 0;
  std::optional<double> std_err;
};

void to_json(nlohmann::json& j, const MetricReport& r);

/// Quantile-coupling W2 in one dimension. Unequal sizes are compared on the
/// first min(n_a, n_b) points of each batch.
MetricReport w2_1d_exact(const SampleBatch& a, const SampleBatch& b);

/// W2 between a 1-D batch and the distribution with quantile function `quantile`,
/// evaluated at the midpoints (i - 1/2)/n.
template <class Quantile>
MetricReport w2_1d_to_quantiles(const SampleBatch& a, Quantile&& quantile);

/// sqrt(mean over n_proj random unit directions of W2^2 of the projections).
/// For isotropic Gaussians N(0, s1^2 I) vs N(0, s2^2 I) every projection gives
/// |s1 - s2|, so sqrt(d) times the sliced value recovers the true W2
/// (see sliced_isotropic_calibration).
MetricReport w2_sliced(const SampleBatch& a, const SampleBatch& b, std::size_t n_proj, std::uint64_t seed);
double sliced_isotropic_calibration(std::size_t dim);

/// Closed form between single-component diagonal Gaussians.
MetricReport w2_gaussian(const MixtureParams& p, const MixtureParams& q);

struct GaussianFit {
  Vec mean;
  Mat cov;
};
/// Sample mean and unbiased covariance.
GaussianFit fit_gaussian(const SampleBatch& batch);
/// W2 between N(m1, C1) and N(m2, C2) with full covariances:
/// ||m1 - m2||^2 + tr(C1 + C2 - 2 (C2^{1/2} C1 C2^{1/2})^{1/2}).
double w2_gaussian_full(const Vec& m1, const Mat& c1, const Vec& m2, const Mat& c2);
/// Fits a Gaussian to the batch and compares it to N(mean, cov) in closed form.
MetricReport w2_fitted_gaussian(const SampleBatch& batch, const Vec& mean, const Mat& cov);

/// Histogram TV over `bins` equal-width bins spanning both batches.
MetricReport tv_1d(const SampleBatch& a, const SampleBatch& b, std::size_t bins = 200);

/// 1/2 int |phi_1 - phi_2| by adaptive quadrature (absolute error 1e-10).
MetricReport tv_gaussian_1d(double m1, double s1, double m2, double s2);

struct MomentSummary {
  Vec mean;
  Vec var;             ///< unbiased per-coordinate variance
  double second_moment = 0.0;  ///< mean of ||x||^2
};
MomentSummary moment_report(const SampleBatch& batch);

}  // namespace cmlab

#include "cmlab/detail/metrics_impl.hpp"

#include "cmlab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cmlab/errors.hpp"
#include "cmlab/kernels.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

namespace {

RowMatrix gaussian_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Rng rng(seed);
  rng.fill_gaussian({m.data(), static_cast<std::size_t>(m.size())});
  return m;
}

std::span<const double> flat(const RowMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> flat(RowMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

// B(x) = x - 2(1 - e^{-x}) + (1 - e^{-2x})/2, so that the position variance of
// one step is 2 B(gamma tau) / gamma^2. Direct evaluation cancels badly for
// small x, where the series sum_{k>=3} (-1)^{k+1} (2^{k-1} - 2) x^k / k! is used.
double position_variance_factor(double x) {
  if (x >= 1.0) return x - 2.0 * (-std::expm1(-x)) + 0.5 * (-std::expm1(-2.0 * x));
  double term = x * x / 2.0;  // x^k / k!
  double sum = 0.0;
  for (int k = 3; k < 60; ++k) {
    term *= x / k;
    const double add = ((k % 2 == 1) ? 1.0 : -1.0) * (std::ldexp(1.0, k - 1) - 2.0) * term;
    sum += add;
    if (std::abs(add) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

void MultistepSchedule::validate() const {
  if (times.empty()) throw InvalidRangeError("multistep schedule is empty");
  if (!(delta > 0.0)) throw InvalidRangeError("multistep schedule: delta must be positive");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= delta) || !(times[k] <= times.front())) {
      throw InvalidRangeError("multistep schedule: times must lie in [delta, T]");
    }
  }
}

MultistepSchedule MultistepSchedule::fixed(double T, double t_hat, std::size_t K, double delta) {
  if (K == 0) throw InvalidRangeError("multistep schedule needs K >= 1");
  MultistepSchedule s;
  s.delta = delta;
  s.times.assign(K, t_hat);
  s.times.front() = T;
  s.validate();
  return s;
}

double choose_t_hat(const TimeGrid& grid, double lipschitz_f) {
  if (grid.points.empty()) throw InvalidRangeError("choose_t_hat: empty grid");
  if (!(lipschitz_f >= 1.0)) throw std::invalid_argument("choose_t_hat: Lipschitz constant must be >= 1");
  const double target = std::log(2.0 * lipschitz_f) + grid.delta;
  double best = grid.points.front();
  for (const double p : grid.points) {
    if (std::abs(p - target) < std::abs(best - target)) best = p;
  }
  return best;
}

SampleBatch one_step(const ConsistencyModel& cm, double T, std::size_t n, std::uint64_t seed) {
  MultistepSchedule s;
  s.delta = cm.delta();
  s.times = {T};
  return multistep(cm, s, n, seed).front();
}

std::vector<SampleBatch> multistep(const ConsistencyModel& cm, const MultistepSchedule& sched, std::size_t n,
                                   std::uint64_t seed) {
  sched.validate();
  if (n == 0) throw std::invalid_argument("multistep: n must be positive");
  const std::size_t d = cm.dim();
  std::vector<SampleBatch> out;
  out.reserve(sched.steps());

  RowMatrix z = cm.apply(gaussian_matrix(n, d, derive_seed(seed, "multistep.xi", 1)), sched.times[0]);
  out.push_back({z, seed, sched.delta});
  for (std::size_t k = 1; k < sched.steps(); ++k) {
    const double s = sched.times[k] - sched.delta;
    RowMatrix u = gaussian_matrix(n, d, derive_seed(seed, "multistep.xi", k + 1));
    kernels::axpby(std::exp(-s), flat(z), std::sqrt(-std::expm1(-2.0 * s)), flat(u), flat(u));
    z = cm.apply(u, sched.times[k]);
    out.push_back({z, seed, sched.delta});
  }
  return out;
}

SampleBatch ou_smooth(const SampleBatch& batch, double tau, std::uint64_t seed) {
  if (!(tau >= 0.0)) throw InvalidRangeError("ou_smooth: tau must be >= 0");
  SampleBatch out = batch;
  out.seed = seed;
  if (batch.time_tag) out.time_tag = *batch.time_tag + tau;
  if (tau == 0.0) return out;
  RowMatrix xi = gaussian_matrix(batch.size(), batch.dim(), derive_seed(seed, "ou_smooth"));
  kernels::axpby(std::exp(-tau), flat(batch.points), std::sqrt(-std::expm1(-2.0 * tau)), flat(xi), flat(out.points));
  return out;
}

void ulmc_step(UlmcState& state, const RowMatrix& drift, double gamma, double tau, std::span<const double> noise) {
  if (!(gamma > 0.0) || !(tau > 0.0)) throw InvalidRangeError("ulmc: gamma and tau must be positive");
  const std::size_t count = static_cast<std::size_t>(state.z.size());
  if (noise.size() != 2 * count || static_cast<std::size_t>(drift.size()) != count) {
    throw DimensionError("ulmc_step: state, drift and noise sizes disagree");
  }
  const double x = gamma * tau;
  const double decay = std::exp(-x);
  const double one_minus = -std::expm1(-x);  // 1 - e^{-gamma tau}
  const double pos_from_v = one_minus / gamma;
  const double pos_from_drift = (tau - one_minus / gamma) / gamma;
  const double vel_from_drift = one_minus / gamma;

  // Covariance of the (z, v) noise increment for one coordinate.
  const double var_z = 2.0 * position_variance_factor(x) / (gamma * gamma);
  const double var_v = -std::expm1(-2.0 * x);
  const double cov_zv = one_minus * one_minus / gamma;
  // 2x2 Cholesky: [a 0; b c].
  const double c_v = std::sqrt(var_v);
  const double b = c_v > 0.0 ? cov_zv / c_v : 0.0;
  const double a = std::sqrt(std::max(0.0, var_z - b * b));

  double* z = state.z.data();
  double* v = state.v.data();
  const double* s = drift.data();
  for (std::size_t i = 0; i < count; ++i) {
    const double e1 = noise[2 * i];
    const double e2 = noise[2 * i + 1];
    const double nv = c_v * e2;
    const double nz = a * e1 + b * e2;
    const double z_new = z[i] + pos_from_v * v[i] + pos_from_drift * s[i] + nz;
    v[i] = decay * v[i] + vel_from_drift * s[i] + nv;
    z[i] = z_new;
  }
}

SampleBatch ulmc_run(const ScoreModel& score_at_delta, const SampleBatch& batch, double gamma, double tau,
                     std::size_t n_steps, std::uint64_t seed) {
  if (!(gamma > 0.0) || !(tau > 0.0)) throw InvalidRangeError("ulmc_run: gamma and tau must be positive");
  SampleBatch out = batch;
  out.seed = seed;
  if (n_steps == 0) return out;

  const std::size_t n = batch.size();
  const std::size_t d = batch.dim();
  UlmcState state{batch.points, gaussian_matrix(n, d, derive_seed(seed, "ulmc.velocity"))};
  RowMatrix drift(state.z.rows(), state.z.cols());
  std::vector<double> noise(2 * n * d);
  const double t_eval = batch.time_tag.value_or(0.0);
  for (std::size_t step = 0; step < n_steps; ++step) {
    for (Eigen::Index i = 0; i < state.z.rows(); ++i) {
      drift.row(i) = score_at_delta(state.z.row(i).transpose(), t_eval).transpose();
    }
    Rng rng(derive_seed(seed, "ulmc.step", step));
    rng.fill_gaussian(noise);
    ulmc_step(state, drift, gamma, tau, noise);
  }
  out.points = state.z;
  return out;
}

}  // namespace cmlab

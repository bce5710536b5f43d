#include "cmlab/harness/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "cmlab/distributions.hpp"
#include "cmlab/harness/experiment.hpp"
#include "cmlab/harness/report.hpp"
#include "cmlab/metrics.hpp"
#include "cmlab/models.hpp"
#include "cmlab/objectives.hpp"
#include "cmlab/rng.hpp"
#include "cmlab/samplers.hpp"
#include "cmlab/schedule.hpp"

namespace cmlab {

namespace {

using nlohmann::json;

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

double os_var(double var0, double t) { return std::exp(-2.0 * t) * var0 + 1.0 - std::exp(-2.0 * t); }

// Shared setup of the rate criteria: N(0, 4 I_2), T = 2, delta = 0.01.
struct RateSetup {
  MixtureParams dist = MixtureParams::isotropic(2, 4.0);
  double T = 2.0;
  double delta = 0.01;
  Vec target_mean = Vec::Zero(2);
  Mat target_cov = os_var(4.0, 0.01) * Mat::Identity(2, 2);
};

double rms_gap(const RowMatrix& a, const RowMatrix& b) {
  return std::sqrt((a - b).rowwise().squaredNorm().mean());
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

// 1. W2 of the one-step output against p_delta shrinks linearly in h.
CriterionResult discretization_rate(std::uint64_t seed, const AcceptanceTolerances& tol) {
  const RateSetup s;
  const std::size_t n = 100000;
  const std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
  const std::uint64_t xi_seed = derive_seed(seed, "c1.xi");
  const ScoreModel exact = ScoreModel::exact(s.dist);

  auto w2_for = [&](const ConsistencyModel& cm) {
    return w2_fitted_gaussian(one_step(cm, s.T, n, xi_seed), s.target_mean, s.target_cov).value;
  };
  // The h-independent part of the error (finite-sample fit of the same xi
  // draws) is what the exact map leaves behind.
  const double floor_exact = w2_for(ConsistencyModel::exact(s.dist, s.delta));

  std::vector<double> w2s, excess;
  for (const double h : hs) {
    const double w = w2_for(ConsistencyModel::distilled(exact, build_grid(s.delta, h, s.T)));
    w2s.push_back(w);
    excess.push_back(w - floor_exact);
  }
  CriterionResult r{1, "discretization rate", false, "", json::object()};
  const bool positive = std::all_of(excess.begin(), excess.end(), [](double v) { return v > 0.0; });
  const FitResult fit = positive ? fit_loglog(hs, excess) : FitResult{};
  r.passed = positive && within(fit.slope, tol.rate_slope, tol.rate_slope_tol);
  r.details = {{"h", hs}, {"w2", w2s}, {"floor_exact_map", floor_exact}, {"excess", excess}, {"slope", fit.slope},
               {"r_squared", fit.r_squared}};
  r.summary = positive ? fmt("slope %.3f (target %.2f +/- %.2f)", fit.slope, tol.rate_slope, tol.rate_slope_tol)
                       : std::string("W2 did not exceed the exact-map floor at every h");
  return r;
}

// 2. Output error grows linearly with the injected score error.
CriterionResult score_error_rate(std::uint64_t seed, const AcceptanceTolerances& tol) {
  const RateSetup s;
  const TimeGrid grid = build_grid(s.delta, 0.025, s.T);
  const std::vector<double> eps{0.2, 0.1, 0.05};
  const std::size_t n = 20000;
  const std::size_t n_mc = 1000;
  const std::uint64_t xi_seed = derive_seed(seed, "c2.xi");
  const std::uint64_t pert_seed = derive_seed(seed, "c2.perturbation");
  const ScoreModel exact = ScoreModel::exact(s.dist);
  const RowMatrix base = one_step(ConsistencyModel::distilled(exact, grid), s.T, n, xi_seed).points;

  std::vector<double> measured, errors;
  for (const double e : eps) {
    const ScoreModel sm = perturb_score(s.dist, e, pert_seed);
    measured.push_back(measure_score_error(sm, s.dist, grid, n_mc, derive_seed(seed, "c2.measure")));
    errors.push_back(rms_gap(one_step(ConsistencyModel::distilled(sm, grid), s.T, n, xi_seed).points, base));
  }
  const FitResult fit = fit_loglog(measured, errors);
  CriterionResult r{2, "score-error rate", within(fit.slope, tol.rate_slope, tol.rate_slope_tol), "", json::object()};
  r.details = {{"eps_target", eps}, {"eps_sc_measured", measured}, {"error", errors}, {"slope", fit.slope},
               {"r_squared", fit.r_squared}};
  r.summary = fmt("slope %.3f (target %.2f +/- %.2f)", fit.slope, tol.rate_slope, tol.rate_slope_tol);
  return r;
}

// 3. Output error grows linearly with the injected consistency error.
CriterionResult consistency_error_rate(std::uint64_t seed, const AcceptanceTolerances& tol) {
  const RateSetup s;
  const TimeGrid grid = build_grid(s.delta, 0.025, s.T);
  const std::vector<double> eps{0.2, 0.1, 0.05};
  const std::size_t n = 20000;
  const std::size_t n_mc = 200;
  const std::uint64_t xi_seed = derive_seed(seed, "c3.xi");
  const std::uint64_t pert_seed = derive_seed(seed, "c3.perturbation");
  const ScoreModel exact = ScoreModel::exact(s.dist);
  const ConsistencyModel base = ConsistencyModel::distilled(exact, grid);
  const RowMatrix base_out = one_step(base, s.T, n, xi_seed).points;

  std::vector<double> measured, errors;
  for (const double e : eps) {
    const ConsistencyModel cm = perturb_cm(base, e, pert_seed);
    measured.push_back(measure_cm_error(cm, exact, s.dist, grid, n_mc, derive_seed(seed, "c3.measure")));
    errors.push_back(rms_gap(one_step(cm, s.T, n, xi_seed).points, base_out));
  }
  const FitResult fit = fit_loglog(measured, errors);
  CriterionResult r{3, "consistency-error rate", within(fit.slope, tol.rate_slope, tol.rate_slope_tol), "",
                    json::object()};
  r.details = {{"eps_target", eps}, {"eps_cm_measured", measured}, {"error", errors}, {"slope", fit.slope},
               {"r_squared", fit.r_squared}};
  r.summary = fmt("slope %.3f (target %.2f +/- %.2f)", fit.slope, tol.rate_slope, tol.rate_slope_tol);
  return r;
}

// 4. Multistep sampling with a fixed re-noising time contracts, then plateaus.
CriterionResult multistep_contraction(std::uint64_t seed, const AcceptanceTolerances& tol) {
  const MixtureParams dist = MixtureParams::isotropic(1, 4.0);
  const double delta = 0.01;
  const double T = 1.5;
  const TimeGrid grid = build_grid(delta, 0.05, T);
  const std::size_t K = 10;
  const std::size_t n = 100000;
  const ScoreModel sm = perturb_score(dist, 0.005, derive_seed(seed, "c4.score"));
  const ConsistencyModel cm =
      perturb_cm(ConsistencyModel::distilled(sm, grid), 0.005, derive_seed(seed, "c4.cm"));
  const double lf = estimate_lipschitz(cm, dist, T, 200, derive_seed(seed, "c4.lipschitz"));
  const double t_hat = choose_t_hat(grid, lf);
  const auto batches = multistep(cm, MultistepSchedule::fixed(T, t_hat, K, delta), n, derive_seed(seed, "c4.sampler"));

  const boost::math::normal_distribution<double> p_delta(0.0, std::sqrt(os_var(4.0, delta)));
  std::vector<double> w2;
  for (const auto& b : batches) {
    w2.push_back(w2_1d_to_quantiles(b, [&](double u) { return boost::math::quantile(p_delta, u); }).value);
  }
  // Plateau: median of the last three steps. A step is "before the plateau"
  // while the previous error is more than twice the plateau; the plateau is
  // reached once the error is within 1.5x of it.
  std::vector<double> tail(w2.end() - 3, w2.end());
  std::sort(tail.begin(), tail.end());
  const double plateau = tail[1];
  std::vector<double> ratios;
  bool ratios_ok = true;
  std::size_t checked = 0;
  for (std::size_t k = 1; k < w2.size(); ++k) {
    ratios.push_back(w2[k] / w2[k - 1]);
    if (w2[k - 1] > 2.0 * plateau) {
      ++checked;
      ratios_ok = ratios_ok && ratios.back() <= tol.contraction_ratio_max;
    }
  }
  std::size_t reached = 0;
  for (std::size_t k = 0; k < w2.size(); ++k) {
    if (w2[k] <= 1.5 * plateau) {
      reached = k + 1;
      break;
    }
  }
  CriterionResult r{4, "multistep contraction", false, "", json::object()};
  r.passed = checked > 0 && ratios_ok && plateau <= w2.front() && reached >= 1 && reached <= tol.plateau_step_max;
  r.details = {{"lipschitz_f", lf}, {"t_hat", t_hat}, {"w2", w2}, {"ratios", ratios}, {"plateau", plateau},
               {"steps_checked", checked}, {"plateau_reached_at", reached},
               {"bound_factor", lf * std::exp(-(t_hat - delta))}};
  double worst = 0.0;
  for (std::size_t k = 1; k < w2.size(); ++k) {
    if (w2[k - 1] > 2.0 * plateau) worst = std::max(worst, ratios[k - 1]);
  }
  r.summary = fmt("max pre-plateau ratio %.3f (<= %.2f), plateau/one-step %.3f", worst, tol.contraction_ratio_max,
                  plateau / w2.front()) +
              ", plateau at k=" + std::to_string(reached) + " over " + std::to_string(checked) + " contracting steps";
  return r;
}

// 5. With stationary data every sampler returns N(0, I).
CriterionResult stationary_exactness(std::uint64_t seed, const AcceptanceTolerances& tol) {
  const MixtureParams dist = MixtureParams::isotropic(2, 1.0);
  const double delta = 0.01;
  const double T = 2.0;
  const std::size_t n = 100000;
  const std::size_t n_proj = 64;
  const ConsistencyModel cm = ConsistencyModel::exact(dist, delta);
  const ScoreModel sm = ScoreModel::exact(dist);

  double floor = 0.0;
  const int floor_reps = 4;
  for (int i = 0; i < floor_reps; ++i) {
    const SampleBatch a = sample(dist, n, derive_seed(seed, "c5.floor.a", i));
    const SampleBatch b = sample(dist, n, derive_seed(seed, "c5.floor.b", i));
    floor += w2_sliced(a, b, n_proj, derive_seed(seed, "c5.floor.proj", i)).value;
  }
  floor /= floor_reps;

  SampleBatch one = one_step(cm, T, n, derive_seed(seed, "c5.one"));
  const auto multi = multistep(cm, MultistepSchedule::fixed(T, 1.0, 4, delta), n, derive_seed(seed, "c5.multi"));
  const SampleBatch smoothed = ou_smooth(one, 0.05, derive_seed(seed, "c5.ou"));
  one.time_tag = delta;
  const SampleBatch corrected = ulmc_run(sm, one, 1.0, 0.01, 100, derive_seed(seed, "c5.ulmc"));

  struct Case {
    const char* name;
    const SampleBatch* batch;
  };
  const std::vector<Case> cases{{"one-step", &one}, {"multistep-K4", &multi.back()}, {"one-step+ou", &smoothed},
                                {"one-step+ulmc", &corrected}};
  CriterionResult r{5, "stationary exactness", true, "", json::object()};
  r.details["noise_floor"] = floor;
  double worst = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const SampleBatch fresh = sample(dist, n, derive_seed(seed, "c5.fresh", i));
    const double v = w2_sliced(*cases[i].batch, fresh, n_proj, derive_seed(seed, "c5.proj", i)).value;
    r.details["sliced_w2"][cases[i].name] = v;
    worst = std::max(worst, v / floor);
    r.passed = r.passed && v <= tol.stationary_floor_factor * floor;
  }
  r.summary = fmt("worst sampler at %.2fx the noise floor %.2e (<= %.1fx)", worst, floor, tol.stationary_floor_factor);
  return r;
}

// 6. OU smoothing turns a W1 gap into a TV bound.
CriterionResult ou_tv_bound(std::uint64_t, const AcceptanceTolerances& tol) {
  CriterionResult r{6, "OU-smoothing TV bound", true, "", json::array()};
  int violations = 0;
  double worst_quad = 0.0;
  for (const double m : {0.1, 0.3, 0.5}) {
    for (const double tau : {0.01, 0.05}) {
      // N(0,1) is invariant; N(m,1) moves to N(m e^{-tau}, 1).
      const double shifted = m * std::exp(-tau);
      const MetricReport tv = tv_gaussian_1d(0.0, 1.0, shifted, 1.0);
      const double closed = std::erf(shifted / (2.0 * std::sqrt(2.0)));
      const double bound = m / (2.0 * std::sqrt(std::expm1(2.0 * tau)));
      const double quad_err = std::abs(tv.value - closed);
      worst_quad = std::max(worst_quad, quad_err);
      const bool ok = quad_err <= tol.ou_quadrature_tol && tv.value <= bound;
      violations += ok ? 0 : 1;
      r.details.push_back({{"m", m}, {"tau", tau}, {"tv", tv.value}, {"closed_form", closed}, {"bound", bound}});
    }
  }
  r.passed = violations == 0;
  r.details = {{"cases", r.details}, {"violations", violations}, {"max_quadrature_error", worst_quad}};
  r.summary = std::to_string(violations) + " violations over 6 cases" +
              fmt(", quadrature agrees with closed form to %.1e", worst_quad);
  return r;
}

// 7. Score Hessian of bounded-support data obeys the explicit bound.
CriterionResult hessian_bound(std::uint64_t seed, const AcceptanceTolerances&) {
  const double radius = 2.0;
  const MixtureParams dist = circle_point_masses(8, radius);
  CriterionResult r{7, "Hessian bound", true, "", json::array()};
  int violations = 0;
  double worst = 0.0;
  for (const double t : {0.1, 0.5, 1.0}) {
    const SampleBatch pts = sample(marginal_at(dist, t), 100, derive_seed(seed, "c7.points", static_cast<std::uint64_t>(t * 1000)));
    const double bound = bounded_support_hessian_bound(radius, t);
    double max_norm = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double v = score_hessian_norm(dist, t, pts.point(i));
      max_norm = std::max(max_norm, v);
      if (v > bound) ++violations;
    }
    worst = std::max(worst, max_norm / bound);
    r.details.push_back({{"t", t}, {"max_norm", max_norm}, {"bound", bound}});
  }
  r.passed = violations == 0;
  r.details = {{"times", r.details}, {"violations", violations}};
  r.summary = std::to_string(violations) + " violations over 300 points" + fmt(", max norm/bound %.3f", worst);
  return r;
}

// 8. A score read off a consistency model inherits both error budgets.
CriterionResult score_recovery(std::uint64_t seed, const AcceptanceTolerances& tol) {
  const MixtureParams dist = MixtureParams::isotropic(1, 4.0);
  const double delta = 0.01;
  const TimeGrid grid = build_grid(delta, 0.1, 1.0);
  const ScoreModel sm = perturb_score(dist, 0.1, derive_seed(seed, "c8.score"));
  ConsistencyModel cm = ConsistencyModel::empirical(sm, delta);
  const double eps_sc = measure_score_error(sm, dist, grid, 1000, derive_seed(seed, "c8.measure.sc"));
  const double eps_cm = measure_cm_error(cm, sm, dist, grid, 200, derive_seed(seed, "c8.measure.cm"));
  const ScoreModel recovered = recover_score(cm, grid);

  const double t2 = grid.points[1];
  const SampleBatch pts = sample(marginal_at(dist, t2), 2000, derive_seed(seed, "c8.points"));
  double acc = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec x = pts.point(i);
    acc += (recovered(x, t2) - score(dist, t2, x)).squaredNorm();
  }
  const double err = std::sqrt(acc / static_cast<double>(pts.size()));
  const double bound = tol.recovery_slack * std::hypot(eps_cm, eps_sc);
  CriterionResult r{8, "score recovery", err <= bound, "", json::object()};
  r.details = {{"t2", t2}, {"eps_sc", eps_sc}, {"eps_cm", eps_cm}, {"recovered_error", err}, {"bound", bound}};
  r.summary = fmt("L2 error %.4f <= %.4f (eps_sc %.4f", err, bound, eps_sc) + fmt(", eps_cm %.4f)", eps_cm);
  return r;
}

// 9. CT and CD gradients agree up to O(dt^2).
CriterionResult gradient_equivalence(std::uint64_t seed, const AcceptanceTolerances& tol) {
  const MixtureParams dist = MixtureParams::isotropic(1, 4.0);
  ParametricCM theta(1, 0.01, 32, derive_seed(seed, "c9.features"));
  theta.randomize_theta(derive_seed(seed, "c9.theta"));
  const std::vector<double> dts{0.2, 0.1, 0.05};
  const auto gaps = grad_gap(theta, dist, ScoreModel::exact(dist), dts, 100000, derive_seed(seed, "c9.draws"));
  std::vector<double> values, errs;
  bool warn = false;
  for (const auto& g : gaps) {
    values.push_back(g.gap);
    errs.push_back(g.std_err);
    warn = warn || g.noise_warning;
  }
  const FitResult fit = fit_loglog(dts, values);
  CriterionResult r{9, "CT/CD gradient equivalence", within(fit.slope, tol.grad_gap_slope, tol.grad_gap_slope_tol), "",
                    json::object()};
  r.details = {{"dt", dts}, {"gap", values}, {"std_err", errs}, {"slope", fit.slope}, {"noise_warning", warn}};
  r.summary = fmt("slope %.3f (target %.2f +/- %.2f)", fit.slope, tol.grad_gap_slope, tol.grad_gap_slope_tol) +
              (warn ? ", gap within 10 std errors at some dt" : "");
  return r;
}

// 10. Langevin correction of a shifted batch.
CriterionResult ulmc_correction(std::uint64_t seed, const AcceptanceTolerances& tol) {
  const MixtureParams target = MixtureParams::isotropic(1, 1.0);
  const std::size_t n = 100000;
  SampleBatch input = sample(MixtureParams::gaussian(Vec::Constant(1, 0.3), Vec::Constant(1, 1.0)), n,
                             derive_seed(seed, "c10.input"));
  input.time_tag = 0.01;
  const double gamma = 1.0;
  const double tau = 0.01;
  // N tau = c / sqrt(L_s) with c = 1 and L_s = 1 for the standard normal.
  const std::size_t steps = 100;
  const SampleBatch out = ulmc_run(ScoreModel::exact(target), input, gamma, tau, steps, derive_seed(seed, "c10.ulmc"));

  auto fitted_tv = [](const SampleBatch& b) {
    const GaussianFit f = fit_gaussian(b);
    return tv_gaussian_1d(f.mean(0), std::sqrt(f.cov(0, 0)), 0.0, 1.0).value;
  };
  const double before = fitted_tv(input);
  const double after = fitted_tv(out);
  const SampleBatch fresh = sample(target, n, derive_seed(seed, "c10.fresh"));
  const double ratio = after / before;
  CriterionResult r{10, "ULMC correction", ratio <= tol.ulmc_tv_ratio_max, "", json::object()};
  r.details = {{"tv_before", before}, {"tv_after", after}, {"ratio", ratio},
               {"histogram_tv_before", tv_1d(input, fresh).value}, {"histogram_tv_after", tv_1d(out, fresh).value},
               {"mean_after", fit_gaussian(out).mean(0)}};
  r.summary = fmt("TV %.4f -> %.4f, ratio %.3f", before, after, ratio) + fmt(" (<= %.2f)", tol.ulmc_tv_ratio_max);
  return r;
}

// 11. Reports are byte-identical across runs with the same seed.
CriterionResult determinism(std::uint64_t seed, const AcceptanceTolerances& tol) {
  const std::vector<int> subset{3, 6, 7, 8};
  const std::string first = acceptance_to_json(run_acceptance(seed, subset, tol), seed).dump();
  const std::string second = acceptance_to_json(run_acceptance(seed, subset, tol), seed).dump();

  ExperimentConfig cfg;
  cfg.name = "determinism_h_sweep";
  cfg.distribution = MixtureParams::isotropic(2, 4.0);
  cfg.sweep = {"h", {0.2, 0.1, 0.05}};
  cfg.n = 5000;
  cfg.n_mc = 100;
  cfg.seed = seed;
  const std::string csv_a = report_csv(run_experiment(cfg));
  const std::string csv_b = report_csv(run_experiment(cfg));

  CriterionResult r{11, "determinism", first == second && csv_a == csv_b, "", json::object()};
  r.details = {{"acceptance_bytes", first.size()}, {"acceptance_identical", first == second},
               {"sweep_csv_bytes", csv_a.size()}, {"sweep_csv_identical", csv_a == csv_b}};
  r.summary = std::string("acceptance subset ") + (first == second ? "identical" : "DIFFERS") + ", sweep CSV " +
              (csv_a == csv_b ? "identical" : "DIFFERS");
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, std::uint64_t seed, const AcceptanceTolerances& tol) {
  switch (id) {
    case 1: return discretization_rate(seed, tol);
    case 2: return score_error_rate(seed, tol);
    case 3: return consistency_error_rate(seed, tol);
    case 4: return multistep_contraction(seed, tol);
    case 5: return stationary_exactness(seed, tol);
    case 6: return ou_tv_bound(seed, tol);
    case 7: return hessian_bound(seed, tol);
    case 8: return score_recovery(seed, tol);
    case 9: return gradient_equivalence(seed, tol);
    case 10: return ulmc_correction(seed, tol);
    case 11: return determinism(seed, tol);
    default: throw std::invalid_argument("no acceptance criterion " + std::to_string(id));
  }
}

std::vector<CriterionResult> run_acceptance(std::uint64_t seed, const std::vector<int>& only,
                                            const AcceptanceTolerances& tol) {
  std::vector<int> ids = only;
  if (ids.empty()) {
    for (int i = 1; i <= kCriterionCount; ++i) ids.push_back(i);
  }
  std::vector<CriterionResult> out;
  for (const int id : ids) out.push_back(run_criterion(id, derive_seed(seed, "criterion", static_cast<std::uint64_t>(id)), tol));
  return out;
}

json acceptance_to_json(const std::vector<CriterionResult>& results, std::uint64_t seed) {
  json arr = json::array();
  bool all = true;
  for (const auto& r : results) {
    arr.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"summary", r.summary}, {"details", r.details}});
    all = all && r.passed;
  }
  return {{"seed", seed}, {"all_passed", all}, {"criteria", arr}};
}

std::string format_line(const CriterionResult& r) {
  char head[64];
  std::snprintf(head, sizeof head, "criterion %2d %s  ", r.id, r.passed ? "PASS" : "FAIL");
  return head + r.name + ": " + r.summary;
}

}  // namespace cmlab

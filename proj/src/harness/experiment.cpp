#include "cmlab/harness/experiment.hpp"

#include <cmath>
#include <future>
#include <optional>
#include <utility>
#include <vector>

#include "cmlab/errors.hpp"
#include "cmlab/metrics.hpp"
#include "cmlab/models.hpp"
#include "cmlab/rng.hpp"
#include "cmlab/samplers.hpp"
#include "cmlab/schedule.hpp"

namespace cmlab {

namespace {

constexpr std::size_t kLipschitzPairs = 100;

ConsistencyModel base_model(const ExperimentConfig& cfg, const ScoreModel& score_model, const TimeGrid& grid) {
  if (cfg.model.kind == "exact") return ConsistencyModel::exact(cfg.distribution, grid.delta, cfg.model.tol);
  if (cfg.model.kind == "empirical") return ConsistencyModel::empirical(score_model, grid.delta, cfg.model.tol);
  return ConsistencyModel::distilled(score_model, grid);
}

MetricReport evaluate(const ExperimentConfig& cfg, const SampleBatch& batch, const MixtureParams& target,
                      std::uint64_t seed) {
  if (cfg.metric == "w2-gaussian-fit") {
    const Vec mean = target.means[0];
    const Mat cov = target.vars[0].asDiagonal();
    return w2_fitted_gaussian(batch, mean, cov);
  }
  const SampleBatch ref = sample(target, batch.size(), derive_seed(seed, "reference"));
  if (cfg.metric == "w2-1d") return w2_1d_exact(batch, ref);
  return w2_sliced(batch, ref, cfg.n_proj, derive_seed(seed, "projections"));
}

struct PointSetup {
  GridSpec g;
  InjectionSpec inj;
  TimeGrid grid;
  ScoreModel score_model;
  ConsistencyModel cm;
};

PointSetup setup_point(const ExperimentConfig& cfg, double sweep_value) {
  GridSpec g = cfg.grid;
  InjectionSpec inj = cfg.injection;
  if (cfg.sweep.kind == "h") g.h = sweep_value;
  if (cfg.sweep.kind == "eps_sc") inj.eps_sc = sweep_value;
  if (cfg.sweep.kind == "eps_cm") inj.eps_cm = sweep_value;

  const MixtureParams& dist = cfg.distribution;
  TimeGrid grid = build_grid(g.delta, g.h, g.T);
  ScoreModel score_model = inj.eps_sc > 0.0
                               ? perturb_score(dist, inj.eps_sc, derive_seed(cfg.seed, "score.perturbation"))
                               : ScoreModel::exact(dist);
  ConsistencyModel cm = base_model(cfg, score_model, grid);
  if (inj.eps_cm > 0.0) cm = perturb_cm(cm, inj.eps_cm, derive_seed(cfg.seed, "cm.perturbation"));
  return {g, inj, std::move(grid), std::move(score_model), std::move(cm)};
}

// Batches produced by the configured sampler, each with the law it should follow.
std::vector<std::pair<SampleBatch, MixtureParams>> run_sampler(const ExperimentConfig& cfg, const PointSetup& p,
                                                               const std::optional<double>& lipschitz_f) {
  const MixtureParams& dist = cfg.distribution;
  const std::uint64_t sampler_seed = derive_seed(cfg.seed, "sampler");
  const MixtureParams p_delta = marginal_at(dist, p.g.delta);
  std::vector<std::pair<SampleBatch, MixtureParams>> out;

  if (cfg.sampler.kind == "multistep") {
    double t_hat = 0.0;
    if (cfg.sampler.t_hat) {
      t_hat = *cfg.sampler.t_hat;
    } else {
      const double lf = lipschitz_f ? *lipschitz_f
                                    : estimate_lipschitz(p.cm, dist, p.g.T, kLipschitzPairs,
                                                         derive_seed(cfg.seed, "measure.lf"));
      t_hat = choose_t_hat(p.grid, lf);
    }
    const auto sched = MultistepSchedule::fixed(p.g.T, t_hat, cfg.sampler.K, p.g.delta);
    for (auto& b : multistep(p.cm, sched, cfg.n, sampler_seed)) out.emplace_back(std::move(b), p_delta);
    return out;
  }

  SampleBatch batch = one_step(p.cm, p.g.T, cfg.n, sampler_seed);
  batch.time_tag = p.g.delta;
  if (cfg.sampler.kind == "one-step+ou") {
    batch = ou_smooth(batch, cfg.sampler.ou_tau, derive_seed(sampler_seed, "ou"));
    out.emplace_back(std::move(batch), marginal_at(dist, p.g.delta + cfg.sampler.ou_tau));
  } else if (cfg.sampler.kind == "one-step+ulmc") {
    const double l_s = lipschitz_bound(dist, p.g.delta, p.g.delta, 1, cfg.n_mc, derive_seed(cfg.seed, "measure.ls"));
    const double horizon = cfg.sampler.corrector_constant / std::sqrt(l_s);
    const auto steps = static_cast<std::size_t>(std::llround(horizon / cfg.sampler.tau));
    batch = ulmc_run(p.score_model, batch, cfg.sampler.gamma, cfg.sampler.tau, steps,
                     derive_seed(sampler_seed, "ulmc"));
    out.emplace_back(std::move(batch), p_delta);
  } else {
    out.emplace_back(std::move(batch), p_delta);
  }
  return out;
}

std::vector<ReportRow> run_point(const ExperimentConfig& cfg, double sweep_value) {
  const PointSetup p = setup_point(cfg, sweep_value);
  const MixtureParams& dist = cfg.distribution;

  ReportRow proto;
  proto.sweep_kind = cfg.sweep.kind;
  proto.sweep_value = sweep_value;
  proto.h = p.g.h;
  proto.eps_sc_target = p.inj.eps_sc;
  proto.eps_cm_target = p.inj.eps_cm;
  proto.tol = p.cm.provenance().tol;
  proto.seed = cfg.seed;
  proto.model_kind = p.cm.provenance().kind;
  proto.sampler = cfg.sampler.kind;

  if (cfg.measure) {
    proto.eps_sc_measured =
        measure_score_error(p.score_model, dist, p.grid, cfg.n_mc, derive_seed(cfg.seed, "measure.sc"));
    proto.eps_cm_measured =
        measure_cm_error(p.cm, p.score_model, dist, p.grid, cfg.n_mc, derive_seed(cfg.seed, "measure.cm"));
    proto.lipschitz_f = estimate_lipschitz(p.cm, dist, p.g.T, kLipschitzPairs, derive_seed(cfg.seed, "measure.lf"));
  }

  const std::uint64_t metric_seed = derive_seed(cfg.seed, "metric");
  std::vector<ReportRow> rows;
  const auto batches = run_sampler(cfg, p, proto.lipschitz_f);
  for (std::size_t k = 0; k < batches.size(); ++k) {
    ReportRow row = proto;
    row.step = k + 1;
    row.metric = evaluate(cfg, batches[k].first, batches[k].second, metric_seed);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

SampleBatch sample_from_config(const ExperimentConfig& cfg) {
  cfg.validate();
  const PointSetup p = setup_point(cfg, cfg.sweep.kind == "none" ? 0.0 : cfg.sweep.values.front());
  return run_sampler(cfg, p, std::nullopt).back().first;
}

Report run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> points = cfg.sweep.kind == "none" ? std::vector<double>{0.0} : cfg.sweep.values;

  std::vector<std::future<std::vector<ReportRow>>> jobs;
  jobs.reserve(points.size());
  for (const double v : points) jobs.push_back(std::async(std::launch::async, run_point, std::cref(cfg), v));

  Report report;
  report.name = cfg.name;
  report.config = config_to_json(cfg);
  for (auto& job : jobs) {
    auto rows = job.get();
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }

  if (cfg.sweep.kind != "none" && points.size() >= 3 && cfg.sampler.kind != "multistep") {
    report.fit_x = cfg.sweep.kind == "h" ? "sweep_value"
                   : cfg.sweep.kind == "eps_sc" ? (cfg.measure ? "eps_sc_measured" : "sweep_value")
                                                : (cfg.measure ? "eps_cm_measured" : "sweep_value");
    std::vector<double> xs, ys;
    for (const auto& r : report.rows) {
      double x = r.sweep_value;
      if (report.fit_x == "eps_sc_measured") x = *r.eps_sc_measured;
      if (report.fit_x == "eps_cm_measured") x = *r.eps_cm_measured;
      xs.push_back(x);
      ys.push_back(r.metric.value);
    }
    try {
      report.fit = fit_loglog(xs, ys);
    } catch (const std::invalid_argument&) {
      // Zero or repeated values (e.g. an eps of 0 in the sweep): no fit.
    }
  } else if (cfg.sampler.kind == "multistep") {
    report.fit_x = "step";
  }
  return report;
}

}  // namespace cmlab

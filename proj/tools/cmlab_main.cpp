// cmlab: command-line front end.
//
//   cmlab grid      --delta D --h H --T T [--format csv|json]
//   cmlab sample    --config PATH [--seed S] [--n N] [--sampler KIND] [--out DIR]
//   cmlab sweep     --config PATH [--seed S] [--out DIR] [--format csv|json]
//   cmlab verify    [--seed S] [--only ID]... [--out DIR]
//   cmlab gradcheck [--seed S] [--n-mc N] [--dt DT]... [--out DIR]
//
// Exit status: 0 success, 1 invalid input or configuration, 2 acceptance failure.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmlab/errors.hpp"
#include "cmlab/harness/acceptance.hpp"
#include "cmlab/harness/config.hpp"
#include "cmlab/harness/experiment.hpp"
#include "cmlab/harness/report.hpp"
#include "cmlab/kernels.hpp"
#include "cmlab/objectives.hpp"
#include "cmlab/rng.hpp"
#include "cmlab/schedule.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitFailed = 2;

void write_or_print(const std::string& out_dir, const std::string& file, const std::string& body) {
  if (out_dir.empty()) {
    std::cout << body;
    return;
  }
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / file;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  std::cerr << "wrote " << path.string() << '\n';
}

int cmd_grid(double delta, double h, double T, const std::string& format, const std::string& out_dir) {
  const cmlab::TimeGrid grid = cmlab::build_grid(delta, h, T);
  std::string body;
  if (format == "json") {
    body = nlohmann::json(grid).dump(2) + "\n";
  } else {
    std::ostringstream s;
    s << "index,t\n";
    for (std::size_t i = 0; i < grid.size(); ++i) s << i << ',' << cmlab::format_number(grid.points[i]) << '\n';
    body = s.str();
  }
  write_or_print(out_dir, "grid." + format, body);
  return kExitOk;
}

int cmd_sample(cmlab::ExperimentConfig cfg, const std::optional<std::uint64_t>& seed,
               const std::optional<std::size_t>& n, const std::string& sampler, const std::string& out_dir) {
  if (seed) cfg.seed = *seed;
  if (n) cfg.n = *n;
  if (!sampler.empty()) cfg.sampler.kind = sampler;
  cfg.validate();
  const cmlab::SampleBatch batch = cmlab::sample_from_config(cfg);
  std::ostringstream s;
  for (std::size_t j = 0; j < batch.dim(); ++j) s << (j ? "," : "") << 'x' << j;
  s << '\n';
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.dim(); ++j) {
      s << (j ? "," : "") << cmlab::format_number(batch.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    s << '\n';
  }
  write_or_print(out_dir, cfg.name + "_samples.csv", s.str());
  return kExitOk;
}

int cmd_sweep(cmlab::ExperimentConfig cfg, const std::optional<std::uint64_t>& seed, const std::string& out_dir,
              const std::string& format) {
  if (seed) cfg.seed = *seed;
  cfg.validate();
  const cmlab::Report report = cmlab::run_experiment(cfg);
  if (out_dir.empty()) {
    std::cout << (format == "json" ? cmlab::report_to_json(report).dump(2) + "\n" : cmlab::report_csv(report));
  } else {
    for (const auto& p : cmlab::emit(report, format, out_dir)) std::cerr << "wrote " << p << '\n';
  }
  if (report.fit) {
    std::cerr << "log-log slope " << report.fit->slope << " (r^2 " << report.fit->r_squared << ") against "
              << report.fit_x << '\n';
  }
  return kExitOk;
}

int cmd_verify(std::uint64_t seed, const std::vector<int>& only, const std::string& out_dir) {
  std::vector<cmlab::CriterionResult> results;
  bool all = true;
  std::vector<int> ids = only;
  if (ids.empty()) {
    for (int i = 1; i <= cmlab::kCriterionCount; ++i) ids.push_back(i);
  }
  for (const int id : ids) {
    auto r = cmlab::run_acceptance(seed, {id}).front();
    std::cout << cmlab::format_line(r) << std::endl;
    all = all && r.passed;
    results.push_back(std::move(r));
  }
  if (!out_dir.empty()) {
    write_or_print(out_dir, "acceptance.json", cmlab::acceptance_to_json(results, seed).dump(2) + "\n");
  }
  return all ? kExitOk : kExitFailed;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t n_mc, std::vector<double> dts, const std::string& out_dir) {
  if (dts.empty()) dts = {0.2, 0.1, 0.05};
  const cmlab::MixtureParams dist = cmlab::MixtureParams::isotropic(1, 4.0);
  cmlab::ParametricCM theta(1, 0.01, 32, cmlab::derive_seed(seed, "gradcheck.features"));
  theta.randomize_theta(cmlab::derive_seed(seed, "gradcheck.theta"));
  const auto gaps =
      cmlab::grad_gap(theta, dist, cmlab::ScoreModel::exact(dist), dts, n_mc, cmlab::derive_seed(seed, "gradcheck.draws"));
  std::ostringstream s;
  s << "dt,gap,std_err,noise_warning\n";
  std::vector<double> ys;
  for (const auto& g : gaps) {
    s << cmlab::format_number(g.dt) << ',' << cmlab::format_number(g.gap) << ',' << cmlab::format_number(g.std_err)
      << ',' << (g.noise_warning ? 1 : 0) << '\n';
    ys.push_back(g.gap);
    if (g.noise_warning) std::cerr << "warning: gap at dt=" << g.dt << " is within 10 standard errors\n";
  }
  const cmlab::FitResult fit = cmlab::fit_loglog(dts, ys);
  s << "# slope " << cmlab::format_number(fit.slope) << " r_squared " << cmlab::format_number(fit.r_squared) << '\n';
  write_or_print(out_dir, "gradcheck.csv", s.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consistency-model sampling experiments"};
  app.require_subcommand(1);
  std::string isa;
  app.add_option("--isa", isa, "force a kernel variant (scalar|avx2)")->check(CLI::IsMember({"scalar", "avx2"}));

  std::string config_path, out_dir, format = "csv", sampler;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;

  auto* grid = app.add_subcommand("grid", "print the two-stage time grid");
  double delta = 0.01, h = 0.025, T = 2.0;
  grid->set_help_flag("--help", "print this help");  // -h would clash with --h
  grid->add_option("--delta", delta, "early-stopping time")->capture_default_str();
  grid->add_option("--h", h, "stage-1 step")->capture_default_str();
  grid->add_option("--T", T, "horizon")->capture_default_str();
  grid->add_option("--config", config_path, "take delta, h, T from this experiment config");
  grid->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  grid->add_option("--out", out_dir, "output directory (default stdout)");

  auto* sample = app.add_subcommand("sample", "run a sampler and write the batch as CSV");
  sample->add_option("--config", config_path)->required();
  sample->add_option("--seed", seed);
  sample->add_option("--n", n);
  sample->add_option("--sampler", sampler, "one-step | multistep | one-step+ou | one-step+ulmc");
  sample->add_option("--out", out_dir);

  auto* sweep = app.add_subcommand("sweep", "run an experiment config");
  sweep->add_option("--config", config_path)->required();
  sweep->add_option("--seed", seed);
  sweep->add_option("--out", out_dir);
  sweep->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  std::uint64_t verify_seed = 20240611;
  std::vector<int> only;
  verify->add_option("--seed", verify_seed)->capture_default_str();
  verify->add_option("--only", only)->check(CLI::Range(1, cmlab::kCriterionCount));
  verify->add_option("--out", out_dir);

  auto* gradcheck = app.add_subcommand("gradcheck", "CT vs CD gradient gap table");
  std::uint64_t grad_seed = 20240611;
  std::size_t n_mc = 100000;
  std::vector<double> dts;
  gradcheck->add_option("--seed", grad_seed)->capture_default_str();
  gradcheck->add_option("--n-mc", n_mc)->capture_default_str();
  gradcheck->add_option("--dt", dts, "decreasing step sizes (default 0.2 0.1 0.05)");
  gradcheck->add_option("--out", out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (isa == "scalar") cmlab::kernels::set_isa(cmlab::kernels::Isa::scalar);
    if (isa == "avx2") cmlab::kernels::set_isa(cmlab::kernels::Isa::avx2);
    if (*grid) {
      if (!config_path.empty()) {
        const auto cfg = cmlab::load_config(config_path);
        return cmd_grid(cfg.grid.delta, cfg.grid.h, cfg.grid.T, format, out_dir);
      }
      return cmd_grid(delta, h, T, format, out_dir);
    }
    if (*sample) return cmd_sample(cmlab::load_config(config_path), seed, n, sampler, out_dir);
    if (*sweep) return cmd_sweep(cmlab::load_config(config_path), seed, out_dir, format);
    if (*verify) return cmd_verify(verify_seed, only, out_dir);
    if (*gradcheck) return cmd_gradcheck(grad_seed, n_mc, dts, out_dir);
  } catch (const cmlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}

#pragma once

// Rate and property checks run by `cmlab verify` and the acceptance test
// binary. Every setting and tolerance lives here or in the .cpp so that a
// report is a pure function of the root seed.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace cmlab {

struct AcceptanceTolerances {
  // 1-3: log-log slopes of error against h, eps_sc and eps_cm.
  double rate_slope = 1.0;
  double rate_slope_tol = 0.25;
  // 4: multistep contraction.
  double contraction_ratio_max = 0.75;
  std::size_t plateau_step_max = 8;
  // 5: stationary samplers against the same-distribution noise floor.
  double stationary_floor_factor = 3.0;
  // 6: quadrature agreement with the closed form.
  double ou_quadrature_tol = 1e-6;
  // 8: slack on the recovered-score bound.
  double recovery_slack = 1.1;
  // 9: CT/CD gradient gap.
  double grad_gap_slope = 2.0;
  double grad_gap_slope_tol = 0.3;
  // 10: TV after the Langevin corrector relative to before.
  double ulmc_tv_ratio_max = 0.5;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string summary;
  nlohmann::json details;
};

inline constexpr int kCriterionCount = 11;

CriterionResult run_criterion(int id, std::uint64_t seed, const AcceptanceTolerances& tol = {});

/// Runs the listed criteria (all when `only` is empty) in order.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed, const std::vector<int>& only = {},
                                            const AcceptanceTolerances& tol = {});

nlohmann::json acceptance_to_json(const std::vector<CriterionResult>& results, std::uint64_t seed);

/// "criterion  4 PASS  multistep contraction: ..."
std::string format_line(const CriterionResult& r);

}  // namespace cmlab

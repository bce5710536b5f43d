#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmlab/metrics.hpp"

namespace cmlab {

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Least squares of log(ys) on log(xs). Needs >= 3 points, all positive.
FitResult fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys);

/// One metric evaluation together with everything needed to reproduce it.
struct ReportRow {
  std::string sweep_kind;
  double sweep_value = 0.0;
  std::size_t step = 1;  ///< multistep index k, 1 for single-pass samplers
  double h = 0.0;
  double eps_sc_target = 0.0;
  std::optional<double> eps_sc_measured;
  double eps_cm_target = 0.0;
  std::optional<double> eps_cm_measured;
  std::optional<double> lipschitz_f;
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::string model_kind;
  std::string sampler;
  MetricReport metric;
};

struct Report {
  std::string name;
  nlohmann::json config;
  std::vector<ReportRow> rows;
  std::optional<FitResult> fit;
  std::string fit_x;  ///< which column the fit used as x
};

nlohmann::json report_to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

/// Fixed column set, one line per row, LF endings.
std::string csv_header();
std::string report_csv(const Report& report);

/// Writes <out_dir>/<name>.csv or .json plus <name>.dat, a two-column
/// (x, value) file for plotting. Returns the paths written.
std::vector<std::string> emit(const Report& report, const std::string& format, const std::string& out_dir);

/// %.17g formatting used by every text output so files are byte-stable.
std::string format_number(double v);

}  // namespace cmlab

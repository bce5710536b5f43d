#pragma once

// Two-stage discretisation of [delta, T].
//
// Stage 1 walks down from T in steps of h and ends at t_{N1} = h; when T is not
// a multiple of h the remainder is absorbed by the step t_{N1+1} - t_{N1} (<= h).
// Stage 2 halves from h (h/2, h/4, ...) and stops at the first point <= 2 delta,
// after which the grid closes at delta. Hence the first step h_1 = t_2 - delta
// is <= delta and the stage-2 steps double from t_2 up to t_{N1}.
//
// Point count: N = S + J + 1 with S = ceil((T - h) / h) + 1 stage-1 points
// (T, T - h, ..., h) and J = ceil(log2(h / (2 delta))) halvings.

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace cmlab {

struct TimeGrid {
  double delta = 0.0;
  double h = 0.0;
  double T = 0.0;
  std::vector<double> points;      ///< increasing, points.front() == delta, points.back() == T
  std::size_t stage_boundary = 0;  ///< index of t_{N1} in `points` (0-based)

  std::size_t size() const { return points.size(); }
  double step(std::size_t k) const { return points[k + 1] - points[k]; }
};

/// Throws InvalidRangeError unless 0 < delta < h/2 and h <= T.
TimeGrid build_grid(double delta, double h, double T);

/// Closed-form point count of build_grid (see header comment).
std::size_t expected_grid_size(double delta, double h, double T);

/// True iff every TimeGrid invariant holds within 1e-12. Failed checks are
/// appended to `diagnostics` when it is non-null.
bool validate_grid(const TimeGrid& grid, std::vector<std::string>* diagnostics = nullptr);

/// Uniform grid {t_lo, t_lo + dt, ...} used by the objective diagnostics; not
/// a two-stage grid, delta is set to t_lo.
TimeGrid uniform_grid(double t_lo, double dt, std::size_t n_points);

// {"delta", "h", "T", "stage_boundary", "points"}
void to_json(nlohmann::json& j, const TimeGrid& grid);
void from_json(const nlohmann::json& j, TimeGrid& grid);

}  // namespace cmlab

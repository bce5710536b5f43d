#include "cmlab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cmlab/errors.hpp"

namespace cmlab {

namespace {

constexpr double kTol = 1e-12;

std::size_t stage_one_count(double h, double T) {
  // Points T - k h for k = 0, 1, ... that stay strictly above h, then h itself.
  std::size_t count = 0;
  while (T - static_cast<double>(count) * h > h + kTol * std::max(1.0, T)) ++count;
  return count + 1;
}

std::size_t halving_count(double delta, double h) {
  std::size_t j = 0;
  double p = h;
  while (p > 2.0 * delta) {
    p /= 2.0;
    ++j;
  }
  return j;
}

}  // namespace

TimeGrid build_grid(double delta, double h, double T) {
  if (!(delta > 0.0) || !(h > 0.0) || !(T > 0.0) || !std::isfinite(T)) {
    throw InvalidRangeError("build_grid: delta, h and T must be positive and finite");
  }
  if (!(delta < h / 2.0)) throw InvalidRangeError("build_grid: requires delta < h/2");
  if (h > T) throw InvalidRangeError("build_grid: requires h <= T");

  TimeGrid grid{delta, h, T, {}, 0};
  const std::size_t s = stage_one_count(h, T);
  const std::size_t j = halving_count(delta, h);
  grid.points.reserve(s + j + 1);

  grid.points.push_back(delta);
  for (std::size_t k = j; k >= 1; --k) grid.points.push_back(std::ldexp(h, -static_cast<int>(k)));
  grid.stage_boundary = grid.points.size();
  grid.points.push_back(h);
  for (std::size_t k = s - 1; k >= 1; --k) grid.points.push_back(T - static_cast<double>(k - 1) * h);
  return grid;
}

std::size_t expected_grid_size(double delta, double h, double T) {
  const auto s = static_cast<std::size_t>(std::ceil((T - h) / h - kTol * std::max(1.0, T / h))) + 1;
  const auto j = static_cast<std::size_t>(std::ceil(std::log2(h / (2.0 * delta)) - kTol));
  return s + j + 1;
}

bool validate_grid(const TimeGrid& grid, std::vector<std::string>* diagnostics) {
  bool ok = true;
  auto fail = [&](const std::string& msg) {
    ok = false;
    if (diagnostics != nullptr) diagnostics->push_back(msg);
  };
  const auto& t = grid.points;
  if (t.size() < 2) {
    fail("grid needs at least two points");
    return false;
  }
  if (std::abs(t.front() - grid.delta) > kTol) fail("first point differs from delta");
  if (std::abs(t.back() - grid.T) > kTol) fail("last point differs from T");
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    if (!(t[k + 1] > t[k])) {
      std::ostringstream os;
      os << "points not strictly increasing at index " << k;
      fail(os.str());
    }
  }
  const std::size_t n1 = grid.stage_boundary;
  if (n1 < 1 || n1 >= t.size()) {
    fail("stage boundary out of range");
    return false;
  }
  if (t[n1] > grid.h + kTol) fail("stage boundary point exceeds h");
  if (t[1] - t[0] > grid.delta + kTol) fail("first step exceeds delta");
  // Stage 1: uniform steps of h, except the one leaving t_{N1}, which may be shorter.
  for (std::size_t k = n1; k + 1 < t.size(); ++k) {
    const double step = t[k + 1] - t[k];
    const bool remainder_step = k == n1;
    if (remainder_step ? step > grid.h + kTol : std::abs(step - grid.h) > kTol) {
      std::ostringstream os;
      os << "stage-1 step " << k << " is " << step << ", expected h = " << grid.h;
      fail(os.str());
    }
  }
  // Stage 2: steps double from t_2 up to t_{N1}.
  for (std::size_t k = 2; k < n1; ++k) {
    const double ratio_gap = (t[k + 1] - t[k]) - 2.0 * (t[k] - t[k - 1]);
    if (std::abs(ratio_gap) > kTol) {
      std::ostringstream os;
      os << "stage-2 step " << k << " is not twice the previous step";
      fail(os.str());
    }
  }
  return ok;
}

TimeGrid uniform_grid(double t_lo, double dt, std::size_t n_points) {
  if (!(t_lo > 0.0) || !(dt > 0.0) || n_points < 2) {
    throw InvalidRangeError("uniform_grid: needs t_lo > 0, dt > 0 and at least two points");
  }
  TimeGrid grid;
  grid.delta = t_lo;
  grid.h = dt;
  for (std::size_t k = 0; k < n_points; ++k) grid.points.push_back(t_lo + static_cast<double>(k) * dt);
  grid.T = grid.points.back();
  grid.stage_boundary = 0;
  return grid;
}

void to_json(nlohmann::json& j, const TimeGrid& grid) {
  j = nlohmann::json{{"delta", grid.delta},
                     {"h", grid.h},
                     {"T", grid.T},
                     {"stage_boundary", grid.stage_boundary},
                     {"points", grid.points}};
}

void from_json(const nlohmann::json& j, TimeGrid& grid) {
  for (const auto& item : j.items()) {
    const auto& k = item.key();
    if (k != "delta" && k != "h" && k != "T" && k != "stage_boundary" && k != "points") {
      throw ConfigError("grid." + k, "unknown key");
    }
  }
  grid.delta = j.at("delta").get<double>();
  grid.h = j.at("h").get<double>();
  grid.T = j.at("T").get<double>();
  grid.stage_boundary = j.at("stage_boundary").get<std::size_t>();
  grid.points = j.at("points").get<std::vector<double>>();
}

}  // namespace cmlab

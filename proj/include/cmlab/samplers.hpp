#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cmlab/models.hpp"
#include "cmlab/schedule.hpp"
#include "cmlab/score_model.hpp"
#include "cmlab/types.hpp"

namespace cmlab {

/// Denoising times T = t_1 >= t_2 >= ... >= t_K, all in [delta, T].
struct MultistepSchedule {
  std::vector<double> times;
  double delta = 0.0;

  std::size_t steps() const { return times.size(); }
  /// Throws InvalidRangeError when the schedule is empty, not non-increasing or out of range.
  void validate() const;

  /// T followed by K - 1 copies of t_hat.
  static MultistepSchedule fixed(double T, double t_hat, std::size_t K, double delta);
};

/// Grid point nearest to log(2 L_f) + delta.
double choose_t_hat(const TimeGrid& grid, double lipschitz_f);

struct UlmcState {
  RowMatrix z;
  RowMatrix v;
};

/// f(xi_i, T) with xi_i ~ N(0, I).
SampleBatch one_step(const ConsistencyModel& cm, double T, std::size_t n, std::uint64_t seed);

/// Denoise, re-noise to the next schedule time, denoise again. Returns every
/// intermediate batch q_1..q_K. K = 1 reproduces one_step bit for bit.
std::vector<SampleBatch> multistep(const ConsistencyModel& cm, const MultistepSchedule& sched, std::size_t n,
                                   std::uint64_t seed);

/// One OU transition of length tau: e^{-tau} x + sqrt(1 - e^{-2 tau}) xi.
SampleBatch ou_smooth(const SampleBatch& batch, double tau, std::uint64_t seed);

/// Underdamped Langevin corrector. Each step integrates dz = v dt,
/// dv = (s(z_0) - gamma v) dt + sqrt(2 gamma) dW exactly over [0, tau] with the
/// score frozen at the start position z_0. Velocities start at N(0, I).
SampleBatch ulmc_run(const ScoreModel& score_at_delta, const SampleBatch& batch, double gamma, double tau,
                     std::size_t n_steps, std::uint64_t seed);

/// Single exact frozen-drift step on explicit state; exposed for testing.
/// `noise` holds 2 standard normals per coordinate (z then v), laid out as 2*n*d values.
void ulmc_step(UlmcState& state, const RowMatrix& drift, double gamma, double tau, std::span<const double> noise);

}  // namespace cmlab

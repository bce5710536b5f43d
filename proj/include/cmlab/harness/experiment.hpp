#pragma once

#include "cmlab/harness/config.hpp"
#include "cmlab/harness/report.hpp"

namespace cmlab {

/// Runs every sweep point of `cfg` (in parallel, each with its own derived
/// streams) and assembles the rows in sweep order. Sweeps of h, eps_sc or
/// eps_cm with at least three points also get a log-log fit of the metric
/// against h, the measured eps_sc or the measured eps_cm respectively.
Report run_experiment(const ExperimentConfig& cfg);

/// Final batch of the configured sampler (q_K for multistep) at the first
/// sweep point, without any measurement.
SampleBatch sample_from_config(const ExperimentConfig& cfg);

}  // namespace cmlab

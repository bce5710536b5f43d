#pragma once

// Experiment configuration. JSON schema (every key optional unless noted,
// unknown keys rejected at every level):
//
// {
//   "name": "h_sweep",                          (required)
//   "distribution": {weights, means, vars},     (required)
//   "grid": {"delta": 0.01, "h": 0.025, "T": 2.0},
//   "model": {"kind": "distilled" | "empirical" | "exact", "tol": 1e-10},
//   "injection": {"eps_sc": 0.0, "eps_cm": 0.0},
//   "sampler": {"kind": "one-step" | "multistep" | "one-step+ou" | "one-step+ulmc",
//               "K": 4, "t_hat": null, "ou_tau": 0.05,
//               "gamma": 1.0, "tau": 0.01, "corrector_constant": 1.0},
//   "sweep": {"kind": "none" | "h" | "eps_sc" | "eps_cm", "values": [...]},
//   "metric": "w2-gaussian-fit" | "w2-sliced" | "w2-1d",
//   "n": 20000, "n_mc": 500, "n_proj": 64, "seed": 0, "measure": true
// }

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmlab/distributions.hpp"
#include "cmlab/flows.hpp"

namespace cmlab {

struct GridSpec {
  double delta = 0.01;
  double h = 0.025;
  double T = 2.0;
};

struct ModelSpec {
  std::string kind = "distilled";
  double tol = kDefaultReferenceTol;
};

struct InjectionSpec {
  double eps_sc = 0.0;
  double eps_cm = 0.0;
};

struct SamplerSpec {
  std::string kind = "one-step";
  std::size_t K = 4;
  std::optional<double> t_hat;  ///< unset: grid point nearest log(2 L_f) + delta
  double ou_tau = 0.05;
  double gamma = 1.0;
  double tau = 0.01;
  /// N tau = corrector_constant / sqrt(L_s).
  double corrector_constant = 1.0;
};

struct SweepSpec {
  std::string kind = "none";
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string name;
  MixtureParams distribution;
  GridSpec grid;
  ModelSpec model;
  InjectionSpec injection;
  SamplerSpec sampler;
  SweepSpec sweep;
  std::string metric = "w2-gaussian-fit";
  std::size_t n = 20000;
  std::size_t n_mc = 500;
  std::size_t n_proj = 64;
  std::uint64_t seed = 0;
  bool measure = true;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

}  // namespace cmlab

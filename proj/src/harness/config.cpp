#include "cmlab/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "cmlab/errors.hpp"
#include "cmlab/schedule.hpp"

namespace cmlab {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
    }
  }
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

template <class T>
void read(const json& j, const std::string& path, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(join(path, key), std::string("wrong type (") + e.what() + ")");
  }
}

void one_of(const std::string& value, const std::string& path, std::initializer_list<std::string_view> options) {
  if (std::find(options.begin(), options.end(), value) == options.end()) {
    std::string list;
    for (auto o : options) list += (list.empty() ? "" : ", ") + std::string(o);
    throw ConfigError(path, "'" + value + "' is not one of {" + list + "}");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("name", "must be a non-empty string");
  try {
    distribution.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("distribution", e.what());
  }
  if (!(grid.delta > 0.0)) throw ConfigError("grid.delta", "must be positive");
  if (!(grid.h > 2.0 * grid.delta)) throw ConfigError("grid.h", "must exceed 2 * delta");
  if (!(grid.T >= grid.h)) throw ConfigError("grid.T", "must be >= h");
  one_of(model.kind, "model.kind", {"distilled", "empirical", "exact"});
  if (!(model.tol > 0.0)) throw ConfigError("model.tol", "must be positive");
  if (!(injection.eps_sc >= 0.0)) throw ConfigError("injection.eps_sc", "must be >= 0");
  if (!(injection.eps_cm >= 0.0)) throw ConfigError("injection.eps_cm", "must be >= 0");
  one_of(sampler.kind, "sampler.kind", {"one-step", "multistep", "one-step+ou", "one-step+ulmc"});
  if (sampler.K < 1) throw ConfigError("sampler.K", "must be >= 1");
  if (sampler.t_hat && !(*sampler.t_hat >= grid.delta && *sampler.t_hat <= grid.T)) {
    throw ConfigError("sampler.t_hat", "must lie in [delta, T]");
  }
  if (!(sampler.ou_tau >= 0.0)) throw ConfigError("sampler.ou_tau", "must be >= 0");
  if (!(sampler.gamma > 0.0)) throw ConfigError("sampler.gamma", "must be positive");
  if (!(sampler.tau > 0.0)) throw ConfigError("sampler.tau", "must be positive");
  if (!(sampler.corrector_constant > 0.0)) throw ConfigError("sampler.corrector_constant", "must be positive");
  one_of(sweep.kind, "sweep.kind", {"none", "h", "eps_sc", "eps_cm"});
  if (sweep.kind != "none" && sweep.values.empty()) throw ConfigError("sweep.values", "must be non-empty");
  for (std::size_t i = 0; i < sweep.values.size(); ++i) {
    const double v = sweep.values[i];
    const std::string p = "sweep.values[" + std::to_string(i) + "]";
    if (sweep.kind == "h" && !(v > 2.0 * grid.delta && v <= grid.T)) throw ConfigError(p, "h must lie in (2 delta, T]");
    if ((sweep.kind == "eps_sc" || sweep.kind == "eps_cm") && !(v >= 0.0)) throw ConfigError(p, "must be >= 0");
  }
  one_of(metric, "metric", {"w2-gaussian-fit", "w2-sliced", "w2-1d"});
  if (metric == "w2-gaussian-fit" && distribution.components() != 1) {
    throw ConfigError("metric", "w2-gaussian-fit needs a single-component distribution");
  }
  if (metric == "w2-1d" && distribution.dim() != 1) throw ConfigError("metric", "w2-1d needs d = 1");
  if (n < 2) throw ConfigError("n", "must be >= 2");
  if (n_mc < 100) throw ConfigError("n_mc", "must be >= 100");
  if (n_proj < 1) throw ConfigError("n_proj", "must be >= 1");
}

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j, "", {"name", "distribution", "grid", "model", "injection", "sampler", "sweep", "metric", "n",
                         "n_mc", "n_proj", "seed", "measure"});
  ExperimentConfig cfg;
  if (!j.contains("name")) throw ConfigError("name", "missing");
  if (!j.contains("distribution")) throw ConfigError("distribution", "missing");
  read(j, "", "name", cfg.name);
  try {
    cfg.distribution = j.at("distribution").get<MixtureParams>();
  } catch (const json::exception& e) {
    throw ConfigError("distribution", std::string("wrong type (") + e.what() + ")");
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    reject_unknown(g, "grid", {"delta", "h", "T"});
    read(g, "grid", "delta", cfg.grid.delta);
    read(g, "grid", "h", cfg.grid.h);
    read(g, "grid", "T", cfg.grid.T);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m, "model", {"kind", "tol"});
    read(m, "model", "kind", cfg.model.kind);
    read(m, "model", "tol", cfg.model.tol);
  }
  if (j.contains("injection")) {
    const json& m = j.at("injection");
    reject_unknown(m, "injection", {"eps_sc", "eps_cm"});
    read(m, "injection", "eps_sc", cfg.injection.eps_sc);
    read(m, "injection", "eps_cm", cfg.injection.eps_cm);
  }
  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    reject_unknown(s, "sampler", {"kind", "K", "t_hat", "ou_tau", "gamma", "tau", "corrector_constant"});
    read(s, "sampler", "kind", cfg.sampler.kind);
    read(s, "sampler", "K", cfg.sampler.K);
    if (s.contains("t_hat") && !s.at("t_hat").is_null()) {
      double v = 0.0;
      read(s, "sampler", "t_hat", v);
      cfg.sampler.t_hat = v;
    }
    read(s, "sampler", "ou_tau", cfg.sampler.ou_tau);
    read(s, "sampler", "gamma", cfg.sampler.gamma);
    read(s, "sampler", "tau", cfg.sampler.tau);
    read(s, "sampler", "corrector_constant", cfg.sampler.corrector_constant);
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    reject_unknown(s, "sweep", {"kind", "values"});
    read(s, "sweep", "kind", cfg.sweep.kind);
    read(s, "sweep", "values", cfg.sweep.values);
  }
  read(j, "", "metric", cfg.metric);
  read(j, "", "n", cfg.n);
  read(j, "", "n_mc", cfg.n_mc);
  read(j, "", "n_proj", cfg.n_proj);
  read(j, "", "seed", cfg.seed);
  read(j, "", "measure", cfg.measure);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["distribution"] = cfg.distribution;
  j["grid"] = {{"delta", cfg.grid.delta}, {"h", cfg.grid.h}, {"T", cfg.grid.T}};
  j["model"] = {{"kind", cfg.model.kind}, {"tol", cfg.model.tol}};
  j["injection"] = {{"eps_sc", cfg.injection.eps_sc}, {"eps_cm", cfg.injection.eps_cm}};
  j["sampler"] = {{"kind", cfg.sampler.kind},
                  {"K", cfg.sampler.K},
                  {"t_hat", cfg.sampler.t_hat ? json(*cfg.sampler.t_hat) : json(nullptr)},
                  {"ou_tau", cfg.sampler.ou_tau},
                  {"gamma", cfg.sampler.gamma},
                  {"tau", cfg.sampler.tau},
                  {"corrector_constant", cfg.sampler.corrector_constant}};
  j["sweep"] = {{"kind", cfg.sweep.kind}, {"values", cfg.sweep.values}};
  j["metric"] = cfg.metric;
  j["n"] = cfg.n;
  j["n_mc"] = cfg.n_mc;
  j["n_proj"] = cfg.n_proj;
  j["seed"] = cfg.seed;
  j["measure"] = cfg.measure;
  return j;
}

}  // namespace cmlab

#include "delab/config.hpp"

#include <fstream>
#include <set>

#include "delab/catalog.hpp"

namespace delab::cli {

namespace {
const std::set<std::string> kExperiments = {
    "audit", "solve", "hm", "green", "trace-ext", "poincare",
    "regularity", "compare", "fractional", "all"};
const std::set<std::string> kCoeffs = {"identity", "diag", "full", "nonsym"};
}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get("experiment", c.experiment);
  get("domain", c.domain);
  if (j.contains("domain_params")) c.domain_params = j.at("domain_params");
  get("measure", c.measure);
  if (j.contains("measure_params")) c.measure_params = j.at("measure_params");
  get("weight", c.weight);
  get("gamma", c.gamma);
  get("beta", c.beta);
  get("coeff", c.coeff);
  get("grid_n", c.grid_n);
  get("levels", c.levels);
  get("tol", c.tol);
  get("eps_min", c.eps_min);
  get("samples", c.samples);
  get("seed", c.seed);
  get("out_dir", c.out_dir);
  get("strict", c.strict);
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["domain"] = domain;
  j["domain_params"] = domain_params;
  j["measure"] = measure.empty() ? cat::default_measure(domain) : measure;
  j["measure_params"] = measure_params;
  j["weight"] = weight;
  j["gamma"] = std::isnan(gamma) ? cat::default_gamma(domain) : gamma;
  j["beta"] = beta;
  j["coeff"] = coeff;
  j["grid_n"] = grid_n;
  j["levels"] = levels;
  j["tol"] = tol;
  j["eps_min"] = eps_min;
  j["samples"] = samples;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["strict"] = strict;
  return j;
}

void ExperimentConfig::validate() const {
  if (!kExperiments.count(experiment))
    throw ConfigError("config key 'experiment': unknown value '" + experiment +
                      "'");
  const auto ids = cat::domain_ids();
  if (std::find(ids.begin(), ids.end(), domain) == ids.end())
    throw ConfigError("config key 'domain': unknown id '" + domain + "'");
  if (!kCoeffs.count(coeff))
    throw ConfigError("config key 'coeff': unknown value '" + coeff + "'");
  if (grid_n < 8 || grid_n > 4096)
    throw ConfigError("config key 'grid_n': out of range [8, 4096]");
  if (levels < 1 || levels > 5)
    throw ConfigError("config key 'levels': out of range [1, 5]");
  if (tol <= 0 || tol > 1e-2)
    throw ConfigError("config key 'tol': out of range (0, 1e-2]");
  if (samples < 1 || samples > 256)
    throw ConfigError("config key 'samples': out of range [1, 256]");
  if (eps_min <= 0 || eps_min >= 1)
    throw ConfigError("config key 'eps_min': out of range (0, 1)");

  // Weight admissibility: audits probe out-of-range exponents on purpose,
  // every other experiment validates the range now.
  if (experiment != "audit" && weight == "power-distance") {
    const double g = std::isnan(gamma) ? cat::default_gamma(domain) : gamma;
    const auto dom = cat::make_domain(domain, domain_params);
    meas::PowerDistance::check_range(*dom, g);
  }
  if (experiment == "fractional") {
    const double g = std::isnan(gamma) ? 0.0 : gamma;
    if (!(g > -1.0 && g < 1.0))
      throw ConfigError("config key 'gamma': fractional needs gamma in (-1,1)");
  }
}

uint64_t ExperimentConfig::hash() const { return fnv1a(to_json().dump()); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

}  // namespace delab::cli

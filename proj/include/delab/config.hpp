#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "delab/core.hpp"

namespace delab::cli {

// One experiment description; JSON round-trippable and hashed for manifests.
struct ExperimentConfig {
  std::string experiment = "audit";  // audit | solve | hm | green | trace-ext |
                                     // poincare | regularity | compare |
                                     // fractional | all
  std::string domain = "halfplane";
  nlohmann::json domain_params = nlohmann::json::object();
  std::string measure;               // empty: catalog default
  nlohmann::json measure_params = nlohmann::json::object();
  std::string weight = "power-distance";
  double gamma = std::numeric_limits<double>::quiet_NaN();  // NaN: default
  double beta = 0.0;
  std::string coeff = "identity";    // identity | diag | full | nonsym
  int grid_n = 64;                   // cells along axis 0
  int levels = 1;
  double tol = 1e-10;
  double eps_min = 0.05;
  int samples = 5;
  uint64_t seed = 1234;
  std::string out_dir = "out";
  bool strict = false;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  // Throws ConfigError naming the offending key.
  void validate() const;
  uint64_t hash() const;
};

ExperimentConfig load_config(const std::string& path);

}  // namespace delab::cli

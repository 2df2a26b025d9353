#pragma once

#include "delab/config.hpp"
#include "delab/report.hpp"

namespace delab::cli {

// Executes the configured experiment(s) across the refinement ladder,
// writes verdicts and exported fields under cfg.out_dir, and returns the
// manifest. Exit policy: callers treat any failed verdict as nonzero.
RunManifest run(const ExperimentConfig& cfg);

struct StudyResult {
  std::vector<std::string> quantity;
  std::vector<std::vector<double>> errors;  // per quantity, per level
  std::vector<double> order;                // fitted log2 rates
  std::vector<bool> monotone;
  nlohmann::json to_json() const;
};

// Refinement study against the experiment's declared oracle.
StudyResult convergence_study(const ExperimentConfig& cfg, int levels);

}  // namespace delab::cli

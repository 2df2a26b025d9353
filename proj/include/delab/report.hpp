#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "delab/elliptic.hpp"
#include "delab/measures.hpp"

namespace delab::cli {

// One line of a manifest: a named check with its fitted constant and a
// traceability tag linking it to the estimate it verifies.
struct VerdictSummary {
  std::string name;
  std::string tag;
  bool pass = false;
  double constant = 0.0;
  double exponent = 0.0;
  bool stable = true;
  nlohmann::json extra = nlohmann::json::object();
};

struct RunManifest {
  uint64_t config_hash = 0;
  std::string catalog_version;
  nlohmann::json config;
  std::vector<VerdictSummary> verdicts;
  std::vector<double> wall_seconds;  // zeroed under strict mode
  bool strict = false;
  bool partial = false;  // resource exhaustion marker

  bool all_pass() const;
  nlohmann::json to_json() const;
  uint64_t result_hash() const;  // hash of the deterministic portion
  void write(const std::string& path) const;
};

nlohmann::json to_json(const meas::AuditReport& r);
nlohmann::json to_json(const ell::EstimateVerdict& v);
VerdictSummary summarize(const meas::AuditReport& r);
VerdictSummary summarize(const ell::EstimateVerdict& v);

}  // namespace delab::cli

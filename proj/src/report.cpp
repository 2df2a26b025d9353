#include "delab/report.hpp"

#include <fstream>

namespace delab::cli {

bool RunManifest::all_pass() const {
  for (const auto& v : verdicts)
    if (!v.pass) return false;
  return true;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["catalog_version"] = catalog_version;
  j["config"] = config;
  j["strict"] = strict;
  j["partial"] = partial;
  auto arr = nlohmann::json::array();
  for (const auto& v : verdicts) {
    nlohmann::json e;
    e["name"] = v.name;
    e["tag"] = v.tag;
    e["pass"] = v.pass;
    e["constant"] = v.constant;
    e["exponent"] = v.exponent;
    e["stable"] = v.stable;
    e["extra"] = v.extra;
    arr.push_back(e);
  }
  j["verdicts"] = arr;
  auto wt = nlohmann::json::array();
  for (double w : wall_seconds) wt.push_back(strict ? 0.0 : w);
  j["wall_seconds"] = wt;
  return j;
}

uint64_t RunManifest::result_hash() const {
  nlohmann::json j = to_json();
  j.erase("wall_seconds");
  return fnv1a(j.dump());
}

void RunManifest::write(const std::string& path) const {
  std::ofstream f(path);
  f << to_json().dump(2) << "\n";
}

nlohmann::json to_json(const meas::AuditReport& r) {
  nlohmann::json j;
  j["hypothesis"] = r.hypothesis;
  j["constant"] = r.constant;
  j["exponent"] = r.exponent;
  j["band"] = r.band;
  j["pass"] = r.pass;
  j["refinement_stable"] = r.refinement_stable;
  j["n_scales"] = r.n_scales;
  j["n_points"] = r.n_points;
  j["scales"] = r.scales;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

nlohmann::json to_json(const ell::EstimateVerdict& v) {
  nlohmann::json j;
  j["estimate"] = v.estimate;
  j["tag"] = v.tag;
  j["samples"] = v.samples;
  j["worst_constant"] = v.worst_constant;
  j["exponent"] = v.exponent;
  j["stable"] = v.stable;
  j["pass"] = v.pass;
  j["sample_log"] = v.sample_log;
  return j;
}

VerdictSummary summarize(const meas::AuditReport& r) {
  VerdictSummary s;
  s.name = "audit-" + r.hypothesis;
  s.tag = r.hypothesis;
  s.pass = r.pass;
  s.constant = r.constant;
  s.exponent = r.exponent;
  s.stable = r.refinement_stable;
  s.extra["band"] = r.band;
  return s;
}

VerdictSummary summarize(const ell::EstimateVerdict& v) {
  VerdictSummary s;
  s.name = v.estimate;
  s.tag = v.tag;
  s.pass = v.pass;
  s.constant = v.worst_constant;
  s.exponent = v.exponent;
  s.stable = v.stable;
  s.extra["samples"] = v.samples;
  return s;
}

}  // namespace delab::cli

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "delab/runner.hpp"

using namespace delab;

namespace {

void add_common(CLI::App* sub, cli::ExperimentConfig& cfg,
                std::string& config_path) {
  sub->add_option("--config", config_path, "JSON config file");
  sub->add_option("--domain", cfg.domain, "catalog domain id");
  sub->add_option("--gamma", cfg.gamma, "weight exponent");
  sub->add_option("--grid", cfg.grid_n, "cells along axis 0");
  sub->add_option("--levels", cfg.levels, "refinement ladder depth");
  sub->add_option("--tol", cfg.tol, "solver tolerance");
  sub->add_option("--seed", cfg.seed, "random seed");
  sub->add_option("--out", cfg.out_dir, "output directory");
  sub->add_option("--samples", cfg.samples, "sample count per verifier");
  sub->add_flag("--strict", cfg.strict, "deterministic reductions and timings");
}

int run_kind(const std::string& kind, cli::ExperimentConfig cfg,
             const std::string& config_path, const CLI::App* sub) {
  if (!config_path.empty()) {
    auto from_file = cli::load_config(config_path);
    // Flags given on the command line override file values.
    const auto keep = cfg;
    cfg = from_file;
    if (sub->count("--domain")) cfg.domain = keep.domain;
    if (sub->count("--gamma")) cfg.gamma = keep.gamma;
    if (sub->count("--grid")) cfg.grid_n = keep.grid_n;
    if (sub->count("--levels")) cfg.levels = keep.levels;
    if (sub->count("--tol")) cfg.tol = keep.tol;
    if (sub->count("--seed")) cfg.seed = keep.seed;
    if (sub->count("--out")) cfg.out_dir = keep.out_dir;
    if (sub->count("--samples")) cfg.samples = keep.samples;
    if (sub->count("--strict")) cfg.strict = keep.strict;
  }
  cfg.experiment = kind;
  const auto manifest = cli::run(cfg);
  for (const auto& v : manifest.verdicts)
    std::printf("[%s] %-32s tag=%-12s constant=%.4g exponent=%.4g%s\n",
                v.pass ? "pass" : "FAIL", v.name.c_str(), v.tag.c_str(),
                v.constant, v.exponent, v.stable ? "" : " (unstable)");
  std::printf("manifest: %s/manifest.json (hash %llu)\n",
              cfg.out_dir.c_str(),
              static_cast<unsigned long long>(manifest.result_hash()));
  return manifest.all_pass() && !manifest.partial ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for degenerate elliptic boundary theory"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {
      "audit", "solve", "hm", "green", "trace-ext", "poincare",
      "regularity", "compare", "fractional", "all"};

  struct SubState {
    CLI::App* sub = nullptr;
    cli::ExperimentConfig cfg;
    std::string config_path;
  };
  std::vector<SubState> subs(kinds.size());
  for (size_t i = 0; i < kinds.size(); ++i) {
    subs[i].sub = app.add_subcommand(kinds[i], "run the " + kinds[i] +
                                                   " experiment set");
    add_common(subs[i].sub, subs[i].cfg, subs[i].config_path);
  }

  // study: convergence orders against the declared oracles.
  SubState study;
  study.sub = app.add_subcommand("study", "refinement convergence study");
  add_common(study.sub, study.cfg, study.config_path);

  // report: print a stored manifest.
  std::string report_path;
  auto* report = app.add_subcommand("report", "print a manifest");
  report->add_option("path", report_path, "manifest.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    for (size_t i = 0; i < kinds.size(); ++i)
      if (subs[i].sub->parsed())
        return run_kind(kinds[i], subs[i].cfg, subs[i].config_path,
                        subs[i].sub);
    if (study.sub->parsed()) {
      if (!study.config_path.empty()) study.cfg = cli::load_config(study.config_path);
      study.cfg.experiment = "solve";
      const auto res =
          cli::convergence_study(study.cfg, std::max(study.cfg.levels, 3));
      for (size_t i = 0; i < res.quantity.size(); ++i) {
        std::printf("%-24s order=%.3f%s errors:", res.quantity[i].c_str(),
                    res.order[i], res.monotone[i] ? "" : " (non-monotone)");
        for (double e : res.errors[i]) std::printf(" %.3e", e);
        std::printf("\n");
      }
      std::filesystem::create_directories(study.cfg.out_dir);
      std::ofstream f(study.cfg.out_dir + "/study.json");
      f << res.to_json().dump(2) << "\n";
      return 0;
    }
    if (report->parsed()) {
      std::ifstream f(report_path);
      if (!f) {
        std::fprintf(stderr, "cannot open %s\n", report_path.c_str());
        return 2;
      }
      nlohmann::json j;
      f >> j;
      std::printf("config hash: %llu\n",
                  static_cast<unsigned long long>(
                      j.value("config_hash", 0ull)));
      for (const auto& v : j.at("verdicts"))
        std::printf("[%s] %-32s tag=%-12s constant=%.4g\n",
                    v.value("pass", false) ? "pass" : "FAIL",
                    v.value("name", "?").c_str(), v.value("tag", "?").c_str(),
                    v.value("constant", 0.0));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}

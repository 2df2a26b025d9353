#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "delab/grid.hpp"
#include "delab/measures.hpp"
#include "delab/solve.hpp"

namespace delab::ell {

// Outer-truncation policy for unbounded domains: indicator data carried to
// the nearest boundary point, an explicit reference function, or zero.
enum class OuterPolicy { NearestBoundary, Reference, Zero };

struct Setup {
  geo::DomainPtr dom;
  meas::MeasurePtr mu;
  meas::WeightPtr weight;
  disc::CoefficientField coeff;
  disc::Grid grid;
  disc::LinearSystem sys;
};

Setup make_setup(geo::DomainPtr dom, meas::MeasurePtr mu, meas::WeightPtr w,
                 const disc::CoefficientField& coeff, Box box, int cells);

using BoundarySet = std::function<bool(const Vec&)>;

// omega^.(E): the solve with indicator data 1_E at pinned nodes (evaluated
// at the nearest boundary point) and the chosen outer policy.
disc::Field harmonic_measure(
    const Setup& s, const BoundarySet& E,
    OuterPolicy policy = OuterPolicy::NearestBoundary,
    const std::function<double(const Vec&)>* reference = nullptr,
    disc::SolveReport* rep = nullptr);

// Mollified variant: indicator ramped over a collar of width 2h, to
// quantify the sensitivity of the sampled data.
disc::Field harmonic_measure_mollified(const Setup& s, const Vec& center,
                                       double radius,
                                       disc::SolveReport* rep = nullptr);

// ---------------------------------------------------------------------------
// Green functions

struct GreenField {
  disc::Field field;
  Vec pole;
  double rho = 0.0;
  // Tabulated profile gamma_y(s) = int_s^delta(y) t^2/m(B(y,t)) dt/t.
  std::vector<double> prof_s, prof_gamma;
  double gamma_at(double s) const;
};

struct GreenOptions {
  double rho = 0.0;              // 0: min(2h, delta(y)/16)
  double min_delta_cells = 8.0;  // reject poles with delta(y) < 8h
};

// Regularized Green function with pole y: zero Dirichlet data and right-hand
// side the normalized cell masses of B(y, rho).
GreenField green(const Setup& s, const Vec& y, const GreenOptions& opt = {},
                 disc::SolveReport* rep = nullptr);

// Relative asymmetry |avg_B(y1) g(., y2) - avg_B(y2) gT(., y1)| / max g,
// with gT assembled from the transposed coefficients. For symmetric
// coefficients this is the plain symmetry defect.
double green_symmetry(const Setup& s, const Vec& y1, const Vec& y2);

// Superposition of single-cell Green fields against the source density f;
// equal to the direct solve with rhs f m per cell up to solver tolerance.
disc::Field representation(const Setup& s,
                           const std::function<double(const Vec&)>& f,
                           const BoundarySet& support);

// ---------------------------------------------------------------------------
// Estimate verifiers

enum class Estimate {
  MoserBoundary,
  HolderBoundary,
  Harnack,
  CaccioppoliBoundary,
  MaxPrinciple,
  Nondegeneracy,
  HmDoubling,
  GreenVsHm,
  ChangeOfPole,
  LocalComparison,
};

std::string estimate_name(Estimate e);
std::string estimate_tag(Estimate e);  // traceability tag for manifests

struct EstimateVerdict {
  std::string estimate;
  std::string tag;
  int samples = 0;
  double worst_constant = 0.0;
  double exponent = 0.0;  // fitted where applicable (Holder alpha, K, ...)
  bool stable = true;
  bool pass = false;
  std::vector<std::string> sample_log;  // replayable configuration records
};

struct VerifyOptions {
  int n_balls = 5;
  uint64_t seed = 1234;
  double alpha = 2.0;       // dilation in nondegeneracy/doubling statements
  int comparison_K = 8;     // KB clearance for the local comparison
  double stability_cap = 4.0;
  int max_principle_trials = 200;
  double constant_cap = 1e6;
};

// Runs one estimate on a single grid.
EstimateVerdict verify(const Setup& s, Estimate est,
                       const VerifyOptions& opt = {});

// Runs on two resolutions and merges: the verdict fails when the worst
// constant grows by more than the stability cap under refinement.
EstimateVerdict verify_refined(const Setup& coarse, const Setup& fine,
                               Estimate est, const VerifyOptions& opt = {});

// Deterministic samples of admissible boundary balls for the verifiers.
struct BallSample {
  Vec center;
  double radius = 0.0;
};
std::vector<BallSample> sample_boundary_balls(const Setup& s, int count,
                                              double clearance_factor,
                                              uint64_t seed,
                                              double r_min_cells = 8.0);

}  // namespace delab::ell

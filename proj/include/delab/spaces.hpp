#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "delab/dyadic.hpp"
#include "delab/grid.hpp"
#include "delab/measures.hpp"

namespace delab::spaces {

// Boundary data: weighted samples plus values.
struct BoundaryFunction {
  std::vector<meas::WeightedPoint> samples;
  Vec values;

  static BoundaryFunction from(const meas::BoundaryMeasure& mu, double spacing,
                               const Box& within,
                               const std::function<double(const Vec&)>& fn);
};

// ---------------------------------------------------------------------------
// Trace

struct TraceField {
  std::vector<Vec> points;
  Vec values;
  std::vector<char> defined;
  long skipped = 0;
  double band_lo = 0.0, band_hi = 0.0;

  void write_csv(const std::string& path) const;
};

// Trace through the access cones of a region map: for each boundary sample,
// the m-weighted average of u over balls B(X, delta(X)/2) with X a cone cube
// center whose clearance lies in the evaluation band (default [2h, 4h]).
TraceField trace(const disc::Field& u, const dyadic::RegionMap& rm,
                 double band_lo = 0.0, double band_hi = 0.0);

// Trace at one boundary point without dyadic machinery: the ball average at
// a corkscrew point of scale ~3h. Returns nothing when no admissible ball
// is found.
std::optional<double> trace_at(const disc::Field& u, const Vec& x,
                               double scale = 0.0);

// m-weighted average of u over B(center, r) grid cells.
double ball_average(const disc::Field& u, const Vec& center, double r);

// ---------------------------------------------------------------------------
// Extension

struct ExtendedField {
  disc::Field field;
  std::vector<char> covered;
  long uncovered = 0;
};

// Whitney extension: Ext g = sum_I phi_I y_I with y_I the mu-average of g
// over B(xi_I, l(I)), xi_I the boundary sample nearest to the cube center,
// and phi_I tensor cubic bumps on 2I normalized to a partition of unity.
ExtendedField extend(const BoundaryFunction& g, const geo::WhitneySet& ws,
                     const disc::Grid& grid);

// ---------------------------------------------------------------------------
// H-norm

struct HNormQuote {
  double value = 0.0;
  double excluded_width = 0.0;
  long pairs = 0;
};

// Double-sum quadrature of the first-difference energy
//   rho(x,|x-y|)^2 |g(x)-g(y)|^2 / m(B(x,|x-y|) cap Omega)
// against mu x mu, excluding pairs closer than `exclusion`. Radial masses
// are tabulated per sample and interpolated.
HNormQuote h_norm(const BoundaryFunction& g, const geo::Domain& dom,
                  const meas::BoundaryMeasure& mu, const meas::Weight& w,
                  double exclusion);

// Discrete W-seminorm squared: the energy of the assembled form.
double w_seminorm_sq(const disc::LinearSystem& sys, const disc::Field& u);

// ---------------------------------------------------------------------------
// Poincare ratios

struct PoincareResult {
  double ratio = 0.0;
  bool degenerate = false;  // vanishing right-hand side
  double lhs = 0.0, rhs = 0.0;
};

struct PoincareOptions {
  double p = 2.0;
  double k = 1.0;      // integrability gain on the left-hand side
  double lambda = 2.0; // boundary version: gradient ball dilation
};

// (avg_B |u - mean|^(pk))^(1/pk) / (r (avg_B |grad u|^p)^(1/p)) over an
// interior ball with 2B inside Omega.
PoincareResult poincare_interior(const disc::Field& u, const Vec& center,
                                 double r, const PoincareOptions& opt = {});

// Same ratio over a tent region; the scale is the tent's outer radius.
PoincareResult poincare_tent(const disc::Field& u, const dyadic::RegionMap& rm,
                             const dyadic::Tent& tent,
                             const PoincareOptions& opt = {});

// (avg_{B cap Omega} |u|^(pk))^(1/pk) / (r (avg_{lambda B cap Omega}
// |grad u|^p)^(1/p)) for fields with vanishing trace on lambda B.
PoincareResult poincare_boundary(const disc::Field& u, const Vec& x, double r,
                                 const PoincareOptions& opt = {});

// A Lipschitz function family (ramps, bumps, oscillations) used by the
// trace/extension and Poincare verifiers.
std::vector<std::pair<std::string, std::function<double(const Vec&)>>>
function_family(int dim);

}  // namespace delab::spaces

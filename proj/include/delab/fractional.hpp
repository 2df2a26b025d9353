#pragma once

#include <Eigen/Sparse>

#include "delab/elliptic.hpp"
#include "delab/spaces.hpp"

namespace delab::frac {

// Periodic strip model for the degenerate extension div(t^-gamma grad u) = 0
// on [0, period) x (0, T]: finite volumes with exact face integrals of the
// t^-gamma resistivity, so the boundary data couples at t = 0 itself (no
// pinning collar). Cells are (i + 1/2) hx by (j + 1/2) ht centered.
struct StripProblem {
  int nx = 256, nt = 256;
  double period = 2.0 * M_PI;
  double T = 2.0 * M_PI;
  double gamma = 0.0;  // in (-1, 1); s = (1 + gamma)/2

  double hx() const { return period / nx; }
  double ht() const { return T / nt; }
  double x_at(int i) const { return (i + 0.5) * hx(); }
  double t_center(int j) const { return (j + 0.5) * ht(); }
};

struct StripSolution {
  StripProblem prob;
  Mat u;  // nx x nt, u(i, j) at (x_i, t_j)
  long iterations = 0;
  double rel_residual = 0.0;
};

// Solves the extension problem with data f at t = 0 and zero closure at T.
StripSolution cs_extend(const StripProblem& p, const Vec& f,
                        double tol = 1e-10);

struct DtNResult {
  Vec f;            // input samples
  Vec tf;           // band-extrapolated flux limit
  Vec tf_face;      // bottom-face flux (t -> 0 through the exact integral)
  double band_lo = 0.0, band_hi = 0.0;
};

// Two evaluation paths for Tf = -C lim t^-gamma du/dt: a two-parameter fit
// q(t) = q0 + c t^(1-gamma) over the band t in [2h, 8h], and the bottom-face
// flux itself.
DtNResult dtn(const StripSolution& sol, const Vec& f);

// Energy pairing <Tf, phi> = a(u_f, F) with F any extension of phi; here
// F = u_phi (a valid extension, and the pairing is extension-independent).
double dtn_pairing(const StripProblem& p, const Vec& f, const Vec& phi);

struct SymbolTable {
  std::vector<int> k;
  std::vector<double> sigma;      // recovered symbol
  std::vector<double> reference;  // |k|^(2s), normalized at k_ref when asked
  std::vector<double> rel_error;
  double s = 0.0;
  void write_csv(const std::string& path) const;
};

// Recovered symbol sigma(k) = <T cos(kx), cos(kx)> / ||cos||^2 for the mode
// list; reference |k|^(2s), normalized at k = k_norm when k_norm > 0.
SymbolTable symbol_table(const StripProblem& p, const std::vector<int>& modes,
                         int k_norm);

// ---------------------------------------------------------------------------
// Rough boundaries

// Weak pairing <Tf, phi> = a(u_f, F) on a general setup, with u_f the
// solution with trace f and F the Whitney extension of phi. Independence of
// the extension is testable by perturbing F with zero-data fields.
double dtn_rough(const ell::Setup& s, const geo::WhitneySet& ws,
                 const std::function<double(const Vec&)>& f,
                 const std::function<double(const Vec&)>& phi,
                 double sample_spacing);

}  // namespace delab::frac

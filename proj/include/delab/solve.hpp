#pragma once

#include "delab/grid.hpp"

namespace delab::disc {

struct SolveOptions {
  double tol = 1e-10;   // relative residual
  long max_iter = 0;    // 0: 20 sqrt(unknowns), at least 500
};

struct SolveReport {
  long iterations = 0;
  double rel_residual = 0.0;
  double energy = 0.0;
  double wall_seconds = 0.0;
};

// Dirichlet solve: data supplies values on pinned and outer nodes (interior
// entries ignored); source, when present, is the right-hand side functional
// per node. Conjugate gradients with a Jacobi preconditioner; non-symmetric
// coefficient systems fall back to BiCGSTAB.
std::pair<Field, SolveReport> solve_dirichlet(const LinearSystem& sys,
                                              const Vec& data,
                                              const Vec* source = nullptr,
                                              const SolveOptions& opt = {});

// Boundary data evaluated at the nearest boundary point for pinned nodes and
// by `outer` on box-face nodes.
Vec boundary_data(const Grid& g, const std::function<double(const Vec&)>& on_gamma,
                  const std::function<double(const Vec&)>& outer);
// Same data function everywhere (outer nodes evaluate it at the node).
Vec boundary_data(const Grid& g, const std::function<double(const Vec&)>& f);

// a(u, v) through the assembled form; includes data-node couplings.
double bilinear(const LinearSystem& sys, const Field& u, const Field& v);

// a(u, u); zero iff u is constant on each connected component.
double energy(const LinearSystem& sys, const Field& u);

// Discrete operator applied to u at interior nodes (zero elsewhere).
// u is a discrete subsolution when all values are <= tolerance.
Field subsolution_residual(const LinearSystem& sys, const Field& u);

// Discrete maximum-principle check: counts interior values outside
// [min data, max data] by more than slack.
long max_principle_violations(const LinearSystem& sys, const Field& u,
                              const Vec& data, double slack = 1e-11);

}  // namespace delab::disc

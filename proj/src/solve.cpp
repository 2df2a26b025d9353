#include "delab/solve.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <chrono>
#include <cmath>

namespace delab::disc {

namespace {

// Jacobi-preconditioned conjugate gradients; deterministic (serial,
// fixed reduction order).
Vec pcg(const Eigen::SparseMatrix<double>& A, const Vec& b, double tol,
        long max_iter, long& iters, double& relres,
        std::vector<double>& history) {
  const long n = A.rows();
  Vec x = Vec::Zero(n);
  const double nb = b.norm();
  if (nb == 0) {
    iters = 0;
    relres = 0;
    return x;
  }
  Vec dinv(n);
  for (long i = 0; i < n; ++i) {
    const double d = A.coeff(i, i);
    dinv[i] = d > 0 ? 1.0 / d : 1.0;
  }
  Vec r = b;
  Vec z = dinv.asDiagonal() * r;
  Vec p = z;
  double rz = r.dot(z);
  Vec q(n);
  for (iters = 0; iters < max_iter; ++iters) {
    relres = r.norm() / nb;
    history.push_back(relres);
    if (relres < tol) return x;
    q.noalias() = A * p;
    const double pq = p.dot(q);
    if (pq <= 0) break;  // loss of positivity: bail to the error path
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    z = dinv.asDiagonal() * r;
    const double rz2 = r.dot(z);
    p = z + (rz2 / rz) * p;
    rz = rz2;
  }
  relres = r.norm() / nb;
  history.push_back(relres);
  if (relres < tol) return x;
  throw SolveError("pcg: no convergence after " + std::to_string(iters) +
                       " iterations, relative residual " +
                       std::to_string(relres),
                   history);
}

}  // namespace

Vec boundary_data(const Grid& g,
                  const std::function<double(const Vec&)>& on_gamma,
                  const std::function<double(const Vec&)>& outer) {
  Vec d = Vec::Zero(g.size());
  for (long i = 0; i < g.size(); ++i) {
    if (g.cls[i] == NodeClass::Pinned)
      d[i] = on_gamma(g.dom->project(g.center(i)));
    else if (g.cls[i] == NodeClass::Outer)
      d[i] = outer(g.center(i));
  }
  return d;
}

Vec boundary_data(const Grid& g, const std::function<double(const Vec&)>& f) {
  return boundary_data(
      g, f, [&](const Vec& X) { return f(X); });
}

std::pair<Field, SolveReport> solve_dirichlet(const LinearSystem& sys,
                                              const Vec& data,
                                              const Vec* source,
                                              const SolveOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid& g = *sys.grid;
  const long N = g.size();
  for (long i = 0; i < N; ++i)
    if (g.cls[i] != NodeClass::Interior && g.cls[i] != NodeClass::Exterior &&
        !std::isfinite(data[i]))
      throw std::invalid_argument("solve_dirichlet: non-finite boundary data");

  // Move data couplings to the right-hand side.
  Vec g0 = Vec::Zero(N);
  for (long i : sys.data_nodes) g0[i] = data[i];
  Vec coupled = sys.full * g0;
  const long ni = static_cast<long>(sys.interior_nodes.size());
  Vec rhs(ni);
  for (long k = 0; k < ni; ++k) {
    const long i = sys.interior_nodes[k];
    rhs[k] = (source ? (*source)[i] : 0.0) - coupled[i];
  }

  long iters = 0;
  double relres = 0.0;
  std::vector<double> history;
  long cap = opt.max_iter > 0
                 ? opt.max_iter
                 : std::max<long>(500, static_cast<long>(
                                           20.0 * std::sqrt(double(ni))));
  Vec x;
  if (sys.symmetric) {
    x = pcg(sys.interior, rhs, opt.tol, cap, iters, relres, history);
  } else {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>> solver;
    solver.setTolerance(opt.tol);
    solver.setMaxIterations(cap);
    solver.compute(sys.interior);
    x = solver.solve(rhs);
    iters = solver.iterations();
    relres = solver.error();
    if (solver.info() != Eigen::Success)
      throw SolveError("bicgstab: no convergence, error " +
                           std::to_string(relres),
                       {relres});
  }

  Field u;
  u.grid = &g;
  u.values = g0;
  for (long k = 0; k < ni; ++k) u.values[sys.interior_nodes[k]] = x[k];

  SolveReport rep;
  rep.iterations = iters;
  rep.rel_residual = relres;
  rep.energy = energy(sys, u);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {std::move(u), rep};
}

double bilinear(const LinearSystem& sys, const Field& u, const Field& v) {
  return v.values.dot(sys.full * u.values);
}

double energy(const LinearSystem& sys, const Field& u) {
  return bilinear(sys, u, u);
}

Field subsolution_residual(const LinearSystem& sys, const Field& u) {
  Field r;
  r.grid = sys.grid;
  r.name = "residual";
  const Vec full = sys.full * u.values;
  r.values = Vec::Zero(u.values.size());
  for (long i : sys.interior_nodes) r.values[i] = full[i];
  return r;
}

long max_principle_violations(const LinearSystem& sys, const Field& u,
                              const Vec& data, double slack) {
  double lo = 1e300, hi = -1e300;
  for (long i : sys.data_nodes) {
    lo = std::min(lo, data[i]);
    hi = std::max(hi, data[i]);
  }
  const double range = std::max(hi - lo, 1e-30);
  long bad = 0;
  for (long i : sys.interior_nodes)
    if (u.values[i] < lo - slack * range || u.values[i] > hi + slack * range)
      ++bad;
  return bad;
}

}  // namespace delab::disc

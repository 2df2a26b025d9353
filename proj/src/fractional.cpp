#include "delab/fractional.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace delab::frac {

namespace {

// Exact primitives of the resistivity/conductivity profiles.
double int_pow(double a, double b, double p) {
  // integral of s^p over [a, b]; p > -1 required at a = 0
  if (b <= a) return 0.0;
  if (std::abs(p + 1.0) < 1e-14) return std::log(b / std::max(a, 1e-300));
  return (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
}

struct StripOperator {
  const StripProblem* p;
  Vec cx;     // per-row conductance of x faces: W_j / hx
  Vec ct;     // t-face conductance between rows j and j+1: hx / R_j
  double cb;  // bottom coupling: hx / R_bottom
  double cq;  // top coupling to the zero closure

  explicit StripOperator(const StripProblem& prob) : p(&prob) {
    const double hx = prob.hx(), ht = prob.ht(), g = prob.gamma;
    cx.resize(prob.nt);
    for (int j = 0; j < prob.nt; ++j)
      cx[j] = int_pow(j * ht, (j + 1) * ht, -g) / hx;
    ct.resize(prob.nt - 1);
    for (int j = 0; j + 1 < prob.nt; ++j)
      ct[j] = hx / int_pow(prob.t_center(j), prob.t_center(j + 1), g);
    cb = hx / int_pow(0.0, 0.5 * ht, g);
    cq = hx / int_pow(prob.t_center(prob.nt - 1), prob.T, g);
  }

  long idx(int i, int j) const { return static_cast<long>(j) * p->nx + i; }

  // y = A u with the boundary rows eliminated (data enters via rhs).
  Vec apply(const Vec& u) const {
    const int nx = p->nx, nt = p->nt;
    Vec y = Vec::Zero(u.size());
    for (int j = 0; j < nt; ++j)
      for (int i = 0; i < nx; ++i) {
        const long a = idx(i, j);
        const long b = idx((i + 1) % nx, j);
        const double d = cx[j] * (u[a] - u[b]);
        y[a] += d;
        y[b] -= d;
      }
    for (int j = 0; j + 1 < nt; ++j)
      for (int i = 0; i < nx; ++i) {
        const long a = idx(i, j), b = idx(i, j + 1);
        const double d = ct[j] * (u[a] - u[b]);
        y[a] += d;
        y[b] -= d;
      }
    for (int i = 0; i < nx; ++i) {
      y[idx(i, 0)] += cb * u[idx(i, 0)];
      y[idx(i, nt - 1)] += cq * u[idx(i, nt - 1)];
    }
    return y;
  }

  Vec diagonal() const {
    const int nx = p->nx, nt = p->nt;
    Vec d = Vec::Zero(static_cast<long>(nx) * nt);
    for (int j = 0; j < nt; ++j)
      for (int i = 0; i < nx; ++i) d[idx(i, j)] += 2.0 * cx[j];
    for (int j = 0; j + 1 < nt; ++j)
      for (int i = 0; i < nx; ++i) {
        d[idx(i, j)] += ct[j];
        d[idx(i, j + 1)] += ct[j];
      }
    for (int i = 0; i < nx; ++i) {
      d[idx(i, 0)] += cb;
      d[idx(i, nt - 1)] += cq;
    }
    return d;
  }
};

}  // namespace

StripSolution cs_extend(const StripProblem& p, const Vec& f, double tol) {
  if (!(p.gamma > -1.0 && p.gamma < 1.0))
    throw ConfigError("cs_extend: gamma must lie in (-1, 1)");
  if (f.size() != p.nx)
    throw ConfigError("cs_extend: data size must match nx");
  const StripOperator op(p);
  const long N = static_cast<long>(p.nx) * p.nt;
  Vec rhs = Vec::Zero(N);
  for (int i = 0; i < p.nx; ++i) rhs[op.idx(i, 0)] = op.cb * f[i];

  // Jacobi-preconditioned CG on the matrix-free operator.
  const Vec dinv = op.diagonal().cwiseInverse();
  Vec x = Vec::Zero(N);
  Vec r = rhs;
  Vec z = dinv.asDiagonal() * r;
  Vec q = z, Aq(N);
  double rz = r.dot(z);
  const double nb = rhs.norm();
  long it = 0;
  const long cap = std::max<long>(1000, 30 * static_cast<long>(std::sqrt(double(N))));
  double relres = 1.0;
  for (; it < cap; ++it) {
    relres = r.norm() / nb;
    if (relres < tol) break;
    Aq = op.apply(q);
    const double alpha = rz / q.dot(Aq);
    x += alpha * q;
    r -= alpha * Aq;
    z = dinv.asDiagonal() * r;
    const double rz2 = r.dot(z);
    q = z + (rz2 / rz) * q;
    rz = rz2;
  }
  if (relres >= tol)
    throw SolveError("cs_extend: no convergence, residual " +
                         std::to_string(relres),
                     {relres});

  StripSolution sol;
  sol.prob = p;
  sol.iterations = it;
  sol.rel_residual = relres;
  sol.u.resize(p.nx, p.nt);
  for (int j = 0; j < p.nt; ++j)
    for (int i = 0; i < p.nx; ++i) sol.u(i, j) = x[op.idx(i, j)];
  return sol;
}

DtNResult dtn(const StripSolution& sol, const Vec& f) {
  const StripProblem& p = sol.prob;
  const double ht = p.ht(), g = p.gamma;
  DtNResult out;
  out.f = f;
  out.tf.resize(p.nx);
  out.tf_face.resize(p.nx);
  out.band_lo = 2.0 * ht;
  out.band_hi = 8.0 * ht;

  // Band faces: j from 2 to 8 (face between rows j and j+1 sits at
  // t = (j+1) ht).
  std::vector<int> rows;
  for (int j = 1; j + 1 < p.nt; ++j) {
    const double t = (j + 1) * ht;
    if (t >= out.band_lo && t <= out.band_hi) rows.push_back(j);
  }
  if (rows.size() < 3)
    throw ConfigError("dtn: band too thin; need nt >= 16 rows");

  const double cb_r = int_pow(0.0, 0.5 * ht, g);  // bottom resistance / hx
  for (int i = 0; i < p.nx; ++i) {
    // q(t) = t^-gamma du/dt sampled through exact face integrals.
    std::vector<double> ts, qs;
    for (int j : rows) {
      const double R = int_pow(p.t_center(j), p.t_center(j + 1), g);
      ts.push_back((j + 1) * ht);
      qs.push_back((sol.u(i, j + 1) - sol.u(i, j)) / R);
    }
    // Two-parameter fit q = q0 + c t^(1-gamma).
    double s1 = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t k = 0; k < ts.size(); ++k) {
      const double b = std::pow(ts[k], 1.0 - g);
      s1 += 1;
      sx += b;
      sy += qs[k];
      sxx += b * b;
      sxy += b * qs[k];
    }
    const double det = s1 * sxx - sx * sx;
    const double q0 = det != 0 ? (sxx * sy - sx * sxy) / det : sy / s1;
    out.tf[i] = -q0;
    out.tf_face[i] = (f[i] - sol.u(i, 0)) / cb_r;
  }
  return out;
}

double dtn_pairing(const StripProblem& p, const Vec& f, const Vec& phi) {
  const StripSolution uf = cs_extend(p, f);
  const StripSolution up = cs_extend(p, phi);
  // a(u_f, u_phi) over all faces, data faces included.
  const StripOperator op(p);
  double acc = 0.0;
  for (int j = 0; j < p.nt; ++j)
    for (int i = 0; i < p.nx; ++i) {
      const int i2 = (i + 1) % p.nx;
      acc += op.cx[j] * (uf.u(i, j) - uf.u(i2, j)) *
             (up.u(i, j) - up.u(i2, j));
    }
  for (int j = 0; j + 1 < p.nt; ++j)
    for (int i = 0; i < p.nx; ++i)
      acc += op.ct[j] * (uf.u(i, j) - uf.u(i, j + 1)) *
             (up.u(i, j) - up.u(i, j + 1));
  for (int i = 0; i < p.nx; ++i) {
    acc += op.cb * (uf.u(i, 0) - f[i]) * (up.u(i, 0) - phi[i]);
    acc += op.cq * uf.u(i, p.nt - 1) * up.u(i, p.nt - 1);
  }
  return acc;
}

SymbolTable symbol_table(const StripProblem& p, const std::vector<int>& modes,
                         int k_norm) {
  SymbolTable tab;
  tab.s = (1.0 + p.gamma) / 2.0;
  std::vector<double> raw;
  for (int k : modes) {
    Vec f(p.nx);
    for (int i = 0; i < p.nx; ++i)
      f[i] = std::cos(k * 2.0 * M_PI * p.x_at(i) / p.period);
    const StripSolution sol = cs_extend(p, f);
    DtNResult d = dtn(sol, f);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < p.nx; ++i) {
      num += d.tf[i] * f[i];
      den += f[i] * f[i];
    }
    raw.push_back(num / den);
  }
  double norm = 1.0;
  if (k_norm > 0) {
    for (size_t i = 0; i < modes.size(); ++i)
      if (modes[i] == k_norm)
        norm = raw[i] / std::pow(double(k_norm), 2.0 * tab.s);
  }
  for (size_t i = 0; i < modes.size(); ++i) {
    tab.k.push_back(modes[i]);
    tab.sigma.push_back(raw[i]);
    const double ref = norm * std::pow(double(modes[i]), 2.0 * tab.s);
    tab.reference.push_back(ref);
    tab.rel_error.push_back(std::abs(raw[i] - ref) / std::abs(ref));
  }
  return tab;
}

void SymbolTable::write_csv(const std::string& path) const {
  std::ofstream f(path);
  f << "k,sigma,reference,rel_error\n";
  for (size_t i = 0; i < k.size(); ++i)
    f << k[i] << "," << sigma[i] << "," << reference[i] << "," << rel_error[i]
      << "\n";
}

double dtn_rough(const ell::Setup& s, const geo::WhitneySet& ws,
                 const std::function<double(const Vec&)>& f,
                 const std::function<double(const Vec&)>& phi,
                 double sample_spacing) {
  const auto data_f = disc::boundary_data(s.grid, f);
  auto [uf, rep] = disc::solve_dirichlet(s.sys, data_f);
  const auto g = spaces::BoundaryFunction::from(*s.mu, sample_spacing,
                                                s.grid.box, phi);
  const auto F = spaces::extend(g, ws, s.grid);
  return disc::bilinear(s.sys, uf, F.field);
}

}  // namespace delab::frac

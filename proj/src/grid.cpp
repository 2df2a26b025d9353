#include "delab/grid.hpp"

#include <cmath>
#include <fstream>

namespace delab::disc {

Grid Grid::make(geo::DomainPtr dom, meas::WeightPtr w, Box box,
                int cells_axis0, double pin_factor) {
  Grid g;
  g.box = box;
  g.n = box.dim();
  g.dom = std::move(dom);
  g.weight = std::move(w);
  g.h = (box.hi[0] - box.lo[0]) / cells_axis0;
  g.dims.resize(g.n);
  for (int j = 0; j < g.n; ++j) {
    const double cells = (box.hi[j] - box.lo[j]) / g.h;
    g.dims[j] = static_cast<int>(std::lround(cells));
    if (std::abs(cells - g.dims[j]) > 1e-9)
      throw ConfigError("grid: box extents must be integer multiples of h");
  }
  g.pin_radius = pin_factor * g.h;
  g.clamp = 0.5 * g.h;

  const long N = g.size();
  g.cls.resize(N);
  g.cell_mass.assign(N, 0.0);
  std::vector<int> I;
  for (long idx = 0; idx < N; ++idx) {
    const Vec c = g.center(idx);
    const double d = g.dom->distance(c);
    if (d <= g.pin_radius) {
      g.cls[idx] = NodeClass::Pinned;
    } else if (!g.dom->inside(c)) {
      g.cls[idx] = NodeClass::Exterior;
      continue;
    } else {
      g.coords(idx, I);
      bool outer = false;
      for (int j = 0; j < g.n; ++j)
        if (I[j] == 0 || I[j] == g.dims[j] - 1) outer = true;
      g.cls[idx] = outer ? NodeClass::Outer : NodeClass::Interior;
    }
    // Cell mass by 2^n midpoints.
    double mass = 0.0;
    Vec p(g.n);
    for (int corner = 0; corner < (1 << g.n); ++corner) {
      for (int j = 0; j < g.n; ++j)
        p[j] = c[j] + (((corner >> j) & 1) ? 0.25 : -0.25) * g.h;
      if (g.dom->inside(p))
        mass += g.weight->eval(p, 0.25 * g.h) * std::pow(0.5 * g.h, g.n);
    }
    g.cell_mass[idx] = mass;
  }
  return g;
}

double Grid::cell_ball_mass(long idx, const Vec& center, double radius,
                            int sub) const {
  const Vec c = this->center(idx);
  // Quick reject/accept by cell circumradius.
  const double dc = (c - center).norm();
  const double circ = 0.5 * h * std::sqrt(static_cast<double>(n));
  if (dc >= radius + circ) return 0.0;
  double mass = 0.0;
  Vec p(n);
  const double sh = h / sub;
  std::vector<int> I(n, 0);
  const long total = static_cast<long>(std::pow(sub, n));
  for (long q = 0; q < total; ++q) {
    long rem = q;
    double d2 = 0.0;
    for (int j = 0; j < n; ++j) {
      const int i = static_cast<int>(rem % sub);
      rem /= sub;
      p[j] = c[j] - 0.5 * h + (i + 0.5) * sh;
      d2 += sq(p[j] - center[j]);
    }
    if (d2 >= radius * radius) continue;
    if (!dom->inside(p)) continue;
    mass += weight->eval(p, 0.5 * sh) * std::pow(sh, n);
  }
  return mass;
}

// ---------------------------------------------------------------------------
// Coefficient fields

CoefficientField CoefficientField::identity(int n) {
  CoefficientField c;
  c.diagonal = true;
  c.symmetric = true;
  c.bound = 1.0;
  c.diag = [n](const Vec&) { return Vec::Ones(n); };
  return c;
}

CoefficientField CoefficientField::axis_diagonal(Vec d) {
  CoefficientField c;
  c.diagonal = true;
  c.symmetric = true;
  c.bound = std::max(d.maxCoeff(), 1.0 / d.minCoeff());
  c.diag = [d](const Vec&) { return d; };
  return c;
}

CoefficientField CoefficientField::constant_full(Mat M) {
  CoefficientField c;
  c.diagonal = false;
  c.symmetric = (M - M.transpose()).norm() < 1e-14 * M.norm();
  const Mat S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  c.bound = std::max(std::abs(es.eigenvalues().maxCoeff()),
                     1.0 / std::max(es.eigenvalues().minCoeff(), 1e-300));
  c.full = [M](const Vec&) { return M; };
  return c;
}

Mat CoefficientField::matrix(const Vec& X) const {
  if (diagonal) return Vec(diag(X)).asDiagonal();
  return full(X);
}

void CoefficientField::probe(const Box& box, int samples) const {
  const int n = box.dim();
  for (int i = 0; i < samples; ++i) {
    Vec X(n);
    for (int j = 0; j < n; ++j)
      X[j] = box.lo[j] + halton(i + 1, j == 0 ? 2 : (j == 1 ? 3 : 5)) *
                             (box.hi[j] - box.lo[j]);
    const Mat A = matrix(X);
    const Mat S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = A.norm();
    if (!(lmin >= 1.0 / (bound * (1 + 1e-9))) || !(lmax <= bound * n * (1 + 1e-9)))
      throw ConfigError("coefficient probe failed: eigenvalue " +
                        std::to_string(lmin) + " at sample " +
                        std::to_string(i));
  }
}

// ---------------------------------------------------------------------------
// Assembly

namespace {
double harmonic_mean(double a, double b) {
  if (a <= 0 || b <= 0) return 0.0;
  return 2.0 * a * b / (a + b);
}
}  // namespace

LinearSystem assemble(const Grid& grid, const CoefficientField& coeff) {
  coeff.probe(grid.box);

  LinearSystem sys;
  sys.grid = &grid;
  sys.coeff = coeff;
  sys.m_matrix = coeff.diagonal;
  sys.symmetric = coeff.symmetric;

  const long N = grid.size();
  std::vector<Eigen::Triplet<double>> trip;
  const double face_scale = std::pow(grid.h, grid.n - 2);

  if (coeff.diagonal) {
    // Flux form: conductance per face = harmonic mean of w * A_jj.
    trip.reserve(N * (2 * grid.n + 1));
    for (long i = 0; i < N; ++i) {
      if (grid.cls[i] == NodeClass::Exterior) continue;
      const Vec ci = grid.center(i);
      const double wi = grid.weight->eval(ci, grid.clamp);
      const Vec di = coeff.diag(ci);
      for (int ax = 0; ax < grid.n; ++ax) {
        const long j = grid.neighbor(i, ax, +1);
        if (j < 0 || grid.cls[j] == NodeClass::Exterior) continue;
        const Vec cj = grid.center(j);
        const double wj = grid.weight->eval(cj, grid.clamp);
        const double cf =
            face_scale * harmonic_mean(wi * di[ax], wj * coeff.diag(cj)[ax]);
        if (cf <= 0) continue;
        trip.emplace_back(i, i, cf);
        trip.emplace_back(j, j, cf);
        trip.emplace_back(i, j, -cf);
        trip.emplace_back(j, i, -cf);
      }
    }
  } else {
    // Corner-gradient quadrature: each interior lattice vertex contributes
    // h^n * (B v)^T (w A) (B u) with B the averaged-difference gradient.
    const int n = grid.n;
    const int m = 1 << n;
    std::vector<int> I;
    for (long i = 0; i < N; ++i) {
      grid.coords(i, I);
      bool ok = true;
      for (int j = 0; j < n; ++j)
        if (I[j] + 1 >= grid.dims[j]) ok = false;
      if (!ok) continue;
      // Gather the 2^n cells around the vertex at center(i) + h/2.
      std::vector<long> cell(m);
      bool usable = true;
      for (int c = 0; c < m; ++c) {
        long idx = i;
        for (int j = 0; j < n; ++j)
          if ((c >> j) & 1) idx = grid.neighbor(idx, j, +1);
        cell[c] = idx;
        if (grid.cls[idx] == NodeClass::Exterior) usable = false;
      }
      if (!usable) continue;
      Vec vx(n);
      for (int j = 0; j < n; ++j) vx[j] = grid.center(i)[j] + 0.5 * grid.h;
      const double wv = grid.weight->eval(vx, grid.clamp);
      const Mat A = coeff.matrix(vx);
      Mat B(n, m);
      const double den = std::pow(2.0, n - 1) * grid.h;
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < m; ++c)
          B(j, c) = (((c >> j) & 1) ? 1.0 : -1.0) / den;
      const Mat E = std::pow(grid.h, n) * wv * (B.transpose() * A * B);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c)
          if (E(r, c) != 0.0) trip.emplace_back(cell[r], cell[c], E(r, c));
    }
  }

  sys.full.resize(N, N);
  sys.full.setFromTriplets(trip.begin(), trip.end());

  sys.node_to_interior.assign(N, -1);
  for (long i = 0; i < N; ++i) {
    if (grid.cls[i] == NodeClass::Interior) {
      sys.node_to_interior[i] = static_cast<long>(sys.interior_nodes.size());
      sys.interior_nodes.push_back(i);
    } else if (grid.cls[i] != NodeClass::Exterior) {
      sys.data_nodes.push_back(i);
    }
  }

  const long ni = static_cast<long>(sys.interior_nodes.size());
  std::vector<Eigen::Triplet<double>> ti;
  ti.reserve(sys.full.nonZeros());
  for (int k = 0; k < sys.full.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.full, k); it; ++it) {
      const long r = sys.node_to_interior[it.row()];
      const long c = sys.node_to_interior[it.col()];
      if (r >= 0 && c >= 0) ti.emplace_back(r, c, it.value());
    }
  sys.interior.resize(ni, ni);
  sys.interior.setFromTriplets(ti.begin(), ti.end());
  return sys;
}

Field make_field(const Grid& g, const std::function<double(const Vec&)>& f,
                 const std::string& name) {
  Field u;
  u.grid = &g;
  u.name = name;
  u.values.resize(g.size());
  for (long i = 0; i < g.size(); ++i)
    u.values[i] =
        g.cls[i] == NodeClass::Exterior ? 0.0 : f(g.center(i));
  return u;
}

void for_cells_in_ball(const Grid& g, const Vec& center, double r,
                       const std::function<void(long)>& fn) {
  const int n = g.n;
  std::vector<int> lo(n), hi(n);
  for (int j = 0; j < n; ++j) {
    lo[j] = std::max(
        0, static_cast<int>(std::floor((center[j] - r - g.box.lo[j]) / g.h)));
    hi[j] = std::min(
        g.dims[j] - 1,
        static_cast<int>(std::floor((center[j] + r - g.box.lo[j]) / g.h)));
    if (lo[j] > hi[j]) return;
  }
  std::vector<int> I(lo);
  while (true) {
    long idx = 0;
    for (int j = n - 1; j >= 0; --j) idx = idx * g.dims[j] + I[j];
    double d2 = 0.0;
    for (int j = 0; j < n; ++j)
      d2 += sq(g.box.lo[j] + (I[j] + 0.5) * g.h - center[j]);
    if (d2 < r * r) fn(idx);
    int j = 0;
    for (; j < n; ++j) {
      if (I[j] < hi[j]) {
        ++I[j];
        break;
      }
      I[j] = lo[j];
    }
    if (j == n) break;
  }
}

double ball_mass_cells(const Grid& g, const Vec& center, double r) {
  double m = 0.0;
  for_cells_in_ball(g, center, r, [&](long idx) {
    if (g.cls[idx] != NodeClass::Exterior) m += g.cell_mass[idx];
  });
  return m;
}

double grad_norm(const Field& u, long idx) {
  const Grid& g = *u.grid;
  double s = 0.0;
  for (int ax = 0; ax < g.n; ++ax) {
    const long p = g.neighbor(idx, ax, +1);
    const long m = g.neighbor(idx, ax, -1);
    const bool okp = p >= 0 && g.cls[p] != NodeClass::Exterior;
    const bool okm = m >= 0 && g.cls[m] != NodeClass::Exterior;
    double d = 0.0;
    if (okp && okm)
      d = (u.values[p] - u.values[m]) / (2.0 * g.h);
    else if (okp)
      d = (u.values[p] - u.values[idx]) / g.h;
    else if (okm)
      d = (u.values[idx] - u.values[m]) / g.h;
    s += d * d;
  }
  return std::sqrt(s);
}

void Field::write_csv(const std::string& path) const {
  std::ofstream f(path);
  f << "node";
  for (int j = 0; j < grid->n; ++j) f << ",x" << j;
  f << "," << (name.empty() ? "value" : name) << "\n";
  for (long i = 0; i < grid->size(); ++i) {
    if (grid->cls[i] == NodeClass::Exterior) continue;
    const Vec c = grid->center(i);
    f << i;
    for (int j = 0; j < grid->n; ++j) f << "," << c[j];
    f << "," << values[i] << "\n";
  }
}

}  // namespace delab::disc

#include "delab/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "delab/solve.hpp"

namespace delab::spaces {

namespace {

using disc::for_cells_in_ball;
using disc::grad_norm;

bool is_live(const disc::Grid& g, long idx) {
  return g.cls[idx] != disc::NodeClass::Exterior;
}

}  // namespace

BoundaryFunction BoundaryFunction::from(
    const meas::BoundaryMeasure& mu, double spacing, const Box& within,
    const std::function<double(const Vec&)>& fn) {
  BoundaryFunction g;
  g.samples = mu.samples(spacing, within);
  g.values.resize(g.samples.size());
  for (size_t i = 0; i < g.samples.size(); ++i)
    g.values[i] = fn(g.samples[i].x);
  return g;
}

// ---------------------------------------------------------------------------
// Trace

double ball_average(const disc::Field& u, const Vec& center, double r) {
  const disc::Grid& g = *u.grid;
  double num = 0.0, den = 0.0;
  for_cells_in_ball(g, center, r, [&](long idx) {
    if (!is_live(g, idx)) return;
    num += g.cell_mass[idx] * u.values[idx];
    den += g.cell_mass[idx];
  });
  return den > 0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

std::optional<double> trace_at(const disc::Field& u, const Vec& x,
                               double scale) {
  const disc::Grid& g = *u.grid;
  if (scale <= 0) scale = 3.0 * g.h;
  try {
    const auto cs = geo::corkscrew(*g.dom, x, scale);
    const double v = ball_average(u, cs.point, cs.delta / 2.0);
    if (std::isnan(v)) return std::nullopt;
    return v;
  } catch (const HypothesisViolation&) {
    return std::nullopt;
  }
}

TraceField trace(const disc::Field& u, const dyadic::RegionMap& rm,
                 double band_lo, double band_hi) {
  const disc::Grid& g = *u.grid;
  const auto& tree = rm.tree();
  const auto& ws = rm.whitney();
  TraceField tf;
  tf.band_lo = band_lo > 0 ? band_lo : 2.0 * g.h;
  tf.band_hi = band_hi > 0 ? band_hi : 4.0 * g.h;
  const int ns = static_cast<int>(tree.points.size());
  tf.points = tree.points;
  tf.values = Vec::Zero(ns);
  tf.defined.assign(ns, 0);
  for (int s = 0; s < ns; ++s) {
    double acc = 0.0;
    int cnt = 0;
    for (int i : rm.cone(s)) {
      const Vec& X = ws.cubes[i].center;
      const double d = g.dom->distance(X);
      if (d < tf.band_lo || d > tf.band_hi) continue;
      // Nontangential aperture: keep the cone near its tip.
      if ((X - tree.points[s]).norm() > 2.0 * d) continue;
      const double v = ball_average(u, X, d / 2.0);
      if (std::isnan(v)) continue;
      acc += v;
      ++cnt;
    }
    if (cnt == 0) {
      // Cone empty at the band: fall back to a corkscrew ball at band scale.
      if (auto v = trace_at(u, tree.points[s], 0.75 * (tf.band_lo + tf.band_hi))) {
        tf.values[s] = *v;
        tf.defined[s] = 1;
        continue;
      }
      tf.skipped += 1;
      continue;
    }
    tf.values[s] = acc / cnt;
    tf.defined[s] = 1;
  }
  return tf;
}

void TraceField::write_csv(const std::string& path) const {
  std::ofstream f(path);
  f << "sample";
  for (int j = 0; j < points[0].size(); ++j) f << ",x" << j;
  f << ",value,defined\n";
  for (size_t i = 0; i < points.size(); ++i) {
    f << i;
    for (int j = 0; j < points[i].size(); ++j) f << "," << points[i][j];
    f << "," << values[i] << "," << int(defined[i]) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Extension

namespace {
double bump1(double t) {
  const double a = std::abs(t);
  if (a >= 1.0) return 0.0;
  return (1.0 - a) * (1.0 - a) * (1.0 + 2.0 * a);  // C^1 cubic
}
}  // namespace

ExtendedField extend(const BoundaryFunction& g, const geo::WhitneySet& ws,
                     const disc::Grid& grid) {
  const int n = grid.n;
  const long N = grid.size();
  Vec num = Vec::Zero(N), den = Vec::Zero(N);

  // Spatial index over boundary samples for the averages y_I.
  // (Brute force is fine at catalog sizes; keep it simple.)
  for (const auto& cube : ws.cubes) {
    // xi_I: nearest boundary sample to the cube center, ties by index.
    double best = 1e300;
    int xi = -1;
    for (size_t s = 0; s < g.samples.size(); ++s) {
      const double d = (g.samples[s].x - cube.center).norm();
      if (d < best) {
        best = d;
        xi = static_cast<int>(s);
      }
    }
    if (xi < 0) continue;
    const double rI = cube.side;  // l(I)
    double ynum = 0.0, yden = 0.0;
    for (size_t s = 0; s < g.samples.size(); ++s) {
      if ((g.samples[s].x - g.samples[xi].x).norm() >= rI) continue;
      ynum += g.samples[s].w * g.values[s];
      yden += g.samples[s].w;
    }
    const double yI = yden > 0 ? ynum / yden : g.values[xi];

    // Accumulate the bump over grid nodes in 2I.
    std::vector<int> lo(n), hi(n);
    bool empty = false;
    for (int j = 0; j < n; ++j) {
      lo[j] = std::max(0, static_cast<int>(std::floor(
                              (cube.center[j] - cube.side - grid.box.lo[j]) /
                              grid.h)));
      hi[j] = std::min(grid.dims[j] - 1,
                       static_cast<int>(std::floor(
                           (cube.center[j] + cube.side - grid.box.lo[j]) /
                           grid.h)));
      if (lo[j] > hi[j]) empty = true;
    }
    if (empty) continue;
    std::vector<int> I(lo);
    while (true) {
      long idx = 0;
      double phi = 1.0;
      for (int j = n - 1; j >= 0; --j) idx = idx * grid.dims[j] + I[j];
      for (int j = 0; j < n; ++j) {
        const double xj = grid.box.lo[j] + (I[j] + 0.5) * grid.h;
        phi *= bump1((xj - cube.center[j]) / cube.side);
      }
      if (phi > 0) {
        num[idx] += phi * yI;
        den[idx] += phi;
      }
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

  ExtendedField out;
  out.field.grid = &grid;
  out.field.name = "extension";
  out.field.values = Vec::Zero(N);
  out.covered.assign(N, 0);
  for (long i = 0; i < N; ++i) {
    if (grid.cls[i] == disc::NodeClass::Exterior) continue;
    if (den[i] > 0) {
      out.field.values[i] = num[i] / den[i];
      out.covered[i] = 1;
    } else {
      out.uncovered += 1;
    }
  }
  // Uncovered live nodes (the resolution collar) take the value of the
  // nearest boundary sample so that solves and traces stay finite.
  for (long i = 0; i < N; ++i) {
    if (grid.cls[i] == disc::NodeClass::Exterior || out.covered[i]) continue;
    const Vec c = grid.center(i);
    double bd = 1e300;
    int arg = -1;
    for (size_t s = 0; s < g.samples.size(); ++s) {
      const double d = (g.samples[s].x - c).norm();
      if (d < bd) {
        bd = d;
        arg = static_cast<int>(s);
      }
    }
    if (arg >= 0) out.field.values[i] = g.values[arg];
  }
  return out;
}

// ---------------------------------------------------------------------------
// H-norm

HNormQuote h_norm(const BoundaryFunction& g, const geo::Domain& dom,
                  const meas::BoundaryMeasure& mu, const meas::Weight& w,
                  double exclusion) {
  const int ns = static_cast<int>(g.samples.size());
  if (ns < 2) throw ConfigError("h_norm: need at least 2 boundary samples");

  // Pair-distance range.
  double r_hi = 0.0;
  for (int i = 1; i < ns; ++i)
    r_hi = std::max(r_hi, (g.samples[i].x - g.samples[0].x).norm());
  r_hi *= 2.0;

  // Per-sample radial tables for m and mu.
  const int nr = 48;
  std::vector<std::vector<double>> mu_tab(ns);
  std::vector<meas::RadialMassTable> m_tab;
  m_tab.reserve(ns);
  std::vector<double> radii(nr);
  const double r_lo = std::max(exclusion * 0.5, r_hi / 4096.0);
  for (int k = 0; k < nr; ++k)
    radii[k] = r_lo * std::pow(r_hi / r_lo, k / double(nr - 1));
  for (int i = 0; i < ns; ++i) {
    m_tab.emplace_back(dom, w, g.samples[i].x, r_hi,
                       dom.dim() <= 2 ? 192 : 96);
    auto& tab = mu_tab[i];
    tab.resize(nr);
    for (int k = 0; k < nr; ++k)
      tab[k] = mu.ball_mass(g.samples[i].x, radii[k]);
  }
  auto mu_at = [&](int i, double r) {
    const auto& tab = mu_tab[i];
    if (r <= radii.front()) return tab.front();
    if (r >= radii.back()) return tab.back();
    const auto it = std::lower_bound(radii.begin(), radii.end(), r);
    const int k = static_cast<int>(it - radii.begin());
    const double t = std::log(r / radii[k - 1]) / std::log(radii[k] / radii[k - 1]);
    if (tab[k - 1] <= 0) return tab[k] * t;
    return tab[k - 1] * std::pow(tab[k] / tab[k - 1], t);
  };

  HNormQuote q;
  q.excluded_width = exclusion;
  double acc = 0.0;
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j) {
      if (i == j) continue;
      const double r = (g.samples[i].x - g.samples[j].x).norm();
      if (r < exclusion) continue;
      const double m = m_tab[i].mass(r);
      const double mb = mu_at(i, r);
      if (m <= 0 || mb <= 0) continue;
      const double rho = m / (r * mb);
      acc += rho * rho * sq(g.values[i] - g.values[j]) / m *
             g.samples[i].w * g.samples[j].w;
      q.pairs += 1;
    }
  q.value = std::sqrt(acc);
  return q;
}

double w_seminorm_sq(const disc::LinearSystem& sys, const disc::Field& u) {
  return disc::energy(sys, u);
}

// ---------------------------------------------------------------------------
// Poincare ratios

namespace {

struct CellSet {
  std::vector<long> cells;
  double mass = 0.0;
};

PoincareResult ratio_over(const disc::Field& u, const CellSet& inner,
                          const CellSet& outer, double scale, bool subtract_mean,
                          const PoincareOptions& opt) {
  const disc::Grid& g = *u.grid;
  PoincareResult out;
  if (inner.mass <= 0 || outer.mass <= 0) {
    out.degenerate = true;
    return out;
  }
  double mean = 0.0;
  if (subtract_mean) {
    for (long i : inner.cells) mean += g.cell_mass[i] * u.values[i];
    mean /= inner.mass;
  }
  const double pk = opt.p * opt.k;
  double lhs = 0.0;
  for (long i : inner.cells)
    lhs += g.cell_mass[i] * std::pow(std::abs(u.values[i] - mean), pk);
  lhs = std::pow(lhs / inner.mass, 1.0 / pk);
  double rhs = 0.0;
  for (long i : outer.cells)
    rhs += g.cell_mass[i] * std::pow(grad_norm(u, i), opt.p);
  rhs = std::pow(rhs / outer.mass, 1.0 / opt.p);
  out.lhs = lhs;
  out.rhs = scale * rhs;
  if (out.rhs <= 1e-14 * std::max(1.0, std::abs(lhs))) {
    out.degenerate = true;
    return out;
  }
  out.ratio = out.lhs / out.rhs;
  return out;
}

CellSet collect_ball(const disc::Grid& g, const Vec& c, double r) {
  CellSet s;
  for_cells_in_ball(g, c, r, [&](long idx) {
    if (!is_live(g, idx)) return;
    s.cells.push_back(idx);
    s.mass += g.cell_mass[idx];
  });
  return s;
}

}  // namespace

PoincareResult poincare_interior(const disc::Field& u, const Vec& center,
                                 double r, const PoincareOptions& opt) {
  const CellSet b = collect_ball(*u.grid, center, r);
  return ratio_over(u, b, b, r, true, opt);
}

PoincareResult poincare_tent(const disc::Field& u, const dyadic::RegionMap& rm,
                             const dyadic::Tent& tent,
                             const PoincareOptions& opt) {
  const disc::Grid& g = *u.grid;
  const auto& ws = rm.whitney();
  CellSet s;
  for (int ci : tent.members) {
    const auto& cube = ws.cubes[ci];
    std::vector<int> lo(g.n), hi(g.n);
    bool empty = false;
    for (int j = 0; j < g.n; ++j) {
      lo[j] = std::max(0, static_cast<int>(std::ceil(
                              (cube.center[j] - 0.5 * cube.side -
                               g.box.lo[j]) / g.h - 0.5)));
      hi[j] = std::min(g.dims[j] - 1,
                       static_cast<int>(std::floor(
                           (cube.center[j] + 0.5 * cube.side - g.box.lo[j]) /
                               g.h - 0.5)));
      if (lo[j] > hi[j]) empty = true;
    }
    if (empty) continue;
    std::vector<int> I(lo);
    while (true) {
      long idx = 0;
      for (int j = g.n - 1; j >= 0; --j) idx = idx * g.dims[j] + I[j];
      if (is_live(g, idx)) {
        s.cells.push_back(idx);
        s.mass += g.cell_mass[idx];
      }
      int j = 0;
      for (; j < g.n; ++j) {
        if (I[j] < hi[j]) {
          ++I[j];
          break;
        }
        I[j] = lo[j];
      }
      if (j == g.n) break;
    }
  }
  std::sort(s.cells.begin(), s.cells.end());
  s.cells.erase(std::unique(s.cells.begin(), s.cells.end()), s.cells.end());
  s.mass = 0.0;
  for (long i : s.cells) s.mass += g.cell_mass[i];
  return ratio_over(u, s, s, std::max(tent.r_outer, 1e-300), true, opt);
}

PoincareResult poincare_boundary(const disc::Field& u, const Vec& x, double r,
                                 const PoincareOptions& opt) {
  const CellSet inner = collect_ball(*u.grid, x, r);
  const CellSet outer = collect_ball(*u.grid, x, opt.lambda * r);
  return ratio_over(u, inner, outer, r, false, opt);
}

// ---------------------------------------------------------------------------
// Function family

std::vector<std::pair<std::string, std::function<double(const Vec&)>>>
function_family(int dim) {
  std::vector<std::pair<std::string, std::function<double(const Vec&)>>> fam;
  fam.push_back({"constant", [](const Vec&) { return 1.0; }});
  fam.push_back({"ramp0", [](const Vec& x) { return x[0]; }});
  fam.push_back({"clip", [](const Vec& x) {
                   return std::clamp(2.0 * x[0] - 0.5, -1.0, 1.0);
                 }});
  fam.push_back({"abs", [](const Vec& x) { return std::abs(x[0] - 0.25); }});
  fam.push_back({"osc1", [](const Vec& x) { return std::cos(2.0 * M_PI * x[0]); }});
  fam.push_back({"osc3", [](const Vec& x) {
                   return 0.5 * std::sin(6.0 * M_PI * x[0]);
                 }});
  fam.push_back({"bump", [](const Vec& x) {
                   return std::exp(-8.0 * sq(x[0] - 0.1));
                 }});
  fam.push_back({"bump-narrow", [](const Vec& x) {
                   return std::exp(-32.0 * sq(x[0] + 0.2));
                 }});
  if (dim >= 2) {
    fam.push_back({"diag", [](const Vec& x) { return 0.5 * (x[0] + x[1]); }});
    fam.push_back({"radial", [](const Vec& x) {
                     return std::min(1.0, x.norm());
                   }});
  } else {
    fam.push_back({"ramp-neg", [](const Vec& x) { return -0.7 * x[0]; }});
    fam.push_back({"tent", [](const Vec& x) {
                     return std::max(0.0, 1.0 - 4.0 * std::abs(x[0] - 0.5));
                   }});
  }
  return fam;
}

}  // namespace delab::spaces

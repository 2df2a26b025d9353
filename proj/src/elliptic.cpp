#include "delab/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace delab::ell {

namespace {
constexpr double kTiny = 1e-300;

bool live(const disc::Grid& g, long i) {
  return g.cls[i] != disc::NodeClass::Exterior;
}

double ball_avg_field(const disc::Field& u, const Vec& c, double r) {
  const disc::Grid& g = *u.grid;
  double num = 0.0, den = 0.0;
  disc::for_cells_in_ball(g, c, r, [&](long i) {
    if (!live(g, i)) return;
    num += g.cell_mass[i] * u.values[i];
    den += g.cell_mass[i];
  });
  return den > 0 ? num / den : 0.0;
}
}  // namespace

Setup make_setup(geo::DomainPtr dom, meas::MeasurePtr mu, meas::WeightPtr w,
                 const disc::CoefficientField& coeff, Box box, int cells) {
  Setup s;
  s.dom = dom;
  s.mu = std::move(mu);
  s.weight = w;
  s.coeff = coeff;
  s.grid = disc::Grid::make(dom, w, std::move(box), cells);
  s.sys = disc::assemble(s.grid, coeff);
  return s;
}

disc::Field harmonic_measure(const Setup& s, const BoundarySet& E,
                             OuterPolicy policy,
                             const std::function<double(const Vec&)>* reference,
                             disc::SolveReport* rep) {
  const disc::Grid& g = s.grid;
  Vec data = Vec::Zero(g.size());
  for (long i = 0; i < g.size(); ++i) {
    if (g.cls[i] == disc::NodeClass::Pinned) {
      data[i] = E(g.dom->project(g.center(i))) ? 1.0 : 0.0;
    } else if (g.cls[i] == disc::NodeClass::Outer) {
      switch (policy) {
        case OuterPolicy::NearestBoundary:
          data[i] = E(g.dom->project(g.center(i))) ? 1.0 : 0.0;
          break;
        case OuterPolicy::Reference:
          if (!reference)
            throw ConfigError("harmonic_measure: reference policy needs a fn");
          data[i] = (*reference)(g.center(i));
          break;
        case OuterPolicy::Zero:
          data[i] = 0.0;
          break;
      }
    }
  }
  auto [u, r] = disc::solve_dirichlet(s.sys, data);
  u.name = "harmonic-measure";
  if (rep) *rep = r;
  return std::move(u);
}

disc::Field harmonic_measure_mollified(const Setup& s, const Vec& center,
                                       double radius, disc::SolveReport* rep) {
  const disc::Grid& g = s.grid;
  const double w = 2.0 * g.h;
  Vec data = Vec::Zero(g.size());
  for (long i = 0; i < g.size(); ++i) {
    if (g.cls[i] == disc::NodeClass::Pinned ||
        g.cls[i] == disc::NodeClass::Outer) {
      const Vec p = g.dom->project(g.center(i));
      const double d = (p - center).norm();
      data[i] = std::clamp((radius + w - d) / w, 0.0, 1.0);
    }
  }
  auto [u, r] = disc::solve_dirichlet(s.sys, data);
  u.name = "harmonic-measure-mollified";
  if (rep) *rep = r;
  return std::move(u);
}

// ---------------------------------------------------------------------------
// Green functions

double GreenField::gamma_at(double s) const {
  if (prof_s.empty()) return 0.0;
  if (s <= prof_s.front()) return prof_gamma.front();
  if (s >= prof_s.back()) return 0.0;
  const auto it = std::lower_bound(prof_s.begin(), prof_s.end(), s);
  const size_t k = it - prof_s.begin();
  const double t =
      std::log(s / prof_s[k - 1]) / std::log(prof_s[k] / prof_s[k - 1]);
  return prof_gamma[k - 1] * (1 - t) + prof_gamma[k] * t;
}

GreenField green(const Setup& s, const Vec& y, const GreenOptions& opt,
                 disc::SolveReport* rep) {
  const disc::Grid& g = s.grid;
  const double dy = g.dom->distance(y);
  if (dy < opt.min_delta_cells * g.h)
    throw ConfigError("green: pole too close to the boundary; need delta(y) >= " +
                      std::to_string(opt.min_delta_cells * g.h));
  GreenField gf;
  gf.pole = y;
  gf.rho = opt.rho > 0 ? opt.rho : std::min(2.0 * g.h, dy / 16.0);

  Vec rhs = Vec::Zero(g.size());
  double total = 0.0;
  disc::for_cells_in_ball(g, y, gf.rho + g.h, [&](long i) {
    if (!live(g, i)) return;
    const double m = g.cell_ball_mass(i, y, gf.rho);
    rhs[i] = m;
    total += m;
  });
  if (total <= 0) throw ConfigError("green: empty regularization ball");
  rhs /= total;

  Vec data = Vec::Zero(g.size());
  auto [u, r] = disc::solve_dirichlet(s.sys, data, &rhs);
  u.name = "green";
  if (rep) *rep = r;
  gf.field = std::move(u);

  // Profile gamma_y from a radial mass table around the pole.
  const meas::RadialMassTable tab(*g.dom, *g.weight, y, dy,
                                  g.n <= 2 ? 256 : 96);
  const int ns = 64;
  const double s_lo = gf.rho / 4.0;
  gf.prof_s.resize(ns);
  for (int k = 0; k < ns; ++k)
    gf.prof_s[k] = s_lo * std::pow(dy / s_lo, k / double(ns - 1));
  // gamma(s) = int_s^dy t / m(B(y,t)) dt  (log-grid trapezoid).
  const int fine = 512;
  std::vector<double> ts(fine + 1), integrand(fine + 1);
  for (int i = 0; i <= fine; ++i) {
    ts[i] = s_lo * std::pow(dy / s_lo, i / double(fine));
    const double m = std::max(tab.mass(ts[i]), kTiny);
    integrand[i] = ts[i] * ts[i] / m;  // t^2/m per dlog t
  }
  std::vector<double> cum(fine + 1, 0.0);  // integral from ts[i] to dy
  for (int i = fine - 1; i >= 0; --i) {
    const double dlog = std::log(ts[i + 1] / ts[i]);
    cum[i] = cum[i + 1] + 0.5 * (integrand[i] + integrand[i + 1]) * dlog;
  }
  gf.prof_gamma.resize(ns);
  for (int k = 0; k < ns; ++k) {
    const int i = std::min(
        fine, static_cast<int>(std::lround(std::log(gf.prof_s[k] / s_lo) /
                                           std::log(dy / s_lo) * fine)));
    gf.prof_gamma[k] = cum[i];
  }
  return gf;
}

double green_symmetry(const Setup& s, const Vec& y1, const Vec& y2) {
  if ((y1 - y2).norm() < 1e-15) return 0.0;
  GreenOptions opt;
  const GreenField g1 = green(s, y1, opt);

  const Setup* sys2 = &s;
  Setup transposed;
  if (!s.coeff.symmetric) {
    transposed.dom = s.dom;
    transposed.mu = s.mu;
    transposed.weight = s.weight;
    disc::CoefficientField ct = s.coeff;
    auto base = s.coeff.full;
    ct.full = [base](const Vec& X) { return Mat(base(X).transpose()); };
    transposed.coeff = ct;
    transposed.grid = s.grid;
    transposed.sys = disc::assemble(transposed.grid, ct);
    sys2 = &transposed;
  }
  const GreenField g2 = green(*sys2, y2, opt);

  // Discrete adjoint identity: the rho-average of g(., y1) at y2 equals the
  // rho-average of gT(., y2) at y1.
  const double a12 = ball_avg_field(g1.field, y2, g2.rho);
  const double a21 = ball_avg_field(g2.field, y1, g1.rho);
  const double scale = std::max({a12, a21, kTiny});
  return std::abs(a12 - a21) / scale;
}

disc::Field representation(const Setup& s,
                           const std::function<double(const Vec&)>& f,
                           const BoundarySet& support) {
  const disc::Grid& g = s.grid;
  disc::Field acc;
  acc.grid = &g;
  acc.name = "representation";
  acc.values = Vec::Zero(g.size());
  GreenOptions opt;
  for (long i = 0; i < g.size(); ++i) {
    if (!live(g, i) || g.cls[i] != disc::NodeClass::Interior) continue;
    const Vec c = g.center(i);
    if (!support(c)) continue;
    const double fi = f(c);
    if (fi == 0.0) continue;
    GreenOptions cell_opt;
    cell_opt.rho = 0.25 * g.h;  // single-cell regularization
    const GreenField gf = green(s, c, cell_opt);
    acc.values += (fi * g.cell_mass[i]) * gf.field.values;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Verifier machinery

std::string estimate_name(Estimate e) {
  switch (e) {
    case Estimate::MoserBoundary: return "moser_boundary";
    case Estimate::HolderBoundary: return "holder_boundary";
    case Estimate::Harnack: return "harnack";
    case Estimate::CaccioppoliBoundary: return "caccioppoli_boundary";
    case Estimate::MaxPrinciple: return "max_principle";
    case Estimate::Nondegeneracy: return "nondegeneracy";
    case Estimate::HmDoubling: return "hm_doubling";
    case Estimate::GreenVsHm: return "green_vs_hm";
    case Estimate::ChangeOfPole: return "change_of_pole";
    case Estimate::LocalComparison: return "local_comparison";
  }
  return "?";
}

std::string estimate_tag(Estimate e) {
  switch (e) {
    case Estimate::MoserBoundary: return "Moser2";
    case Estimate::HolderBoundary: return "Holder2";
    case Estimate::Harnack: return "Harnack1";
    case Estimate::CaccioppoliBoundary: return "Caccio4";
    case Estimate::MaxPrinciple: return "lMP6";
    case Estimate::Nondegeneracy: return "tcp33a";
    case Estimate::HmDoubling: return "dphm1";
    case Estimate::GreenVsHm: return "tcp18";
    case Estimate::ChangeOfPole: return "CP17";
    case Estimate::LocalComparison: return "CP26";
  }
  return "?";
}

std::vector<BallSample> sample_boundary_balls(const Setup& s, int count,
                                              double clearance_factor,
                                              uint64_t seed,
                                              double r_min_cells) {
  const disc::Grid& g = s.grid;
  std::mt19937_64 rng(seed);
  const double spacing = g.box.side() / 64.0;
  auto pts = s.dom->boundary_points(spacing, g.box);
  if (pts.empty())
    throw ConfigError("sample_boundary_balls: no boundary points");
  const double r_min = r_min_cells * g.h;
  // Per-point admissible radius: the clearance-scaled room inside the box.
  std::vector<std::pair<Vec, double>> room;
  for (const auto& x : pts) {
    double rmax = 1e300;
    for (int j = 0; j < g.n; ++j)
      rmax = std::min(rmax, std::min(x[j] - g.box.lo[j],
                                     g.box.hi[j] - x[j]) / clearance_factor);
    if (s.dom->bounded())
      rmax = std::min(rmax, s.dom->boundary_diameter() / clearance_factor);
    if (rmax >= r_min) room.push_back({x, rmax});
  }
  if (room.empty())
    throw ConfigError(
        "sample_boundary_balls: no admissible balls at clearance " +
        std::to_string(clearance_factor) + " and radius >= " +
        std::to_string(r_min));
  std::uniform_int_distribution<size_t> pick(0, room.size() - 1);
  std::uniform_real_distribution<double> uf(0.0, 1.0);
  std::vector<BallSample> out;
  for (int t = 0; t < count; ++t) {
    const auto& [x, rmax] = room[pick(rng)];
    const double lo = std::max(r_min, rmax / 6.0);
    const double r = lo * std::pow(rmax / lo, uf(rng));
    out.push_back({x, r});
  }
  return out;
}

namespace {

std::string vec_str(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (int j = 0; j < v.size(); ++j) os << (j ? "," : "") << v[j];
  os << ")";
  return os.str();
}

// Oscillation (max - min) of u over live cells of B(c, r).
std::pair<double, double> range_over_ball(const disc::Field& u, const Vec& c,
                                          double r) {
  const disc::Grid& g = *u.grid;
  double lo = 1e300, hi = -1e300;
  disc::for_cells_in_ball(g, c, r, [&](long i) {
    if (!live(g, i)) return;
    lo = std::min(lo, u.values[i]);
    hi = std::max(hi, u.values[i]);
  });
  if (lo > hi) return {0.0, 0.0};
  return {lo, hi};
}

BoundarySet outside_ball(const Vec& c, double r) {
  return [c, r](const Vec& p) { return (p - c).norm() >= r; };
}
BoundarySet inside_ball(const Vec& c, double r) {
  return [c, r](const Vec& p) { return (p - c).norm() < r; };
}

}  // namespace

EstimateVerdict verify(const Setup& s, Estimate est,
                       const VerifyOptions& opt) {
  const disc::Grid& g = s.grid;
  EstimateVerdict v;
  v.estimate = estimate_name(est);
  v.tag = estimate_tag(est);

  switch (est) {
    case Estimate::MaxPrinciple: {
      std::mt19937_64 rng(opt.seed);
      std::uniform_real_distribution<double> ud(0.0, 1.0);
      long violations = 0;
      for (int t = 0; t < opt.max_principle_trials; ++t) {
        Vec data = Vec::Zero(g.size());
        for (long i : s.sys.data_nodes) data[i] = ud(rng);
        auto [u, rep] = disc::solve_dirichlet(s.sys, data);
        violations += disc::max_principle_violations(s.sys, u, data);
        ++v.samples;
      }
      v.worst_constant = static_cast<double>(violations);
      v.pass = violations == 0;
      if (!s.sys.m_matrix)
        v.sample_log.push_back("full coefficients: audited, not guaranteed");
      return v;
    }

    case Estimate::Harnack: {
      // Positive solutions: harmonic measures of two far half-boundaries.
      auto balls = sample_boundary_balls(s, opt.n_balls, 4.0, opt.seed);
      double worst = 0.0;
      for (const auto& b : balls) {
        const auto cs = geo::corkscrew(*s.dom, b.center, b.radius);
        const double rr = cs.delta / 2.5;  // 2B(center, rr) inside Omega
        const disc::Field u =
            harmonic_measure(s, inside_ball(b.center, b.radius));
        auto [lo, hi] = range_over_ball(u, cs.point, rr);
        if (lo <= 1e-9) continue;  // field too small to resolve
        worst = std::max(worst, hi / lo);
        ++v.samples;
        v.sample_log.push_back("ball " + vec_str(cs.point) + " r=" +
                               std::to_string(rr) + " ratio=" +
                               std::to_string(hi / lo));
      }
      v.worst_constant = worst;
      v.pass = v.samples > 0 && worst < opt.constant_cap;
      return v;
    }

    case Estimate::MoserBoundary:
    case Estimate::CaccioppoliBoundary: {
      auto balls = sample_boundary_balls(s, opt.n_balls, 6.0, opt.seed);
      double worst = 0.0;
      for (const auto& b : balls) {
        // Zero trace on 4B: the harmonic measure of the complement.
        const disc::Field u =
            harmonic_measure(s, outside_ball(b.center, 4.0 * b.radius));
        if (est == Estimate::MoserBoundary) {
          auto [lo, hi] = range_over_ball(u, b.center, b.radius);
          (void)lo;
          double avg = 0.0, mass = 0.0;
          disc::for_cells_in_ball(g, b.center, 2.0 * b.radius, [&](long i) {
            if (!live(g, i)) return;
            avg += g.cell_mass[i] * std::abs(u.values[i]);
            mass += g.cell_mass[i];
          });
          if (mass <= 0 || avg <= 0) continue;
          const double c = hi / (avg / mass);
          worst = std::max(worst, c);
          ++v.samples;
          v.sample_log.push_back("B(" + vec_str(b.center) + "," +
                                 std::to_string(b.radius) + ") C=" +
                                 std::to_string(c));
        } else {
          double lhs = 0.0, rhs = 0.0;
          disc::for_cells_in_ball(g, b.center, b.radius, [&](long i) {
            if (!live(g, i)) return;
            lhs += g.cell_mass[i] * sq(disc::grad_norm(u, i));
          });
          disc::for_cells_in_ball(g, b.center, 2.0 * b.radius, [&](long i) {
            if (!live(g, i)) return;
            rhs += g.cell_mass[i] * sq(u.values[i]);
          });
          if (rhs <= 0) continue;
          const double c = lhs * sq(b.radius) / rhs;
          worst = std::max(worst, c);
          ++v.samples;
          v.sample_log.push_back("B(" + vec_str(b.center) + "," +
                                 std::to_string(b.radius) + ") C=" +
                                 std::to_string(c));
        }
      }
      v.worst_constant = worst;
      v.pass = v.samples > 0 && worst < opt.constant_cap;
      return v;
    }

    case Estimate::HolderBoundary: {
      auto balls = sample_boundary_balls(s, opt.n_balls, 6.0, opt.seed);
      double worst_c = 0.0;
      std::vector<double> slopes;
      for (const auto& b : balls) {
        const disc::Field u =
            harmonic_measure(s, outside_ball(b.center, 2.0 * b.radius));
        // Oscillation decay at dyadic sub-scales.
        std::vector<double> ss, osc;
        for (double f : {1.0, 0.5, 0.25, 0.125}) {
          const double sr = f * b.radius;
          if (sr < 4.0 * g.h) break;
          auto [lo, hi] = range_over_ball(u, b.center, sr);
          if (hi - lo <= 0) break;
          ss.push_back(sr);
          osc.push_back(hi - lo);
        }
        if (ss.size() < 3) continue;
        const auto fit = fit_loglog(ss, osc);
        slopes.push_back(fit.slope);
        // Normalized constant from the zero-trace oscillation bound.
        double l2 = 0.0, mass = 0.0;
        disc::for_cells_in_ball(g, b.center, b.radius, [&](long i) {
          if (!live(g, i)) return;
          l2 += g.cell_mass[i] * sq(u.values[i]);
          mass += g.cell_mass[i];
        });
        const double rms = mass > 0 ? std::sqrt(l2 / mass) : 0.0;
        if (rms > 0)
          for (size_t k = 0; k < ss.size(); ++k)
            worst_c = std::max(worst_c,
                               osc[k] / (std::pow(ss[k] / b.radius,
                                                  std::max(fit.slope, 0.0)) *
                                         rms));
        ++v.samples;
        v.sample_log.push_back("B(" + vec_str(b.center) + "," +
                               std::to_string(b.radius) + ") alpha=" +
                               std::to_string(fit.slope));
      }
      if (!slopes.empty())
        v.exponent = *std::min_element(slopes.begin(), slopes.end());
      v.worst_constant = worst_c;
      v.pass = v.samples > 0 && v.exponent > 0.0;
      return v;
    }

    case Estimate::Nondegeneracy: {
      auto balls = sample_boundary_balls(s, opt.n_balls, 2.0 * opt.alpha,
                                         opt.seed);
      double worst = 0.0;
      for (const auto& b : balls) {
        const disc::Field u =
            harmonic_measure(s, inside_ball(b.center, b.radius));
        double lo = 1e300;
        disc::for_cells_in_ball(g, b.center, b.radius / opt.alpha, [&](long i) {
          if (!live(g, i) || g.cls[i] != disc::NodeClass::Interior) return;
          lo = std::min(lo, u.values[i]);
        });
        if (lo >= 1e300) continue;
        if (lo <= 0) {
          worst = opt.constant_cap;
          ++v.samples;
          continue;
        }
        worst = std::max(worst, 1.0 / lo);
        ++v.samples;
        v.sample_log.push_back("B(" + vec_str(b.center) + "," +
                               std::to_string(b.radius) + ") C=" +
                               std::to_string(1.0 / lo));
      }
      v.worst_constant = worst;
      v.pass = v.samples > 0 && worst < opt.constant_cap;
      return v;
    }

    case Estimate::HmDoubling: {
      auto balls = sample_boundary_balls(s, opt.n_balls, 4.0 * opt.alpha,
                                         opt.seed);
      double worst = 0.0;
      for (const auto& b : balls) {
        const disc::Field u1 =
            harmonic_measure(s, inside_ball(b.center, b.radius));
        const disc::Field u2 =
            harmonic_measure(s, inside_ball(b.center, 2.0 * b.radius));
        int counted = 0;
        for (long i = 0; i < g.size(); ++i) {
          if (g.cls[i] != disc::NodeClass::Interior) continue;
          const Vec c = g.center(i);
          if ((c - b.center).norm() <= 2.0 * opt.alpha * b.radius) continue;
          if (u1.values[i] <= 1e-7 || u2.values[i] <= 1e-7) continue;
          worst = std::max(worst, u2.values[i] / u1.values[i]);
          ++counted;
        }
        if (counted > 0) {
          ++v.samples;
          v.sample_log.push_back("B(" + vec_str(b.center) + "," +
                                 std::to_string(b.radius) + ") nodes=" +
                                 std::to_string(counted));
        }
      }
      v.worst_constant = worst;
      v.pass = v.samples > 0 && worst < opt.constant_cap;
      return v;
    }

    case Estimate::GreenVsHm: {
      auto balls = sample_boundary_balls(s, opt.n_balls, 4.0, opt.seed, 20.0);
      double worst = 0.0;
      for (const auto& b : balls) {
        const auto cs = geo::corkscrew(*s.dom, b.center, b.radius);
        GreenOptions go;
        GreenField gf;
        try {
          gf = green(s, cs.point, go);
        } catch (const ConfigError&) {
          continue;
        }
        const disc::Field om =
            harmonic_measure(s, inside_ball(b.center, b.radius));
        const double mB = disc::ball_mass_cells(g, b.center, b.radius);
        if (mB <= 0) continue;
        double rmax = 0.0, rmin = 1e300;
        int counted = 0;
        for (long i = 0; i < g.size(); ++i) {
          if (g.cls[i] != disc::NodeClass::Interior) continue;
          const Vec c = g.center(i);
          if ((c - b.center).norm() <= 2.0 * b.radius) continue;
          const double gv = gf.field.values[i] * mB / sq(b.radius);
          const double ov = om.values[i];
          if (ov <= 1e-7 || gv <= 1e-9) continue;
          const double ratio = ov / gv;
          rmax = std::max(rmax, ratio);
          rmin = std::min(rmin, ratio);
          ++counted;
        }
        if (counted == 0) continue;
        worst = std::max({worst, rmax, 1.0 / rmin});
        ++v.samples;
        v.sample_log.push_back("B(" + vec_str(b.center) + "," +
                               std::to_string(b.radius) + ") C=" +
                               std::to_string(std::max(rmax, 1.0 / rmin)));
      }
      v.worst_constant = worst;
      v.pass = v.samples > 0 && worst < opt.constant_cap;
      return v;
    }

    case Estimate::ChangeOfPole: {
      auto balls = sample_boundary_balls(s, opt.n_balls, 4.0, opt.seed);
      double worst = 0.0;
      for (const auto& b : balls) {
        const auto cs = geo::corkscrew(*s.dom, b.center, b.radius);
        // E, F: the two half-ball pieces split along the first axis.
        const Vec c0 = b.center;
        auto E = [c0, &b](const Vec& p) {
          return (p - c0).norm() < b.radius && p[0] <= c0[0];
        };
        auto F = [c0, &b](const Vec& p) {
          return (p - c0).norm() < b.radius && p[0] > c0[0];
        };
        const disc::Field uE = harmonic_measure(s, E);
        const disc::Field uF = harmonic_measure(s, F);
        const double refE = ball_avg_field(uE, cs.point, cs.delta / 2.0);
        const double refF = ball_avg_field(uF, cs.point, cs.delta / 2.0);
        if (refE <= 1e-7 || refF <= 1e-7) continue;
        const double ref = refE / refF;
        double rmax = 0.0, rmin = 1e300;
        int counted = 0;
        for (long i = 0; i < g.size(); ++i) {
          if (g.cls[i] != disc::NodeClass::Interior) continue;
          const Vec c = g.center(i);
          if ((c - b.center).norm() <= 2.0 * b.radius) continue;
          if (uE.values[i] <= 1e-7 || uF.values[i] <= 1e-7) continue;
          const double k = (uE.values[i] / uF.values[i]) / ref;
          rmax = std::max(rmax, k);
          rmin = std::min(rmin, k);
          ++counted;
        }
        if (counted == 0) continue;
        worst = std::max({worst, rmax, 1.0 / rmin});
        ++v.samples;
        v.sample_log.push_back("B(" + vec_str(b.center) + "," +
                               std::to_string(b.radius) + ") C=" +
                               std::to_string(std::max(rmax, 1.0 / rmin)));
      }
      v.worst_constant = worst;
      v.pass = v.samples > 0 && worst < opt.constant_cap;
      return v;
    }

    case Estimate::LocalComparison: {
      const int K = opt.comparison_K;
      auto balls = sample_boundary_balls(s, opt.n_balls, 2.0 * K, opt.seed);
      double worst = 0.0;
      for (const auto& b : balls) {
        const auto cs = geo::corkscrew(*s.dom, b.center, b.radius);
        // Two positive solutions with zero trace on KB: harmonic measures of
        // disjoint far pieces.
        const double KR = K * b.radius;
        auto E1 = [&](const Vec& p) {
          return (p - b.center).norm() >= KR && p[0] <= b.center[0];
        };
        auto E2 = [&](const Vec& p) {
          return (p - b.center).norm() >= KR && p[0] > b.center[0];
        };
        const disc::Field u = harmonic_measure(s, E1);
        const disc::Field w = harmonic_measure(s, E2);
        const double u0 = ball_avg_field(u, cs.point, cs.delta / 2.0);
        const double w0 = ball_avg_field(w, cs.point, cs.delta / 2.0);
        if (u0 <= 1e-7 || w0 <= 1e-7) continue;
        double rmax = 0.0, rmin = 1e300;
        int counted = 0;
        disc::for_cells_in_ball(g, b.center, b.radius, [&](long i) {
          if (g.cls[i] != disc::NodeClass::Interior) return;
          if (u.values[i] <= 1e-7 || w.values[i] <= 1e-7) return;
          const double k = (u.values[i] / w.values[i]) / (u0 / w0);
          rmax = std::max(rmax, k);
          rmin = std::min(rmin, k);
          ++counted;
        });
        if (counted == 0) continue;
        worst = std::max({worst, rmax, 1.0 / rmin});
        ++v.samples;
        v.sample_log.push_back("B(" + vec_str(b.center) + "," +
                               std::to_string(b.radius) + ") K=" +
                               std::to_string(K) + " C=" +
                               std::to_string(std::max(rmax, 1.0 / rmin)));
      }
      v.exponent = K;
      v.worst_constant = worst;
      v.pass = v.samples > 0 && worst < opt.constant_cap;
      return v;
    }
  }
  return v;
}

EstimateVerdict verify_refined(const Setup& coarse, const Setup& fine,
                               Estimate est, const VerifyOptions& opt) {
  EstimateVerdict a = verify(coarse, est, opt);
  EstimateVerdict b = verify(fine, est, opt);
  EstimateVerdict out = b;
  out.samples = a.samples + b.samples;
  const double lo = std::min(a.worst_constant, b.worst_constant);
  const double hi = std::max(a.worst_constant, b.worst_constant);
  out.stable = lo <= 0 ? hi <= 0 : hi / lo < opt.stability_cap;
  out.pass = a.pass && b.pass && out.stable;
  out.sample_log.insert(out.sample_log.end(), a.sample_log.begin(),
                        a.sample_log.end());
  return out;
}

}  // namespace delab::ell

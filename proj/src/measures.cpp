#include "delab/measures.hpp"

#include <algorithm>
#include <cmath>

namespace delab::meas {

namespace {
double unit_ball_volume(int d) {
  return std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}
}  // namespace

// ---------------------------------------------------------------------------
// LebesgueOnFlat

LebesgueOnFlat::LebesgueOnFlat(int d, int n) : d_(d), n_(n) {
  unit_ball_ = unit_ball_volume(d);
}

double LebesgueOnFlat::ball_mass(const Vec& x, double r) const {
  double off2 = 0.0;
  for (int j = d_; j < n_; ++j) off2 += sq(x[j]);
  if (off2 >= r * r) return 0.0;
  return unit_ball_ * std::pow(r * r - off2, d_ / 2.0);
}

std::vector<WeightedPoint> LebesgueOnFlat::samples(double spacing,
                                                   const Box& within) const {
  std::vector<WeightedPoint> out;
  const double w = std::pow(spacing, d_);
  if (d_ == 1) {
    for (double x = within.lo[0]; x <= within.hi[0] + 1e-12; x += spacing) {
      Vec p = Vec::Zero(n_);
      p[0] = x;
      out.push_back({p, w});
    }
  } else if (d_ == 2) {
    for (double x = within.lo[0]; x <= within.hi[0] + 1e-12; x += spacing)
      for (double y = within.lo[1]; y <= within.hi[1] + 1e-12; y += spacing) {
        Vec p = Vec::Zero(n_);
        p[0] = x;
        p[1] = y;
        out.push_back({p, w});
      }
  } else {
    throw ConfigError("lebesgue sampler: d <= 2 supported");
  }
  return out;
}

// ---------------------------------------------------------------------------
// CantorMeasure

double CantorMeasure::interval_mass(double a, double b) const {
  struct Rec {
    static double go(double a, double b, double lo, double hi, int level) {
      if (b <= lo || a >= hi) return 0.0;
      if (a <= lo && b >= hi) return 1.0;
      if (level <= 0) {
        const double ov = std::min(b, hi) - std::max(a, lo);
        return std::max(0.0, ov) / (hi - lo);
      }
      const double w = (hi - lo) / 3.0;
      return 0.5 * (go(a, b, lo, lo + w, level - 1) +
                    go(a, b, hi - w, hi, level - 1));
    }
  };
  return Rec::go(a, b, 0.0, 1.0, depth_);
}

double CantorMeasure::ball_mass(const Vec& x, double r) const {
  const double off = x.size() > 1 ? x[1] : 0.0;
  if (std::abs(off) >= r) return 0.0;
  const double w = std::sqrt(r * r - off * off);
  return interval_mass(x[0] - w, x[0] + w);
}

std::vector<WeightedPoint> CantorMeasure::samples(double spacing,
                                                  const Box& within) const {
  int k = 0;
  double w = 1.0;
  while (w > spacing && k < 24) {
    w /= 3.0;
    ++k;
  }
  std::vector<std::pair<double, double>> iv = {{0.0, 1.0}};
  for (int l = 0; l < k; ++l) {
    std::vector<std::pair<double, double>> nxt;
    nxt.reserve(2 * iv.size());
    for (auto [a, b] : iv) {
      const double t = (b - a) / 3.0;
      nxt.push_back({a, a + t});
      nxt.push_back({b - t, b});
    }
    iv = std::move(nxt);
  }
  const double mass = 0.5 * std::pow(0.5, k);  // half the interval mass per endpoint
  std::vector<WeightedPoint> out;
  for (auto [a, b] : iv)
    for (double x : {a, b}) {
      Vec p(2);
      p << x, 0.0;
      if (within.contains(p, 1e-12)) out.push_back({p, mass});
    }
  return out;
}

// ---------------------------------------------------------------------------
// RieszProduct

RieszProduct::RieszProduct(double a, int J, int lacunarity)
    : a_(a), J_(J), q_(lacunarity) {
  const int K = 1 << 16;
  table_.assign(K + 1, 0.0);
  double acc = 0.0;
  for (int i = 0; i < K; ++i) {
    acc += density((i + 0.5) / K) / K;
    table_[i + 1] = acc;
  }
  // The truncated product integrates to 1 exactly; normalize the table so
  // the discrete total matches.
  const double total = table_.back();
  for (auto& v : table_) v /= total;
}

double RieszProduct::density(double x) const {
  double f = 1.0;
  double freq = 1.0;
  for (int j = 1; j <= J_; ++j) {
    freq *= q_;
    f *= 1.0 + a_ * std::cos(2.0 * M_PI * freq * x);
  }
  return f;
}

double RieszProduct::cdf(double x) const {
  const double per = std::floor(x);
  const double frac = x - per;
  const int K = static_cast<int>(table_.size()) - 1;
  const double xi = frac * K;
  const int i = std::min(K - 1, static_cast<int>(xi));
  const double t = xi - i;
  return per + table_[i] * (1 - t) + table_[i + 1] * t;
}

double RieszProduct::ball_mass(const Vec& x, double r) const {
  const double off = x.size() > 1 ? x[1] : 0.0;
  if (std::abs(off) >= r) return 0.0;
  const double w = std::sqrt(r * r - off * off);
  return cdf(x[0] + w) - cdf(x[0] - w);
}

std::vector<WeightedPoint> RieszProduct::samples(double spacing,
                                                 const Box& within) const {
  std::vector<WeightedPoint> out;
  const int n = std::max(2, static_cast<int>(std::floor(
                                (within.hi[0] - within.lo[0]) / spacing)));
  for (int i = 0; i <= n; ++i) {
    const double x = within.lo[0] + (within.hi[0] - within.lo[0]) * i / n;
    const double a = x - 0.5 * spacing, b = x + 0.5 * spacing;
    Vec p = Vec::Zero(within.dim());
    p[0] = x;
    out.push_back({p, cdf(b) - cdf(a)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// SphereAndFlat

double SphereAndFlat::flat_mass(const Vec& x, double r) const {
  const double rho2 = sq(x[1]) + sq(x[2]);
  if (rho2 >= r * r) return 0.0;
  const double w = std::sqrt(r * r - rho2);
  const double a = std::max(-R_, x[0] - w), b = std::min(R_, x[0] + w);
  return std::max(0.0, b - a);
}

double SphereAndFlat::sphere_mass(const Vec& x, double r) const {
  // Cap condition |p - x| < r on the sphere reads p . x > c.
  const double c = (R_ * R_ + x.squaredNorm() - r * r) / 2.0;
  const double rho_x = std::hypot(x[1], x[2]);
  const int N = 1024;
  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    const double th = -M_PI_2 + M_PI * (i + 0.5) / N;
    const double axial = R_ * x[0] * std::sin(th);
    const double amp = R_ * rho_x * std::cos(th);
    double len;
    if (amp < 1e-300) {
      len = axial > c ? 2.0 * M_PI : 0.0;
    } else {
      const double q = (c - axial) / amp;
      if (q >= 1.0)
        len = 0.0;
      else if (q <= -1.0)
        len = 2.0 * M_PI;
      else
        len = 2.0 * std::acos(q);
    }
    acc += len * (M_PI / N);
  }
  return R_ * acc;
}

double SphereAndFlat::ball_mass(const Vec& x, double r) const {
  return flat_mass(x, r) + sphere_mass(x, r);
}

std::vector<WeightedPoint> SphereAndFlat::samples(double spacing,
                                                  const Box& within) const {
  std::vector<WeightedPoint> out;
  // Uniform lattice in (theta, phi) carries the weighted sphere measure.
  const int nth = std::max(8, static_cast<int>(std::ceil(M_PI * R_ / spacing)));
  const int nph = 2 * nth;
  const double wcell = R_ * (M_PI / nth) * (2.0 * M_PI / nph);
  for (int i = 0; i < nth; ++i) {
    const double th = -M_PI_2 + M_PI * (i + 0.5) / nth;
    for (int j = 0; j < nph; ++j) {
      const double ph = 2.0 * M_PI * (j + 0.5) / nph;
      Vec p(3);
      p << R_ * std::sin(th), R_ * std::cos(th) * std::cos(ph),
          R_ * std::cos(th) * std::sin(ph);
      if (within.contains(p, 1e-12)) out.push_back({p, wcell});
    }
  }
  for (double s = -R_ + 0.5 * spacing; s < R_; s += spacing) {
    Vec p(3);
    p << s, 0.0, 0.0;
    if (within.contains(p, 1e-12)) out.push_back({p, spacing});
  }
  return out;
}

// ---------------------------------------------------------------------------
// PolylineMeasure

double PolylineMeasure::ball_mass(const Vec& x, double r) const {
  const auto& poly = dom_->boundary_polyline();
  const Eigen::Vector2d c(x[0], x[1]);
  double acc = 0.0;
  for (size_t i = 0; i + 1 < poly.size(); ++i) {
    if (std::isnan(poly[i][0]) || std::isnan(poly[i + 1][0])) continue;
    const Eigen::Vector2d a = poly[i], d = poly[i + 1] - poly[i];
    const double A = d.squaredNorm();
    if (A < 1e-300) continue;
    const double B = 2.0 * d.dot(a - c);
    const double C = (a - c).squaredNorm() - r * r;
    const double disc = B * B - 4 * A * C;
    if (disc <= 0) continue;
    const double s = std::sqrt(disc);
    const double t0 = std::clamp((-B - s) / (2 * A), 0.0, 1.0);
    const double t1 = std::clamp((-B + s) / (2 * A), 0.0, 1.0);
    acc += (t1 - t0) * std::sqrt(A);
  }
  return acc;
}

std::vector<WeightedPoint> PolylineMeasure::samples(double spacing,
                                                    const Box& within) const {
  std::vector<WeightedPoint> out;
  for (const Vec& p : dom_->boundary_points(spacing, within))
    out.push_back({p, spacing});
  return out;
}

// ---------------------------------------------------------------------------
// Weights

PowerDistance::PowerDistance(geo::DomainPtr dom, double gamma, bool strict)
    : dom_(std::move(dom)), gamma_(gamma) {
  if (strict) check_range(*dom_, gamma_);
}

void PowerDistance::check_range(const geo::Domain& dom, double gamma) {
  const double n = dom.dim(), d = dom.weight_dim();
  if (!(gamma > n - d - 2.0 && gamma < n - d))
    throw ConfigError("power-distance weight: gamma = " + std::to_string(gamma) +
                      " outside the admissible range (" +
                      std::to_string(n - d - 2.0) + ", " +
                      std::to_string(n - d) + ")");
}

double PowerDistance::eval(const Vec& X, double clamp) const {
  return std::pow(std::max(dom_->weight_distance(X), clamp), -gamma_);
}

A2Product::A2Product(geo::DomainPtr dom, int d, double beta, double gamma,
                     bool strict)
    : dom_(std::move(dom)), d_(d), beta_(beta), gamma_(gamma) {
  if (std::abs(beta) >= d)
    throw ConfigError("a2-product: |beta| must be < d for an A2 factor");
  if (strict) PowerDistance::check_range(*dom_, gamma_);
}

double A2Product::eval(const Vec& X, double clamp) const {
  const double tangential = std::max(X.head(d_).norm(), clamp);
  return std::pow(tangential, beta_) *
         std::pow(std::max(dom_->weight_distance(X), clamp), -gamma_);
}

double BoundaryMassWeight::eval(const Vec& X, double clamp) const {
  const double d = std::max(dom_->distance(X), clamp);
  const int n = dom_->dim();
  return std::pow(d, 1.0 - n) * std::max(mu_->ball_mass(X, 2.0 * d), 1e-300);
}

// ---------------------------------------------------------------------------
// m_ball and radial tables

namespace {

double midpoint_mass(const geo::Domain& dom, const Weight& w, const Vec& x,
                     double r, int cells) {
  const int n = dom.dim();
  const double cell = 2.0 * r / cells;
  const double clamp = 0.5 * cell;
  const double vol = std::pow(cell, n);
  double acc = 0.0;
  Vec Z(n);
  std::vector<int> idx(n, 0);
  const long total = static_cast<long>(std::pow(cells, n));
  for (long c = 0; c < total; ++c) {
    long rem = c;
    double d2 = 0.0;
    for (int j = 0; j < n; ++j) {
      const int i = static_cast<int>(rem % cells);
      rem /= cells;
      Z[j] = x[j] - r + (i + 0.5) * cell;
      d2 += sq(Z[j] - x[j]);
    }
    if (d2 >= r * r) continue;
    if (!dom.inside(Z)) continue;
    acc += w.eval(Z, clamp) * vol;
  }
  return acc;
}

}  // namespace

MassQuote m_ball(const geo::Domain& dom, const Weight& w, const Vec& x,
                 double r, const MBallOptions& opt) {
  if (r <= 0) throw std::invalid_argument("m_ball: r must be positive");
  int cells = opt.cells;
  if (cells <= 0) cells = dom.dim() <= 2 ? 64 : 32;
  const double coarse = midpoint_mass(dom, w, x, r, cells / 2);
  const double fine = midpoint_mass(dom, w, x, r, cells);
  MassQuote q;
  q.value = fine + (fine - coarse) / 3.0;
  q.error = std::abs(fine - coarse) / 3.0 + 1e-300;
  if (!(q.value > 0) && fine == 0.0 && coarse == 0.0) q.value = 0.0;
  return q;
}

RadialMassTable::RadialMassTable(const geo::Domain& dom, const Weight& w,
                                 Vec center, double r_max, int cells)
    : center_(std::move(center)), r_max_(r_max) {
  const int n = dom.dim();
  if (cells <= 0) cells = n <= 2 ? 512 : 128;
  const int nbins = 128;
  radii_.resize(nbins);
  const double r_min = r_max / 512.0;
  for (int k = 0; k < nbins; ++k)
    radii_[k] = r_min * std::pow(r_max / r_min, k / double(nbins - 1));
  std::vector<double> bin(nbins, 0.0);

  const double cell = 2.0 * r_max / cells;
  const double clamp = 0.5 * cell;
  const double vol = std::pow(cell, n);
  Vec Z(n);
  const long total = static_cast<long>(std::pow(cells, n));
  const double lr = std::log(r_max / r_min);
  for (long c = 0; c < total; ++c) {
    long rem = c;
    double d2 = 0.0;
    for (int j = 0; j < n; ++j) {
      const int i = static_cast<int>(rem % cells);
      rem /= cells;
      Z[j] = center_[j] - r_max + (i + 0.5) * cell;
      d2 += sq(Z[j] - center_[j]);
    }
    if (d2 >= r_max * r_max) continue;
    if (!dom.inside(Z)) continue;
    const double d = std::sqrt(d2);
    int k = 0;
    if (d > r_min)
      k = std::min(nbins - 1,
                   static_cast<int>(std::ceil(std::log(d / r_min) / lr *
                                              (nbins - 1))));
    bin[k] += w.eval(Z, clamp) * vol;
  }
  cum_.resize(nbins);
  double acc = 0.0;
  for (int k = 0; k < nbins; ++k) {
    acc += bin[k];
    cum_[k] = acc;
  }
}

double RadialMassTable::mass(double r) const {
  if (r <= 0) return 0.0;
  if (r >= r_max_) return cum_.back();
  auto it = std::lower_bound(radii_.begin(), radii_.end(), r);
  int k = static_cast<int>(it - radii_.begin());
  if (k == 0) {
    // Power extrapolation below the first bin.
    int k1 = 0;
    while (k1 + 1 < static_cast<int>(cum_.size()) && cum_[k1] <= 0) ++k1;
    const int k2 = std::min<int>(k1 + 8, cum_.size() - 1);
    if (cum_[k1] <= 0 || cum_[k2] <= cum_[k1]) return 0.0;
    const double p = std::log(cum_[k2] / cum_[k1]) /
                     std::log(radii_[k2] / radii_[k1]);
    return cum_[k1] * std::pow(r / radii_[k1], p);
  }
  const double r0 = radii_[k - 1], r1 = radii_[k];
  const double m0 = cum_[k - 1], m1 = cum_[k];
  if (m0 <= 0) return m1 * (r - r0) / (r1 - r0);
  const double t = std::log(r / r0) / std::log(r1 / r0);
  return m0 * std::pow(m1 / m0, t);
}

double rho(const geo::Domain& dom, const BoundaryMeasure& mu, const Weight& w,
           const Vec& x, double r) {
  const double bm = mu.ball_mass(x, r);
  if (!(bm > 0))
    throw HypothesisViolation("H3", "rho: zero boundary mass at the probe ball",
                              x, 0.0);
  return m_ball(dom, w, x, r).value / (r * bm);
}

// ---------------------------------------------------------------------------
// Audits

namespace {

std::vector<Vec> audit_points(const geo::Domain& dom,
                              const BoundaryMeasure& mu,
                              const AuditOptions& opt, double r_max,
                              double spacing) {
  const Box box = dom.bounding_box().shrunk(r_max * 0.5);
  auto wp = mu.samples(spacing, box);
  std::vector<Vec> pts;
  if (wp.empty()) return pts;
  const size_t stride = std::max<size_t>(1, wp.size() / opt.n_points);
  for (size_t i = 0; i < wp.size() && pts.size() < size_t(opt.n_points);
       i += stride)
    pts.push_back(wp[i].x);
  return pts;
}

}  // namespace

AuditReport audit(const geo::Domain& dom, const BoundaryMeasure& mu,
                  const Weight& w, Hypothesis hyp, const AuditOptions& opt) {
  AuditReport rep;
  const double r_max =
      opt.r_max > 0 ? opt.r_max : dom.bounding_box().side() / 4.0;
  const double spacing = opt.spacing > 0 ? opt.spacing : r_max / 16.0;
  rep.n_scales = opt.n_scales;
  for (int j = 0; j < opt.n_scales; ++j)
    rep.scales.push_back(r_max * std::pow(0.5, j));

  if (hyp == Hypothesis::H6prime) {
    rep.hypothesis = "H6'";
    auto ws = geo::whitney(dom, dom.bounding_box(), opt.whitney_kmax);
    double worst = 1.0;
    int used = 0;
    for (const auto& c : ws.cubes) {
      double wmin = 1e300, wmax = 0.0;
      Vec p = c.center;
      const int n = dom.dim();
      for (int corner = 0; corner < (1 << n) + 1; ++corner) {
        if (corner == (1 << n))
          p = c.center;
        else
          for (int j = 0; j < n; ++j)
            p[j] = c.center[j] + (((corner >> j) & 1) ? 0.45 : -0.45) * c.side;
        const double v = w.eval(p, 1e-14);
        wmin = std::min(wmin, v);
        wmax = std::max(wmax, v);
      }
      worst = std::max(worst, wmax / wmin);
      ++used;
    }
    rep.n_points = used;
    rep.constant = worst;
    rep.pass = worst <= opt.h6_cap;
    return rep;
  }

  auto pts = audit_points(dom, mu, opt, r_max, spacing);
  if (static_cast<int>(pts.size()) < 4)
    throw ConfigError("audit: not enough boundary samples");
  rep.n_points = static_cast<int>(pts.size());

  if (hyp == Hypothesis::H3 || hyp == Hypothesis::H4) {
    rep.hypothesis = hyp == Hypothesis::H3 ? "H3" : "H4";
    double worst = 0.0;
    bool supp_ok = true;
    std::vector<double> lam, lm;
    for (const auto& x : pts) {
      for (size_t j = 0; j < rep.scales.size(); ++j) {
        const double r = rep.scales[j];
        double m1, m2;
        if (hyp == Hypothesis::H3) {
          m1 = mu.ball_mass(x, r);
          m2 = mu.ball_mass(x, 2.0 * r);
        } else {
          m1 = m_ball(dom, w, x, r).value;
          m2 = m_ball(dom, w, x, 2.0 * r).value;
        }
        if (!(m1 > 0)) {
          supp_ok = false;
          continue;
        }
        worst = std::max(worst, m2 / m1);
      }
      if (hyp == Hypothesis::H4) {
        // Growth exponent d_m from lambda in {1, 2, 4, 8}.
        const double base = m_ball(dom, w, x, rep.scales.back()).value;
        if (base > 0)
          for (double lambda : {1.0, 2.0, 4.0, 8.0}) {
            lam.push_back(lambda);
            lm.push_back(
                m_ball(dom, w, x, lambda * rep.scales.back()).value / base);
          }
      }
    }
    rep.constant = worst;
    if (hyp == Hypothesis::H4 && lam.size() >= 4) {
      auto f = fit_loglog(lam, lm);
      rep.exponent = f.slope;  // d_m
      rep.band = f.slope_stderr;
    }
    rep.pass = supp_ok && worst > 0 && worst <= opt.doubling_cap;
    if (!supp_ok) rep.note = "empty boundary mass at an audited ball";
    return rep;
  }

  // H5: the growth exponent of rho(x, .) must stay strictly sub-linear in
  // magnitude. Both endpoints of the admissible weight range show |slope| = 1.
  rep.hypothesis = "H5";
  double worst_slope = 0.0, worst_band = 0.0, c5 = 0.0;
  for (const auto& x : pts) {
    std::vector<double> rr, pp;
    for (double r : rep.scales) {
      const double bm = mu.ball_mass(x, r);
      if (!(bm > 0)) continue;
      rr.push_back(r);
      pp.push_back(m_ball(dom, w, x, r).value / (r * bm));
    }
    if (rr.size() < 3) continue;
    auto f = fit_loglog(rr, pp);
    if (std::abs(f.slope) > std::abs(worst_slope)) {
      worst_slope = f.slope;
      worst_band = f.slope_stderr;
    }
    for (size_t a = 0; a < rr.size(); ++a)
      for (size_t b = 0; b < rr.size(); ++b)
        if (rr[a] > rr[b])
          c5 = std::max(c5, (pp[a] / pp[b]) /
                                std::pow(rr[a] / rr[b], 1.0 - opt.eps_min));
  }
  rep.exponent = worst_slope;
  rep.band = worst_band;
  rep.constant = c5;
  rep.pass = std::abs(worst_slope) <= 1.0 - opt.eps_min;
  return rep;
}

AuditReport audit_with_refinement(const geo::Domain& dom,
                                  const BoundaryMeasure& mu, const Weight& w,
                                  Hypothesis hyp, const AuditOptions& opt) {
  AuditReport a = audit(dom, mu, w, hyp, opt);
  AuditOptions fine = opt;
  fine.spacing = (opt.spacing > 0 ? opt.spacing
                                  : (opt.r_max > 0 ? opt.r_max
                                                   : dom.bounding_box().side() / 4.0) /
                                        16.0) /
                 2.0;
  fine.n_points = opt.n_points * 2;
  AuditReport b = audit(dom, mu, w, hyp, fine);
  const double lo = std::min(a.constant, b.constant),
               hi = std::max(a.constant, b.constant);
  a.refinement_stable = (lo <= 0 && hi <= 0) || (lo > 0 && hi / lo <= 2.0);
  if (hyp == Hypothesis::H5) {
    // Stability of the fitted exponent as well.
    if (std::abs(a.exponent - b.exponent) > 0.25) a.refinement_stable = false;
    a.pass = a.pass && b.pass;
  }
  return a;
}

}  // namespace delab::meas

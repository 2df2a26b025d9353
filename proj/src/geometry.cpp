#include "delab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace delab::geo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Distance from point p to the axis-aligned box [lo, hi].
double point_box_dist(const Vec& p, const Vec& lo, const Vec& hi) {
  double s = 0.0;
  for (int j = 0; j < p.size(); ++j) {
    const double g = std::max({lo[j] - p[j], p[j] - hi[j], 0.0});
    s += g * g;
  }
  return std::sqrt(s);
}

// Distance from segment [a,b] to a box; dist(p(t), box) is convex in t.
double segment_box_dist(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Vec& lo, const Vec& hi) {
  auto f = [&](double t) {
    Vec p(2);
    p[0] = a[0] + t * (b[0] - a[0]);
    p[1] = a[1] + t * (b[1] - a[1]);
    return point_box_dist(p, lo, hi);
  };
  double l = 0.0, r = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double m1 = l + (r - l) / 3.0, m2 = r - (r - l) / 3.0;
    if (f(m1) <= f(m2))
      r = m2;
    else
      l = m1;
  }
  return f(0.5 * (l + r));
}

double point_segment_dist(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                          const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

Eigen::Vector2d closest_on_segment(const Eigen::Vector2d& p,
                                   const Eigen::Vector2d& a,
                                   const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return a + t * ab;
}

// Min Euclidean norm over a box (componentwise clamp of the origin).
double box_min_norm(const Vec& lo, const Vec& hi) {
  double s = 0.0;
  for (int j = 0; j < lo.size(); ++j) s += sq(interval_dist(lo[j], hi[j]));
  return std::sqrt(s);
}

double box_max_norm(const Vec& lo, const Vec& hi) {
  double s = 0.0;
  for (int j = 0; j < lo.size(); ++j)
    s += sq(std::max(std::abs(lo[j]), std::abs(hi[j])));
  return std::sqrt(s);
}

}  // namespace

double Domain::boundary_diameter() const {
  return bounded() ? bounding_box().extent().norm() : kInf;
}

std::vector<Vec> Domain::corkscrew_hints(const Vec&) const { return {}; }

// ---------------------------------------------------------------------------
// FlatBoundary

FlatBoundary::FlatBoundary(int d, int n, Box box)
    : d_(d), n_(n), box_(std::move(box)) {
  if (!(0 < d && d < n))
    throw ConfigError("flat boundary needs 0 < d < n");
  if (d == 1 && n == 3)
    id_ = "axis3d";
  else
    id_ = "flat" + std::to_string(d) + "in" + std::to_string(n);
}

double FlatBoundary::distance(const Vec& X) const {
  check_dim(X);
  return X.tail(n_ - d_).norm();
}

double FlatBoundary::box_distance(const Vec& lo, const Vec& hi) const {
  double s = 0.0;
  for (int j = d_; j < n_; ++j) s += sq(interval_dist(lo[j], hi[j]));
  return std::sqrt(s);
}

Vec FlatBoundary::project(const Vec& X) const {
  Vec p = X;
  p.tail(n_ - d_).setZero();
  return p;
}

std::vector<Vec> FlatBoundary::corkscrew_hints(const Vec& x) const {
  std::vector<Vec> out;
  const double tail = x.tail(n_ - d_).norm();
  if (tail > 0) {
    Vec u = Vec::Zero(n_);
    u.tail(n_ - d_) = x.tail(n_ - d_) / tail;
    out.push_back(u);
  }
  for (int j = d_; j < n_; ++j) {
    Vec u = Vec::Zero(n_);
    u[j] = 1.0;
    out.push_back(u);
    u[j] = -1.0;
    out.push_back(u);
  }
  return out;
}

std::vector<Vec> FlatBoundary::boundary_points(double spacing,
                                               const Box& within) const {
  std::vector<Vec> pts;
  std::vector<int> counts(d_);
  long total = 1;
  for (int j = 0; j < d_; ++j) {
    counts[j] = std::max(
        1, static_cast<int>(std::floor((within.hi[j] - within.lo[j]) / spacing)));
    total *= counts[j] + 1;
  }
  std::vector<int> idx(d_, 0);
  for (long c = 0; c < total; ++c) {
    Vec p = Vec::Zero(n_);
    long rem = c;
    bool ok = true;
    for (int j = 0; j < d_; ++j) {
      const int i = static_cast<int>(rem % (counts[j] + 1));
      rem /= counts[j] + 1;
      p[j] = within.lo[j] + i * spacing;
      if (p[j] > within.hi[j] + 1e-12) ok = false;
    }
    if (ok) pts.push_back(p);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// HalfSpace

HalfSpace::HalfSpace(int n, Box box) : n_(n), box_(std::move(box)) {
  if (n < 2) throw ConfigError("half space needs n >= 2");
}

double HalfSpace::distance(const Vec& X) const {
  check_dim(X);
  return std::abs(X[n_ - 1]);
}

double HalfSpace::box_distance(const Vec& lo, const Vec& hi) const {
  return interval_dist(lo[n_ - 1], hi[n_ - 1]);
}

Vec HalfSpace::project(const Vec& X) const {
  Vec p = X;
  p[n_ - 1] = 0.0;
  return p;
}

std::vector<Vec> HalfSpace::corkscrew_hints(const Vec&) const {
  Vec u = Vec::Zero(n_);
  u[n_ - 1] = 1.0;
  return {u};
}

std::vector<Vec> HalfSpace::boundary_points(double spacing,
                                            const Box& within) const {
  std::vector<Vec> pts;
  if (n_ == 2) {
    for (double x = within.lo[0]; x <= within.hi[0] + 1e-12; x += spacing) {
      Vec p(2);
      p << x, 0.0;
      pts.push_back(p);
    }
  } else {
    for (double x = within.lo[0]; x <= within.hi[0] + 1e-12; x += spacing)
      for (double y = within.lo[1]; y <= within.hi[1] + 1e-12; y += spacing) {
        Vec p = Vec::Zero(n_);
        p[0] = x;
        p[1] = y;
        pts.push_back(p);
      }
  }
  return pts;
}

// ---------------------------------------------------------------------------
// BallMinusFlat

BallMinusFlat::BallMinusFlat(int n, int d, double radius)
    : n_(n), d_(d), radius_(radius) {
  if (!(0 < d && d < n - 1))
    throw ConfigError("ball-minus-flat needs 0 < d < n-1");
  id_ = (n == 3 && d == 1) ? "ball-minus-diameter"
                           : "ball-minus-flat" + std::to_string(d) + "in" +
                                 std::to_string(n);
}

double BallMinusFlat::flat_dist(const Vec& X) const {
  const double tail = X.tail(n_ - d_).norm();
  const double head = X.head(d_).norm();
  if (head <= radius_) return tail;
  return std::hypot(tail, head - radius_);
}

double BallMinusFlat::distance(const Vec& X) const {
  check_dim(X);
  return std::min(sphere_dist(X), flat_dist(X));
}

double BallMinusFlat::box_distance(const Vec& lo, const Vec& hi) const {
  // Distance to the sphere.
  const double mn = box_min_norm(lo, hi), mx = box_max_norm(lo, hi);
  double ds;
  if (mn <= radius_ && radius_ <= mx)
    ds = 0.0;
  else
    ds = std::min(std::abs(mn - radius_), std::abs(mx - radius_));
  // Distance to the flat disk.
  double tail2 = 0.0;
  for (int j = d_; j < n_; ++j) tail2 += sq(interval_dist(lo[j], hi[j]));
  double head2 = 0.0;
  for (int j = 0; j < d_; ++j) head2 += sq(interval_dist(lo[j], hi[j]));
  const double head_min = std::sqrt(head2);
  double df;
  if (head_min <= radius_)
    df = std::sqrt(tail2);
  else
    df = std::hypot(std::sqrt(tail2), head_min - radius_);
  return std::min(ds, df);
}

Vec BallMinusFlat::project(const Vec& X) const {
  Vec on_flat = X;
  on_flat.tail(n_ - d_).setZero();
  const double head = on_flat.head(d_).norm();
  if (head > radius_) on_flat.head(d_) *= radius_ / head;
  Vec on_sphere;
  const double nrm = X.norm();
  if (nrm > 1e-300)
    on_sphere = X * (radius_ / nrm);
  else {
    on_sphere = Vec::Zero(n_);
    on_sphere[n_ - 1] = radius_;
  }
  return (X - on_flat).norm() <= (X - on_sphere).norm() ? on_flat : on_sphere;
}

bool BallMinusFlat::inside(const Vec& X) const {
  return X.norm() < radius_ && flat_dist(X) > 0.0;
}

bool BallMinusFlat::box_exterior(const Vec& lo, const Vec& hi) const {
  return box_min_norm(lo, hi) >= radius_;
}

std::vector<Vec> BallMinusFlat::corkscrew_hints(const Vec& x) const {
  std::vector<Vec> out;
  const double nrm = x.norm();
  const bool on_sphere = sphere_dist(x) < flat_dist(x);
  if (on_sphere && nrm > 0) {
    const Vec inward = -x / nrm;
    out.push_back(inward);
    // Tilted variants help near the circles where the flat piece meets the
    // sphere.
    for (int j = d_; j < n_; ++j)
      for (double s : {0.7, -0.7}) {
        Vec u = inward;
        u[j] += s;
        out.push_back(u.normalized());
      }
  } else {
    for (int j = d_; j < n_; ++j) {
      Vec u = Vec::Zero(n_);
      u[j] = 1.0;
      out.push_back(u);
      u[j] = -1.0;
      out.push_back(u);
    }
  }
  return out;
}

std::vector<Vec> BallMinusFlat::boundary_points(double spacing,
                                                const Box& within) const {
  std::vector<Vec> pts;
  if (n_ == 3 && d_ == 1) {
    // Fibonacci lattice on the sphere.
    const int ns = std::max(
        16, static_cast<int>(4.0 * M_PI * sq(radius_) / sq(spacing)));
    const double ga = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < ns; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / ns;
      const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = ga * i;
      Vec p(3);
      p << radius_ * z, radius_ * rr * std::cos(phi),
          radius_ * rr * std::sin(phi);
      if (within.contains(p, 1e-12)) pts.push_back(p);
    }
    // The removed diameter.
    for (double s = -radius_; s <= radius_ + 1e-12; s += spacing) {
      Vec p(3);
      p << s, 0.0, 0.0;
      if (within.contains(p, 1e-12)) pts.push_back(p);
    }
  } else {
    throw ConfigError("boundary_points: only n=3,d=1 sampled");
  }
  return pts;
}

// ---------------------------------------------------------------------------
// CantorBoundary

CantorBoundary::CantorBoundary(Box box, int depth)
    : box_(std::move(box)), depth_(depth) {}

namespace {
double cantor_interval_dist(double a, double b, double lo, double hi,
                            int level) {
  if (b < lo) return lo - b;  // lo is a point of the set
  if (a > hi) return a - hi;  // hi is a point of the set
  if (level <= 0) return 0.0; // below resolution: treat as a full segment
  const double w = (hi - lo) / 3.0;
  return std::min(cantor_interval_dist(a, b, lo, lo + w, level - 1),
                  cantor_interval_dist(a, b, hi - w, hi, level - 1));
}

double cantor_nearest(double x, double lo, double hi, int level) {
  if (x <= lo) return lo;
  if (x >= hi) return hi;
  if (level <= 0) return x;
  const double w = (hi - lo) / 3.0;
  const double l = cantor_nearest(x, lo, lo + w, level - 1);
  const double r = cantor_nearest(x, hi - w, hi, level - 1);
  return std::abs(x - l) <= std::abs(x - r) ? l : r;
}
}  // namespace

double CantorBoundary::axis_distance(double a, double b) const {
  return cantor_interval_dist(a, b, 0.0, 1.0, depth_);
}

double CantorBoundary::distance(const Vec& X) const {
  check_dim(X);
  return std::hypot(axis_distance(X[0], X[0]), X[1]);
}

double CantorBoundary::box_distance(const Vec& lo, const Vec& hi) const {
  return std::hypot(axis_distance(lo[0], hi[0]), interval_dist(lo[1], hi[1]));
}

Vec CantorBoundary::project(const Vec& X) const {
  Vec p(2);
  p << cantor_nearest(X[0], 0.0, 1.0, depth_), 0.0;
  return p;
}

std::vector<Vec> CantorBoundary::boundary_points(double spacing,
                                                 const Box& within) const {
  int k = 0;
  double w = 1.0;
  while (w > spacing && k < depth_) {
    w /= 3.0;
    ++k;
  }
  // Endpoints of the generation-k intervals; all of them lie in the set.
  std::vector<std::pair<double, double>> iv = {{0.0, 1.0}};
  for (int l = 0; l < k; ++l) {
    std::vector<std::pair<double, double>> nxt;
    nxt.reserve(iv.size() * 2);
    for (auto [a, b] : iv) {
      const double third = (b - a) / 3.0;
      nxt.push_back({a, a + third});
      nxt.push_back({b - third, b});
    }
    iv = std::move(nxt);
  }
  std::vector<Vec> pts;
  pts.reserve(iv.size() * 2);
  for (auto [a, b] : iv)
    for (double x : {a, b}) {
      Vec p(2);
      p << x, 0.0;
      if (within.contains(p, 1e-12)) pts.push_back(p);
    }
  return pts;
}

// ---------------------------------------------------------------------------
// SawtoothGraph

SawtoothGraph::SawtoothGraph(double lip, Box box)
    : lip_(lip), M_(2.0 * lip), box_(std::move(box)) {
  if (lip <= 0) throw ConfigError("sawtooth needs a positive Lipschitz norm");
  const double margin = box_.side();
  const double x0 = box_.lo[0] - margin, x1 = box_.hi[0] + margin;

  auto breaks_in = [&](double a, double b) {
    std::vector<double> xs;
    xs.push_back(a);
    for (double k = std::ceil(a * 2.0) / 2.0; k < b; k += 0.5)
      if (k > a + 1e-12) xs.push_back(k);
    xs.push_back(b);
    return xs;
  };

  // Full graph of A (weight anchor).
  for (double x : breaks_in(x0, x1)) graph_.push_back({x, graph_value(x)});

  // Boundary polyline of Omega_s: graph over F = R \ (-1,1), plus the two
  // cone chains over (-1,1).
  auto add_chain = [&](const std::vector<double>& xs, auto f) {
    for (double x : xs) poly_.push_back({x, f(x)});
    poly_.push_back({std::numeric_limits<double>::quiet_NaN(), 0.0});  // break
  };
  add_chain(breaks_in(x0, -1.0), [&](double x) { return graph_value(x); });
  add_chain(breaks_in(1.0, x1), [&](double x) { return graph_value(x); });
  auto cone_breaks = breaks_in(-1.0, 1.0);
  if (std::none_of(cone_breaks.begin(), cone_breaks.end(),
                   [](double v) { return std::abs(v) < 1e-12; }))
    cone_breaks.push_back(0.0);
  std::sort(cone_breaks.begin(), cone_breaks.end());
  add_chain(cone_breaks, [&](double x) {
    return graph_value(x) + M_ * (1.0 - std::abs(x));
  });
  add_chain(cone_breaks, [&](double x) {
    return graph_value(x) - M_ * (1.0 - std::abs(x));
  });
}

double SawtoothGraph::graph_value(double x) const {
  const double f = x - std::floor(x);
  return lip_ * (std::abs(f - 0.5) - 0.25);
}

namespace {
template <class F>
double polyline_min(const std::vector<Eigen::Vector2d>& poly, F&& seg_fn) {
  double best = kInf;
  for (size_t i = 0; i + 1 < poly.size(); ++i) {
    if (std::isnan(poly[i][0]) || std::isnan(poly[i + 1][0])) continue;
    best = std::min(best, seg_fn(poly[i], poly[i + 1]));
  }
  return best;
}
}  // namespace

double SawtoothGraph::distance(const Vec& X) const {
  check_dim(X);
  const Eigen::Vector2d p(X[0], X[1]);
  return polyline_min(poly_, [&](const auto& a, const auto& b) {
    return point_segment_dist(p, a, b);
  });
}

double SawtoothGraph::box_distance(const Vec& lo, const Vec& hi) const {
  return polyline_min(poly_, [&](const auto& a, const auto& b) {
    return segment_box_dist(a, b, lo, hi);
  });
}

Vec SawtoothGraph::project(const Vec& X) const {
  const Eigen::Vector2d p(X[0], X[1]);
  double best = kInf;
  Eigen::Vector2d arg = p;
  for (size_t i = 0; i + 1 < poly_.size(); ++i) {
    if (std::isnan(poly_[i][0]) || std::isnan(poly_[i + 1][0])) continue;
    const Eigen::Vector2d c = closest_on_segment(p, poly_[i], poly_[i + 1]);
    const double d = (p - c).norm();
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  Vec out(2);
  out << arg[0], arg[1];
  return out;
}

bool SawtoothGraph::inside(const Vec& X) const {
  const double dF = std::max(0.0, 1.0 - std::abs(X[0]));
  return std::abs(X[1] - graph_value(X[0])) > M_ * dF;
}

double SawtoothGraph::weight_distance(const Vec& X) const {
  const Eigen::Vector2d p(X[0], X[1]);
  return polyline_min(graph_, [&](const auto& a, const auto& b) {
    return point_segment_dist(p, a, b);
  });
}

std::vector<Vec> SawtoothGraph::boundary_points(double spacing,
                                                const Box& within) const {
  std::vector<Vec> pts;
  for (size_t i = 0; i + 1 < poly_.size(); ++i) {
    if (std::isnan(poly_[i][0]) || std::isnan(poly_[i + 1][0])) continue;
    const Eigen::Vector2d a = poly_[i], b = poly_[i + 1];
    const double len = (b - a).norm();
    const int m = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int k = 0; k < m; ++k) {
      const Eigen::Vector2d q = a + (static_cast<double>(k) / m) * (b - a);
      Vec p(2);
      p << q[0], q[1];
      if (within.contains(p, 1e-12)) pts.push_back(p);
    }
  }
  return pts;
}

// ---------------------------------------------------------------------------
// PointCloud

PointCloud::PointCloud(std::vector<Vec> pts, double declared_dim, Box box)
    : pts_(std::move(pts)), d_(declared_dim), box_(std::move(box)) {
  if (pts_.empty()) throw ConfigError("point cloud: empty boundary");
}

double PointCloud::distance(const Vec& X) const {
  check_dim(X);
  double best = kInf;
  for (const auto& p : pts_) best = std::min(best, (X - p).norm());
  return best;
}

double PointCloud::box_distance(const Vec& lo, const Vec& hi) const {
  double best = kInf;
  for (const auto& p : pts_) best = std::min(best, point_box_dist(p, lo, hi));
  return best;
}

Vec PointCloud::project(const Vec& X) const {
  double best = kInf;
  const Vec* arg = &pts_[0];
  for (const auto& p : pts_) {
    const double d = (X - p).norm();
    if (d < best) {
      best = d;
      arg = &p;
    }
  }
  return *arg;
}

std::vector<Vec> PointCloud::boundary_points(double, const Box& within) const {
  std::vector<Vec> out;
  for (const auto& p : pts_)
    if (within.contains(p, 1e-12)) out.push_back(p);
  return out;
}

// ---------------------------------------------------------------------------
// Corkscrew

CorkscrewResult corkscrew(const Domain& dom, const Vec& x, double r,
                          const CorkscrewOptions& opt) {
  dom.check_dim(x);
  if (r <= 0) throw std::invalid_argument("corkscrew: r must be positive");
  if (dom.bounded() && r > dom.bounding_box().extent().norm())
    throw std::invalid_argument("corkscrew: r exceeds diam(Omega)");

  const double target = r / 2.0;  // accept early at the quality C1 = 2
  Vec best;
  double best_delta = -kInf;

  auto consider = [&](const Vec& X) -> bool {
    if ((X - x).norm() > r * (1.0 - 1e-12)) return false;
    if (!dom.inside(X)) return false;
    const double d = dom.distance(X);
    if (d > best_delta) {
      best_delta = d;
      best = X;
    }
    return d >= target * (1.0 - 1e-12);
  };

  for (const Vec& u : dom.corkscrew_hints(x))
    for (double s : {0.5, 0.75, 0.25, 0.1})
      if (consider(x + (s * r) * u))
        return {best, best_delta, r / best_delta};

  for (int i = 0; i < opt.samples; ++i)
    consider(halton_in_ball(static_cast<uint64_t>(i), x, r * 0.995));

  if (best_delta <= 0.0)
    throw HypothesisViolation(
        "H1", dom.id() + ": no interior candidate in B(x," + std::to_string(r) + ")",
        x, 0.0);
  const double c1 = r / best_delta;
  if (c1 > opt.c1_max)
    throw HypothesisViolation(
        "H1",
        dom.id() + ": best corkscrew constant " + std::to_string(c1) +
            " exceeds cap " + std::to_string(opt.c1_max),
        best, best_delta);
  return {best, best_delta, c1};
}

// ---------------------------------------------------------------------------
// Harnack chains

Chain::Validation Chain::validate(const Domain& dom) const {
  Validation v;
  if (points.empty()) return v;
  v.step_ok = true;
  v.min_delta_over_r = kInf;
  const Vec& X0 = points.front();
  const double lr = std::max(lambda * scale, 1e-300);
  for (size_t i = 0; i < points.size(); ++i) {
    const double d = dom.distance(points[i]);
    v.min_delta_over_r = std::min(v.min_delta_over_r, d / scale);
    v.enclosure = std::max(v.enclosure, (points[i] - X0).norm() / lr);
    if (i + 1 < points.size() &&
        (points[i + 1] - points[i]).norm() > 0.5 * d * (1.0 + 1e-9))
      v.step_ok = false;
  }
  return v;
}

namespace {

// Greedy walker: steps of at most delta(Z)/2 toward B, tilting away from the
// boundary when the direct step loses too much clearance.
bool walk_segment(const Domain& dom, const Vec& A, const Vec& B, double floor,
                  int budget, std::vector<Vec>& out) {
  Vec Z = A;
  int steps = 0;
  while ((Z - B).norm() > 0.5 * dom.distance(Z)) {
    if (++steps > budget) return false;
    const double dz = dom.distance(Z);
    const Vec to_b = (B - Z).normalized();
    Vec up = Z - dom.project(Z);
    const double un = up.norm();
    up = un > 0 ? Vec(up / un) : Vec(Vec::Zero(Z.size()));

    // Candidate directions: tilts toward the clearance direction plus
    // sideways escapes orthogonal to the target direction (needed when the
    // straight path runs through the boundary set and up is antiparallel).
    std::vector<Vec> dirs;
    for (double tilt : {0.0, 0.3, 0.7, 1.5, 3.0, 8.0}) dirs.push_back(to_b + tilt * up);
    const int n = static_cast<int>(Z.size());
    for (int j = 0; j < n; ++j) {
      Vec e = Vec::Zero(n);
      e[j] = 1.0;
      Vec perp = e - e.dot(to_b) * to_b;
      const double pn = perp.norm();
      if (pn < 1e-9) continue;
      perp /= pn;
      for (double t : {0.7, 2.0})
        for (double sgn : {1.0, -1.0}) dirs.push_back(to_b + sgn * t * perp);
    }
    Vec best;
    double best_score = -kInf;
    for (const Vec& raw : dirs)
      for (double frac : {0.5, 0.3, 0.15}) {
        const double dn = raw.norm();
        if (dn <= 0) continue;
        const Vec cand = Z + (frac * dz / dn) * raw;
        if (!dom.inside(cand)) continue;
        const double dc = dom.distance(cand);
        if (dc < floor) continue;
        const double score =
            ((Z - B).norm() - (cand - B).norm()) + 0.25 * (dc - dz);
        if (score > best_score) {
          best_score = score;
          best = cand;
        }
      }
    if (best_score == -kInf) return false;
    Z = best;
    out.push_back(Z);
  }
  out.push_back(B);
  return true;
}

}  // namespace

Chain harnack_chain(const Domain& dom, const Vec& X, const Vec& Y, double r,
                    const ChainOptions& opt) {
  dom.check_dim(X);
  dom.check_dim(Y);
  const double dX = dom.distance(X), dY = dom.distance(Y);
  if (!(dX > r) || !(dY > r))
    throw std::invalid_argument("harnack_chain: need delta(X), delta(Y) > r");

  Chain ch;
  ch.scale = r;
  ch.lambda = std::max(1.0, (X - Y).norm() / r);
  ch.points.push_back(X);
  if ((X - Y).norm() < 1e-15) {
    ch.radii.push_back(dX / 2.0);
    return ch;
  }

  const double floor = opt.floor_frac * r;
  bool done = false;
  if ((X - Y).norm() <= std::max(dX, dY)) {
    // The larger ball contains the segment; walk it directly.
    std::vector<Vec> seg;
    if (walk_segment(dom, X, Y, floor, opt.budget, seg)) {
      for (auto& p : seg) ch.points.push_back(std::move(p));
      done = true;
    }
  }

  if (!done) {
    // Dyadic corkscrew ladders above the projections of X and Y, joined at
    // the top scale.
    const double lr = ch.lambda * r;
    const Vec px = dom.project(X), py = dom.project(Y);
    double cap = dom.bounded()
                     ? 0.45 * dom.bounding_box().extent().norm()
                     : kInf;
    auto ladder = [&](const Vec& base, const Vec& p0, double d0) {
      std::vector<Vec> lad = {base};
      double s = 2.0 * d0;
      while (s < 2.0 * lr && s < cap) {
        lad.push_back(corkscrew(dom, p0, std::min(s, cap), opt.corkscrew).point);
        if (dom.distance(lad.back()) >= lr / 8.0) break;
        s *= 2.0;
      }
      // Ensure the ladder reaches a point with clearance comparable to
      // Lambda r (or the cap for bounded domains).
      if (dom.distance(lad.back()) < std::min(lr, cap) / 8.0)
        lad.push_back(
            corkscrew(dom, p0, std::min(2.0 * lr, cap), opt.corkscrew).point);
      return lad;
    };
    std::vector<Vec> nodes = ladder(X, px, dX);
    std::vector<Vec> down = ladder(Y, py, dY);
    nodes.insert(nodes.end(), down.rbegin(), down.rend());

    for (size_t i = 0; i + 1 < nodes.size(); ++i) {
      std::vector<Vec> seg;
      if (!walk_segment(dom, nodes[i], nodes[i + 1], floor, opt.budget, seg))
        throw HypothesisViolation(
            "H2", dom.id() + ": chain budget exhausted between ladder nodes",
            nodes[i], dom.distance(nodes[i]));
      for (auto& p : seg) ch.points.push_back(std::move(p));
      if (static_cast<int>(ch.points.size()) > opt.budget)
        throw HypothesisViolation("H2", dom.id() + ": chain budget exceeded",
                                  ch.points.back(),
                                  dom.distance(ch.points.back()));
    }
  }

  // Drop consecutive duplicates, then record radii.
  std::vector<Vec> dedup;
  for (auto& p : ch.points)
    if (dedup.empty() || (p - dedup.back()).norm() > 1e-15)
      dedup.push_back(std::move(p));
  ch.points = std::move(dedup);
  ch.radii.clear();
  for (const auto& p : ch.points) ch.radii.push_back(dom.distance(p) / 2.0);
  return ch;
}

// ---------------------------------------------------------------------------
// Whitney decomposition

WhitneySet whitney(const Domain& dom, const Box& box, int k_max) {
  const int n = box.dim();
  WhitneySet ws;
  ws.box = box;
  ws.k_max = k_max;
  ws.dim_factor = std::sqrt(static_cast<double>(n));
  ws.base_side = box.extent().minCoeff();
  std::vector<int> roots(n);
  long nroots = 1;
  for (int j = 0; j < n; ++j) {
    const double m = (box.hi[j] - box.lo[j]) / ws.base_side;
    roots[j] = static_cast<int>(std::lround(m));
    if (std::abs(m - roots[j]) > 1e-9)
      throw ConfigError("whitney: box extents must be multiples of the "
                        "smallest extent");
    nroots *= roots[j];
  }

  struct Item {
    Vec center;
    double side;
    int gen;
  };
  std::vector<Item> stack;
  for (long rc = 0; rc < nroots; ++rc) {
    long rem = rc;
    Vec c(n);
    for (int j = 0; j < n; ++j) {
      const int i = static_cast<int>(rem % roots[j]);
      rem /= roots[j];
      c[j] = box.lo[j] + (i + 0.5) * ws.base_side;
    }
    stack.push_back({c, ws.base_side, 0});
  }

  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    Vec lo = (it.center.array() - it.side / 2.0).matrix();
    Vec hi = (it.center.array() + it.side / 2.0).matrix();
    const double vol = std::pow(it.side, n);
    if (dom.box_exterior(lo, hi)) {
      ws.exterior_volume += vol;
      continue;
    }
    const double diam = it.side * ws.dim_factor;
    Vec lo4 = (it.center.array() - 2.0 * it.side).matrix();
    Vec hi4 = (it.center.array() + 2.0 * it.side).matrix();
    const double d4 = dom.box_distance(lo4, hi4);
    if (4.0 * diam <= d4) {
      if (it.gen == 0)
        throw ConfigError("whitney: box does not reach the boundary");
      WhitneyCube c;
      c.center = it.center;
      c.side = it.side;
      c.gen = it.gen;
      ws.cubes.push_back(std::move(c));
    } else if (it.gen == k_max) {
      ws.truncated_count += 1;
      ws.truncated_volume += vol;
    } else {
      const double hs = it.side / 4.0;
      for (int corner = 0; corner < (1 << n); ++corner) {
        Vec c = it.center;
        for (int j = 0; j < n; ++j)
          c[j] += ((corner >> j) & 1) ? hs : -hs;
        stack.push_back({c, it.side / 2.0, it.gen + 1});
      }
    }
  }

  ws.build_index();

  // Adjacency: probe points slightly outside each face/edge/corner. Probes
  // are offset tangentially so that neighbors half the size are found too.
  const double eps = ws.base_side * std::pow(0.5, k_max + 3);
  for (int i = 0; i < static_cast<int>(ws.cubes.size()); ++i) {
    const auto& c = ws.cubes[i];
    std::set<int> nb;
    std::vector<int> dir(n, -1);
    while (true) {
      bool all_zero = true;
      for (int j = 0; j < n; ++j)
        if (dir[j] != 0) all_zero = false;
      if (!all_zero) {
        std::vector<double> tang = {-c.side / 4.0, 0.0, c.side / 4.0};
        std::vector<int> t_idx;
        for (int j = 0; j < n; ++j)
          if (dir[j] == 0) t_idx.push_back(j);
        const int tn = static_cast<int>(t_idx.size());
        int combos = 1;
        for (int q = 0; q < tn; ++q) combos *= 3;
        for (int cb = 0; cb < combos; ++cb) {
          Vec p = c.center;
          for (int j = 0; j < n; ++j)
            if (dir[j] != 0) p[j] += dir[j] * (c.side / 2.0 + eps);
          int rem = cb;
          for (int q = 0; q < tn; ++q) {
            p[t_idx[q]] += tang[rem % 3];
            rem /= 3;
          }
          const int f = ws.find(p);
          if (f >= 0 && f != i) nb.insert(f);
        }
      }
      // advance direction counter over {-1,0,1}^n
      int j = 0;
      for (; j < n; ++j) {
        if (dir[j] < 1) {
          ++dir[j];
          break;
        }
        dir[j] = -1;
      }
      if (j == n) break;
    }
    ws.cubes[i].neighbors.assign(nb.begin(), nb.end());
  }
  // Symmetric closure.
  for (int i = 0; i < static_cast<int>(ws.cubes.size()); ++i)
    for (int j : ws.cubes[i].neighbors) {
      auto& v = ws.cubes[j].neighbors;
      if (std::find(v.begin(), v.end(), i) == v.end()) v.push_back(i);
    }
  for (auto& c : ws.cubes) std::sort(c.neighbors.begin(), c.neighbors.end());
  return ws;
}

void WhitneySet::build_index() const {
  index_.assign(k_max + 1, {});
  for (int i = 0; i < static_cast<int>(cubes.size()); ++i) {
    const auto key = lattice_key(cubes[i].center, cubes[i].gen);
    index_[cubes[i].gen][hash_key(key, cubes[i].gen)] = i;
  }
}

std::vector<int64_t> WhitneySet::lattice_key(const Vec& X, int g) const {
  const double side_g = side_at(g);
  std::vector<int64_t> key(X.size());
  for (int j = 0; j < X.size(); ++j)
    key[j] = static_cast<int64_t>(std::floor((X[j] - box.lo[j]) / side_g));
  return key;
}

int64_t WhitneySet::hash_key(const std::vector<int64_t>& key, int g) const {
  const double side_g = side_at(g);
  int64_t h = 0;
  for (int j = 0; j < static_cast<int>(key.size()); ++j) {
    const int64_t cells = static_cast<int64_t>(
        std::lround((box.hi[j] - box.lo[j]) / side_g));
    if (key[j] < 0 || key[j] >= cells) return -1;
    h = h * (cells + 1) + key[j];
  }
  return h;
}

int WhitneySet::find(const Vec& X) const {
  if (index_.empty()) build_index();
  if (!box.contains(X)) return -1;
  for (int g = k_max; g >= 0; --g) {
    const int64_t h = hash_key(lattice_key(X, g), g);
    if (h < 0) continue;
    auto it = index_[g].find(h);
    if (it != index_[g].end()) return it->second;
  }
  return -1;
}

WhitneySet::Validation WhitneySet::validate(const Domain& dom) const {
  Validation v;
  v.wq11_ok = true;
  v.wq12_ok = true;
  v.worst_lower = kInf;
  v.worst_upper = 0.0;
  for (const auto& c : cubes) {
    const double diam = c.side * dim_factor;
    Vec lo = (c.center.array() - c.side / 2.0).matrix();
    Vec hi = (c.center.array() + c.side / 2.0).matrix();
    Vec lo4 = (c.center.array() - 2.0 * c.side).matrix();
    Vec hi4 = (c.center.array() + 2.0 * c.side).matrix();
    const double d1 = dom.box_distance(lo, hi);
    const double d4 = dom.box_distance(lo4, hi4);
    v.worst_lower = std::min(v.worst_lower, d4 / diam);
    v.worst_upper = std::max(v.worst_upper, d1 / diam);
    if (!(4.0 * diam <= d4 * (1 + 1e-9)) || !(d4 <= d1 * (1 + 1e-12)) ||
        !(d1 <= 12.0 * diam * (1 + 1e-9)))
      v.wq11_ok = false;
  }
  for (const auto& c : cubes)
    for (int j : c.neighbors) {
      const double ratio = c.side / cubes[j].side;
      if (!(std::abs(ratio - 0.5) < 1e-9 || std::abs(ratio - 1.0) < 1e-9 ||
            std::abs(ratio - 2.0) < 1e-9))
        v.wq12_ok = false;
    }
  double vol = truncated_volume + exterior_volume;
  for (const auto& c : cubes) vol += std::pow(c.side, box.dim());
  v.cover_ok = std::abs(vol - box.volume()) <= 1e-9 * box.volume();
  return v;
}

void WhitneySet::write_csv(const std::string& path) const {
  std::ofstream f(path);
  f << "id,gen,side";
  for (int j = 0; j < box.dim(); ++j) f << ",c" << j;
  f << "\n";
  for (int i = 0; i < static_cast<int>(cubes.size()); ++i) {
    f << i << "," << cubes[i].gen << "," << cubes[i].side;
    for (int j = 0; j < box.dim(); ++j) f << "," << cubes[i].center[j];
    f << "\n";
  }
}

}  // namespace delab::geo

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "delab/core.hpp"

namespace delab::geo {

// A domain Omega = R^n \ Gamma (or a bounded variant) described through its
// boundary set Gamma. All geometric algorithms consume only the oracles
// below; `distance` is exact for the analytic kinds and resolution-bounded
// for the fractal ones.
class Domain {
 public:
  virtual ~Domain() = default;

  virtual std::string id() const = 0;
  virtual int dim() const = 0;            // ambient dimension n
  virtual double boundary_dim() const = 0;  // d, possibly fractional

  // dist(X, Gamma); 1-Lipschitz by construction.
  virtual double distance(const Vec& X) const = 0;
  // Exact min of dist(., Gamma) over an axis-aligned box.
  virtual double box_distance(const Vec& lo, const Vec& hi) const = 0;
  // A nearest point of Gamma.
  virtual Vec project(const Vec& X) const = 0;

  virtual Box bounding_box() const = 0;
  virtual bool bounded() const { return false; }
  // diam(Gamma), finite when the boundary is bounded.
  virtual double boundary_diameter() const;

  virtual bool inside(const Vec& X) const { return distance(X) > 0.0; }
  // True when the closed box lies entirely outside closure(Omega)
  // (only meaningful for bounded domains).
  virtual bool box_exterior(const Vec& /*lo*/, const Vec& /*hi*/) const {
    return false;
  }

  // Distance to the set anchoring the interior weight. For pure-codimension
  // kinds this is Gamma itself; for mixed-dimension kinds (ball minus a
  // low-dimensional set, sawtooth) it is the low-dimensional piece.
  virtual double weight_distance(const Vec& X) const { return distance(X); }
  virtual double weight_dim() const { return boundary_dim(); }

  // Unit directions likely to lead into Omega from a boundary point.
  virtual std::vector<Vec> corkscrew_hints(const Vec& x) const;

  // Points of Gamma inside `within`, at separation ~ spacing.
  virtual std::vector<Vec> boundary_points(double spacing,
                                           const Box& within) const = 0;

  void check_dim(const Vec& X) const {
    if (static_cast<int>(X.size()) != dim())
      throw std::invalid_argument(id() + ": point dimension " +
                                  std::to_string(X.size()) + " != " +
                                  std::to_string(dim()));
  }
};

using DomainPtr = std::shared_ptr<const Domain>;

// Gamma = R^d x {0}^(n-d), Omega = R^n \ Gamma.
class FlatBoundary : public Domain {
 public:
  FlatBoundary(int d, int n, Box box);
  std::string id() const override { return id_; }
  int dim() const override { return n_; }
  double boundary_dim() const override { return d_; }
  double distance(const Vec& X) const override;
  double box_distance(const Vec& lo, const Vec& hi) const override;
  Vec project(const Vec& X) const override;
  Box bounding_box() const override { return box_; }
  std::vector<Vec> corkscrew_hints(const Vec& x) const override;
  std::vector<Vec> boundary_points(double spacing,
                                   const Box& within) const override;

 private:
  int d_, n_;
  Box box_;
  std::string id_;
};

// Omega = upper half space {x_n > 0}, Gamma = {x_n = 0}.
class HalfSpace : public Domain {
 public:
  HalfSpace(int n, Box box);
  std::string id() const override { return n_ == 2 ? "halfplane" : "halfspace"; }
  int dim() const override { return n_; }
  double boundary_dim() const override { return n_ - 1; }
  double distance(const Vec& X) const override;
  double box_distance(const Vec& lo, const Vec& hi) const override;
  Vec project(const Vec& X) const override;
  Box bounding_box() const override { return box_; }
  bool inside(const Vec& X) const override { return X[n_ - 1] > 0.0; }
  std::vector<Vec> corkscrew_hints(const Vec& x) const override;
  std::vector<Vec> boundary_points(double spacing,
                                   const Box& within) const override;

 private:
  int n_;
  Box box_;
};

// Omega = B(0, R) minus the d-dimensional unit disk {|x_(1..d)| <= R,
// x_(d+1..n) = 0}; for n = 3, d = 1 this is a ball deprived of a diameter.
// The boundary mixes dimensions: an (n-1)-sphere plus a d-disk.
class BallMinusFlat : public Domain {
 public:
  BallMinusFlat(int n, int d, double radius = 1.0);
  std::string id() const override { return id_; }
  int dim() const override { return n_; }
  double boundary_dim() const override { return n_ - 1; }
  double distance(const Vec& X) const override;
  double box_distance(const Vec& lo, const Vec& hi) const override;
  Vec project(const Vec& X) const override;
  Box bounding_box() const override {
    return Box::cube(n_, -radius_, radius_);
  }
  bool bounded() const override { return true; }
  double boundary_diameter() const override { return 2.0 * radius_; }
  bool inside(const Vec& X) const override;
  bool box_exterior(const Vec& lo, const Vec& hi) const override;
  double weight_distance(const Vec& X) const override { return flat_dist(X); }
  double weight_dim() const override { return d_; }
  std::vector<Vec> corkscrew_hints(const Vec& x) const override;
  std::vector<Vec> boundary_points(double spacing,
                                   const Box& within) const override;

  double radius() const { return radius_; }
  double flat_dist(const Vec& X) const;  // distance to the removed disk
  double sphere_dist(const Vec& X) const {
    return std::abs(X.norm() - radius_);
  }

 private:
  int n_, d_;
  double radius_;
  std::string id_;
};

// Gamma = (middle-thirds Cantor set) x {0} in R^2, Omega = R^2 \ Gamma.
// Distance recursion depth is fixed; below resolution 3^-depth the oracle
// treats surviving intervals as full segments.
class CantorBoundary : public Domain {
 public:
  explicit CantorBoundary(Box box, int depth = 20);
  std::string id() const override { return "cantor2d"; }
  int dim() const override { return 2; }
  double boundary_dim() const override { return std::log(2.0) / std::log(3.0); }
  double distance(const Vec& X) const override;
  double box_distance(const Vec& lo, const Vec& hi) const override;
  Vec project(const Vec& X) const override;
  Box bounding_box() const override { return box_; }
  std::vector<Vec> boundary_points(double spacing,
                                   const Box& within) const override;
  int depth() const { return depth_; }

  // Distance of a 1-d interval [a,b] to the Cantor set (0 if it meets it).
  double axis_distance(double a, double b) const;

 private:
  Box box_;
  int depth_;
};

// Sawtooth domain over a piecewise-linear graph A : R -> R with |A'| = lip:
// Omega = {(x,t): |t - A(x)| > M dist(x, F)} with F = R \ (-1,1) kept and
// M = 2 lip. The boundary is an explicit polyline: the graph over F plus
// the cone over (-1,1). The interior weight anchors on the full graph.
class SawtoothGraph : public Domain {
 public:
  SawtoothGraph(double lip, Box box);
  std::string id() const override { return "sawtooth"; }
  int dim() const override { return 2; }
  double boundary_dim() const override { return 1.0; }
  double distance(const Vec& X) const override;
  double box_distance(const Vec& lo, const Vec& hi) const override;
  Vec project(const Vec& X) const override;
  Box bounding_box() const override { return box_; }
  bool inside(const Vec& X) const override;
  double weight_distance(const Vec& X) const override;
  std::vector<Vec> boundary_points(double spacing,
                                   const Box& within) const override;

  double graph_value(double x) const;  // A(x)
  double lip() const { return lip_; }
  double cone_slope() const { return M_; }
  // Polyline of the boundary of Omega (open polygonal chain).
  const std::vector<Eigen::Vector2d>& boundary_polyline() const {
    return poly_;
  }

 private:
  double lip_, M_;
  Box box_;
  std::vector<Eigen::Vector2d> poly_;   // boundary of Omega_s
  std::vector<Eigen::Vector2d> graph_;  // full graph of A (weight anchor)
};

// Gamma given by a finite sample set; distances are resolution-bounded by
// the sampling.
class PointCloud : public Domain {
 public:
  PointCloud(std::vector<Vec> pts, double declared_dim, Box box);
  std::string id() const override { return "point-cloud"; }
  int dim() const override { return static_cast<int>(pts_[0].size()); }
  double boundary_dim() const override { return d_; }
  double distance(const Vec& X) const override;
  double box_distance(const Vec& lo, const Vec& hi) const override;
  Vec project(const Vec& X) const override;
  Box bounding_box() const override { return box_; }
  std::vector<Vec> boundary_points(double spacing,
                                   const Box& within) const override;

 private:
  std::vector<Vec> pts_;
  double d_;
  Box box_;
};

// ---------------------------------------------------------------------------
// Corkscrew points

struct CorkscrewOptions {
  double c1_max = 64.0;   // reject if the achieved constant exceeds this
  int samples = 256;      // low-discrepancy candidates in B(x, r)
};

struct CorkscrewResult {
  Vec point;
  double delta;        // dist(point, Gamma)
  double achieved_c1;  // r / delta
};

// Returns X in B(x, r) maximizing dist(., Gamma) over a deterministic
// candidate set (normal-direction hints first, then Halton samples).
// Throws HypothesisViolation when no candidate certifies quantitative
// openness at this scale.
CorkscrewResult corkscrew(const Domain& dom, const Vec& x, double r,
                          const CorkscrewOptions& opt = {});

// ---------------------------------------------------------------------------
// Harnack chains

struct Chain {
  std::vector<Vec> points;    // Z_0 .. Z_N
  std::vector<double> radii;  // delta(Z_i)/2
  double scale = 0.0;         // the r the chain was requested at
  double lambda = 0.0;        // |X-Y| / r

  int length() const { return static_cast<int>(points.size()) - 1; }

  struct Validation {
    bool step_ok = false;       // |Z_i - Z_i+1| <= delta(Z_i)/2
    double min_delta_over_r = 0.0;
    double enclosure = 0.0;     // max_i |Z_i - X| / (Lambda * r)
    bool ok() const { return step_ok && min_delta_over_r > 0.0; }
  };
  Validation validate(const Domain& dom) const;
};

struct ChainOptions {
  int budget = 4096;           // hard cap on chain length
  double floor_frac = 1e-4;    // abort if delta drops below floor_frac * r
  CorkscrewOptions corkscrew;
};

// Builds a chain X -> Y with steps |Z_i - Z_i+1| <= delta(Z_i)/2.
// Two-phase construction: a direct segment walk when the endpoints see each
// other inside Omega, otherwise a dyadic ladder of corkscrew points over the
// projections of X and Y joined at the top scale.
Chain harnack_chain(const Domain& dom, const Vec& X, const Vec& Y, double r,
                    const ChainOptions& opt = {});

// ---------------------------------------------------------------------------
// Whitney decomposition

struct WhitneyCube {
  Vec center;
  double side = 0.0;
  int gen = 0;  // side = box.side * 2^-gen
  std::vector<int> neighbors;  // indices of touching cubes
};

struct WhitneySet {
  Box box;
  double base_side = 0.0;   // root cube side; box extents are multiples
  double dim_factor = 0.0;  // sqrt(n), cached
  std::vector<WhitneyCube> cubes;
  int k_max = 0;

  double side_at(int gen) const {
    return base_side / static_cast<double>(int64_t(1) << gen);
  }
  // Cells at the resolution floor that still meet Gamma; they are reported,
  // not emitted.
  long truncated_count = 0;
  double truncated_volume = 0.0;
  double exterior_volume = 0.0;

  double diam(int i) const { return cubes[i].side * dim_factor; }
  // Index of the cube containing X, or -1.
  int find(const Vec& X) const;
  // Integer lattice coordinates of a point at generation g.
  std::vector<int64_t> lattice_key(const Vec& X, int g) const;

  struct Validation {
    bool wq11_ok = false;  // 4 diam I <= dist(4I) <= dist(I) <= 12 diam I
    bool wq12_ok = false;  // adjacent side ratios in {1/2, 1, 2}
    bool cover_ok = false; // emitted + truncated + exterior tile the box
    double worst_lower = 0.0, worst_upper = 0.0;
  };
  Validation validate(const Domain& dom) const;

  void write_csv(const std::string& path) const;

 private:
  friend WhitneySet whitney(const Domain&, const Box&, int);
  mutable std::vector<std::unordered_map<int64_t, int>> index_;  // per gen
  void build_index() const;
  int64_t hash_key(const std::vector<int64_t>& key, int g) const;
};

// Dyadic Whitney decomposition of Omega inside `box` down to generation
// k_max (cube side base_side * 2^-gen, base_side the smallest box extent;
// the box extents must be integer multiples of it). Cubes satisfy
// 4 diam I <= dist(4I, Gamma) <= dist(I, Gamma) <= 12 diam I; the uncovered
// collar at the resolution floor is reported.
WhitneySet whitney(const Domain& dom, const Box& box, int k_max);

}  // namespace delab::geo

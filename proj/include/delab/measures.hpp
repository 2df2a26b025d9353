#pragma once

#include <memory>
#include <string>
#include <vector>

#include "delab/core.hpp"
#include "delab/geometry.hpp"

namespace delab::meas {

struct WeightedPoint {
  Vec x;
  double w = 0.0;
};

// Boundary measure mu, described through a ball-mass oracle and a weighted
// sampler. Centers may lie off the boundary (the oracle restricts to Gamma).
class BoundaryMeasure {
 public:
  virtual ~BoundaryMeasure() = default;
  virtual std::string id() const = 0;
  virtual double dim() const = 0;
  virtual double ball_mass(const Vec& x, double r) const = 0;
  virtual std::vector<WeightedPoint> samples(double spacing,
                                             const Box& within) const = 0;
};

using MeasurePtr = std::shared_ptr<const BoundaryMeasure>;

// Lebesgue measure on the flat piece R^d x {0} (works for the half-space
// boundary as well).
class LebesgueOnFlat : public BoundaryMeasure {
 public:
  LebesgueOnFlat(int d, int n);
  std::string id() const override { return "lebesgue"; }
  double dim() const override { return d_; }
  double ball_mass(const Vec& x, double r) const override;
  std::vector<WeightedPoint> samples(double spacing,
                                     const Box& within) const override;

 private:
  int d_, n_;
  double unit_ball_;
};

// The natural self-similar measure on the middle-thirds Cantor set,
// mu(left third) = mu(right third) = 1/2.
class CantorMeasure : public BoundaryMeasure {
 public:
  explicit CantorMeasure(int depth = 32) : depth_(depth) {}
  std::string id() const override { return "cantor"; }
  double dim() const override { return std::log(2.0) / std::log(3.0); }
  double ball_mass(const Vec& x, double r) const override;
  std::vector<WeightedPoint> samples(double spacing,
                                     const Box& within) const override;
  double interval_mass(double a, double b) const;

 private:
  int depth_;
};

// Truncated Riesz product density prod_{j<=J} (1 + a cos(2 pi q^j x)) on the
// line, extended periodically; singular-looking at desk scale but doubling.
class RieszProduct : public BoundaryMeasure {
 public:
  RieszProduct(double a = 0.9, int J = 8, int lacunarity = 4);
  std::string id() const override { return "riesz"; }
  double dim() const override { return 1.0; }
  double ball_mass(const Vec& x, double r) const override;
  std::vector<WeightedPoint> samples(double spacing,
                                     const Box& within) const override;
  double cdf(double x) const;  // integral of the density over [0, x]
  double density(double x) const;

 private:
  double a_;
  int J_, q_;
  std::vector<double> table_;  // cumulative density at resolution 2^-16
};

// Composite measure for a ball deprived of a flat piece (n = 3, d = 1):
// length measure on the removed diameter plus dist(., diameter)^(d+1-n)
// times surface measure on the sphere. In latitude/longitude coordinates
// the weighted sphere part is the uniform measure R dtheta dphi.
class SphereAndFlat : public BoundaryMeasure {
 public:
  explicit SphereAndFlat(double radius = 1.0) : R_(radius) {}
  std::string id() const override { return "hausdorff-mixed"; }
  double dim() const override { return 1.0; }
  double ball_mass(const Vec& x, double r) const override;
  std::vector<WeightedPoint> samples(double spacing,
                                     const Box& within) const override;
  double flat_mass(const Vec& x, double r) const;
  double sphere_mass(const Vec& x, double r) const;

 private:
  double R_;
};

// Arc-length measure on a polyline boundary (the sawtooth boundary measure;
// the codimension weight dist^(d+1-n) is identically 1 when n = 2, d = 1).
class PolylineMeasure : public BoundaryMeasure {
 public:
  explicit PolylineMeasure(std::shared_ptr<const geo::SawtoothGraph> dom)
      : dom_(std::move(dom)) {}
  std::string id() const override { return "mixed-sawtooth"; }
  double dim() const override { return 1.0; }
  double ball_mass(const Vec& x, double r) const override;
  std::vector<WeightedPoint> samples(double spacing,
                                     const Box& within) const override;

 private:
  std::shared_ptr<const geo::SawtoothGraph> dom_;
};

// ---------------------------------------------------------------------------
// Interior weights

// Interior weight w defining dm = w dX. `clamp` floors the anchored distance
// so that evaluations arbitrarily close to the boundary stay finite; callers
// tie it to their resolution (0.5 h on grids, half a quadrature cell in
// integrals).
class Weight {
 public:
  virtual ~Weight() = default;
  virtual std::string id() const = 0;
  virtual double eval(const Vec& X, double clamp) const = 0;
  virtual double gamma() const { return 0.0; }
};

using WeightPtr = std::shared_ptr<const Weight>;

class UnitWeight : public Weight {
 public:
  std::string id() const override { return "unit"; }
  double eval(const Vec&, double) const override { return 1.0; }
};

// w(X) = dist(X, anchor set)^-gamma. The admissible range
// gamma in (n - d - 2, n - d) is enforced unless `strict` is off (audits
// probe inadmissible exponents on purpose).
class PowerDistance : public Weight {
 public:
  PowerDistance(geo::DomainPtr dom, double gamma, bool strict = true);
  std::string id() const override { return "power-distance"; }
  double eval(const Vec& X, double clamp) const override;
  double gamma() const override { return gamma_; }
  static void check_range(const geo::Domain& dom, double gamma);

 private:
  geo::DomainPtr dom_;
  double gamma_;
};

// w(x, t) = omega(x) |t|^-gamma with omega(x) = |x|^beta an A2 weight on the
// tangential factor (requires |beta| < d).
class A2Product : public Weight {
 public:
  A2Product(geo::DomainPtr dom, int d, double beta, double gamma,
            bool strict = true);
  std::string id() const override { return "a2-product"; }
  double eval(const Vec& X, double clamp) const override;
  double gamma() const override { return gamma_; }

 private:
  geo::DomainPtr dom_;
  int d_;
  double beta_, gamma_;
};

// w(X) = delta(X)^(1-n) mu(Gamma cap B(X, 2 delta(X))): the weight that makes
// rho uniformly comparable to 1 for any doubling boundary measure.
class BoundaryMassWeight : public Weight {
 public:
  BoundaryMassWeight(geo::DomainPtr dom, MeasurePtr mu)
      : dom_(std::move(dom)), mu_(std::move(mu)) {}
  std::string id() const override { return "boundary-mass"; }
  double eval(const Vec& X, double clamp) const override;

 private:
  geo::DomainPtr dom_;
  MeasurePtr mu_;
};

// ---------------------------------------------------------------------------
// Interior masses and the intertwining ratio

struct MassQuote {
  double value = 0.0;
  double error = 0.0;  // Richardson-style estimate
};

struct MBallOptions {
  int cells = 0;  // cells per axis; 0 = 64 in 2d, 32 in 3d
};

// m(B(x,r) cap Omega) by midpoint product quadrature with one Richardson
// refinement; the weight is clamped at half a quadrature cell.
MassQuote m_ball(const geo::Domain& dom, const Weight& w, const Vec& x,
                 double r, const MBallOptions& opt = {});

// Cumulative radial masses m(B(center, r)) for r <= r_max from one sweep;
// log-log interpolated. Shared by Green profiles, H-norms and rho tables.
class RadialMassTable {
 public:
  RadialMassTable(const geo::Domain& dom, const Weight& w, Vec center,
                  double r_max, int cells = 0);
  double mass(double r) const;
  double r_max() const { return r_max_; }

 private:
  Vec center_;
  double r_max_;
  std::vector<double> radii_, cum_;
};

// rho(x, r) = m(B(x,r) cap Omega) / (r mu(B(x,r))).
double rho(const geo::Domain& dom, const BoundaryMeasure& mu, const Weight& w,
           const Vec& x, double r);

// ---------------------------------------------------------------------------
// Hypothesis audits

struct AuditOptions {
  int n_scales = 8;
  int n_points = 32;
  double r_max = 0.0;        // 0: quarter of the box side
  double spacing = 0.0;      // sampler spacing; 0: r_max / 16
  double eps_min = 0.05;     // H5 margin: pass iff |slope| <= 1 - eps_min
  double doubling_cap = 1e6; // H3/H4 constants must stay below this
  double h6_cap = 64.0;      // H6' oscillation cap on Whitney cubes
  int whitney_kmax = 6;      // H6' probe resolution
};

struct AuditReport {
  std::string hypothesis;
  double constant = 0.0;
  double exponent = 0.0;
  double band = 0.0;  // regression stderr on the exponent
  bool pass = false;
  bool refinement_stable = true;
  int n_scales = 0, n_points = 0;
  std::vector<double> scales;
  std::string note;
};

enum class Hypothesis { H3, H4, H5, H6prime };

AuditReport audit(const geo::Domain& dom, const BoundaryMeasure& mu,
                  const Weight& w, Hypothesis hyp,
                  const AuditOptions& opt = {});

// Runs the audit at the stated and at doubled resolution and sets the
// refinement-stability flag (constants within x2).
AuditReport audit_with_refinement(const geo::Domain& dom,
                                  const BoundaryMeasure& mu, const Weight& w,
                                  Hypothesis hyp, const AuditOptions& opt = {});

}  // namespace delab::meas

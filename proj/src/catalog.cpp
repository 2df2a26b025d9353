#include "delab/catalog.hpp"

#include <cmath>

namespace delab::cat {

namespace {

// Counting measure on a point cloud.
class CountingMeasure : public meas::BoundaryMeasure {
 public:
  CountingMeasure(std::vector<Vec> pts, double d)
      : pts_(std::move(pts)), d_(d) {}
  std::string id() const override { return "counting"; }
  double dim() const override { return d_; }
  double ball_mass(const Vec& x, double r) const override {
    double m = 0.0;
    for (const auto& p : pts_)
      if ((p - x).norm() < r) m += 1.0;
    return m / pts_.size();
  }
  std::vector<meas::WeightedPoint> samples(double,
                                           const Box& within) const override {
    std::vector<meas::WeightedPoint> out;
    for (const auto& p : pts_)
      if (within.contains(p, 1e-12)) out.push_back({p, 1.0 / pts_.size()});
    return out;
  }

 private:
  std::vector<Vec> pts_;
  double d_;
};

double jget(const nlohmann::json& j, const std::string& key, double dflt) {
  return j.contains(key) ? j.at(key).get<double>() : dflt;
}

}  // namespace

geo::DomainPtr make_domain(const std::string& id,
                           const nlohmann::json& params) {
  if (id == "halfplane") {
    Vec lo(2), hi(2);
    lo << -1.5, 0.0;
    hi << 1.5, 1.5;
    return std::make_shared<geo::HalfSpace>(2, Box(lo, hi));
  }
  if (id == "axis3d")
    return std::make_shared<geo::FlatBoundary>(1, 3, Box::cube(3, -0.5, 0.5));
  if (id == "ball-minus-diameter")
    return std::make_shared<geo::BallMinusFlat>(3, 1, jget(params, "radius", 1.0));
  if (id == "cantor2d") {
    Vec lo(2), hi(2);
    lo << -0.25, -0.75;
    hi << 1.25, 0.75;
    return std::make_shared<geo::CantorBoundary>(Box(lo, hi),
                                                 (int)jget(params, "depth", 20));
  }
  if (id == "sawtooth")
    return std::make_shared<geo::SawtoothGraph>(jget(params, "lip", 0.5),
                                                Box::cube(2, -2.0, 2.0));
  if (id == "point-cloud") {
    const int count = (int)jget(params, "count", 64);
    std::vector<Vec> pts;
    for (int i = 0; i < count; ++i) {
      const double th = 2.0 * M_PI * halton(i + 1, 2);
      Vec p(2);
      p << 0.5 * std::cos(th), 0.5 * std::sin(th);
      pts.push_back(p);
    }
    return std::make_shared<geo::PointCloud>(std::move(pts), 1.0,
                                             Box::cube(2, -1.0, 1.0));
  }
  throw ConfigError("unknown domain id '" + id + "'");
}

meas::MeasurePtr make_measure(const std::string& id, geo::DomainPtr dom,
                              const nlohmann::json& params) {
  if (id == "lebesgue") {
    const int n = dom->dim();
    const int d = static_cast<int>(std::lround(dom->boundary_dim()));
    return std::make_shared<meas::LebesgueOnFlat>(d, n);
  }
  if (id == "cantor") return std::make_shared<meas::CantorMeasure>();
  if (id == "riesz")
    return std::make_shared<meas::RieszProduct>(jget(params, "a", 0.9),
                                                (int)jget(params, "J", 8));
  if (id == "hausdorff-mixed")
    return std::make_shared<meas::SphereAndFlat>(jget(params, "radius", 1.0));
  if (id == "mixed-sawtooth") {
    auto st = std::dynamic_pointer_cast<const geo::SawtoothGraph>(dom);
    if (!st) throw ConfigError("mixed-sawtooth measure needs the sawtooth domain");
    return std::make_shared<meas::PolylineMeasure>(st);
  }
  if (id == "counting") {
    auto pts = dom->boundary_points(0.05, dom->bounding_box());
    return std::make_shared<CountingMeasure>(std::move(pts),
                                             dom->boundary_dim());
  }
  throw ConfigError("unknown measure id '" + id + "'");
}

meas::WeightPtr make_weight(const std::string& kind, double gamma, double beta,
                            geo::DomainPtr dom, meas::MeasurePtr mu,
                            bool strict) {
  if (kind == "unit") return std::make_shared<meas::UnitWeight>();
  if (kind == "power-distance")
    return std::make_shared<meas::PowerDistance>(dom, gamma, strict);
  if (kind == "a2-product") {
    const int d = static_cast<int>(std::lround(dom->boundary_dim()));
    return std::make_shared<meas::A2Product>(dom, d, beta, gamma, strict);
  }
  if (kind == "boundary-mass")
    return std::make_shared<meas::BoundaryMassWeight>(dom, std::move(mu));
  throw ConfigError("unknown weight kind '" + kind + "'");
}

std::string default_measure(const std::string& domain_id) {
  if (domain_id == "halfplane" || domain_id == "axis3d") return "lebesgue";
  if (domain_id == "cantor2d") return "cantor";
  if (domain_id == "ball-minus-diameter") return "hausdorff-mixed";
  if (domain_id == "sawtooth") return "mixed-sawtooth";
  if (domain_id == "point-cloud") return "counting";
  throw ConfigError("no default measure for domain '" + domain_id + "'");
}

double default_gamma(const std::string& domain_id) {
  if (domain_id == "halfplane") return 0.0;
  if (domain_id == "axis3d") return 1.0;
  if (domain_id == "cantor2d") return 0.37;
  if (domain_id == "ball-minus-diameter") return 1.0;
  if (domain_id == "sawtooth") return 0.5;
  return 0.0;
}

std::vector<std::string> domain_ids() {
  return {"halfplane", "axis3d", "ball-minus-diameter", "cantor2d",
          "sawtooth", "point-cloud"};
}

}  // namespace delab::cat

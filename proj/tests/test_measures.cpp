#include "doctest.h"
#include "delab/measures.hpp"
#include "delab/catalog.hpp"

#include <cmath>

using namespace delab;
using namespace delab::meas;

namespace {
Vec pt2(double x, double y) { Vec p(2); p << x, y; return p; }
Vec pt3(double x, double y, double z) { Vec p(3); p << x, y, z; return p; }
}

TEST_CASE("lebesgue ball mass on a line in R^3") {
  LebesgueOnFlat mu(1, 3);
  CHECK(mu.ball_mass(pt3(0.3, 0, 0), 0.25) == doctest::Approx(0.5));
  // off-boundary center: chord length
  CHECK(mu.ball_mass(pt3(0, 0.3, 0), 0.5) ==
        doctest::Approx(2.0 * std::sqrt(0.25 - 0.09)));
  CHECK(mu.ball_mass(pt3(0, 0.6, 0), 0.5) == doctest::Approx(0.0));
}

TEST_CASE("cantor measure self-similarity") {
  CantorMeasure mu;
  for (int k = 1; k <= 10; ++k)
    CHECK(mu.ball_mass(pt2(0, 0), std::pow(3.0, -k)) ==
          doctest::Approx(std::pow(0.5, k)));
  // monotone in r
  double prev = 0.0;
  for (double r : {0.01, 0.05, 0.1, 0.3, 0.7, 1.2}) {
    const double m = mu.ball_mass(pt2(0.5, 0), r);
    CHECK(m >= prev - 1e-15);
    prev = m;
  }
  // additive over the two halves of a dyadic split (exact recursion)
  const double whole = mu.interval_mass(0.0, 1.0);
  const double parts = mu.interval_mass(0.0, 1.0 / 3.0) +
                       mu.interval_mass(1.0 / 3.0, 2.0 / 3.0) +
                       mu.interval_mass(2.0 / 3.0, 1.0);
  CHECK(whole == doctest::Approx(1.0));
  CHECK(parts == doctest::Approx(whole));
}

TEST_CASE("riesz product cdf matches direct quadrature") {
  RieszProduct mu(0.9, 8);
  // oracle: Simpson integration of the truncated density
  auto simpson = [&](double a, double b) {
    const int N = 20000;
    double acc = 0.0;
    const double h = (b - a) / N;
    for (int i = 0; i < N; ++i) {
      const double x0 = a + i * h, x2 = a + (i + 1) * h;
      acc += (mu.density(x0) + 4.0 * mu.density(0.5 * (x0 + x2)) +
              mu.density(x2)) * h / 6.0;
    }
    return acc;
  };
  for (auto [a, b] : std::vector<std::pair<double, double>>{
           {0.1, 0.3}, {0.0, 1.0}, {0.42, 0.87}}) {
    CHECK(mu.cdf(b) - mu.cdf(a) == doctest::Approx(simpson(a, b)).epsilon(1e-4));
  }
  // doubling constant finite at desk scales
  double c3 = 0.0;
  for (double x : {0.1, 0.35, 0.61, 0.9})
    for (double r : {0.002, 0.01, 0.05, 0.2}) {
      const double m1 = mu.ball_mass(pt2(x, 0), r);
      REQUIRE(m1 > 0.0);
      c3 = std::max(c3, mu.ball_mass(pt2(x, 0), 2 * r) / m1);
    }
  CHECK(c3 < 30.0);
  CHECK(c3 > 2.0);  // genuinely irregular density
}

TEST_CASE("interior mass oracles on the axis in R^3") {
  auto dom = cat::make_domain("axis3d");
  PowerDistance w(dom, 1.0);
  // closed form via the polar oracle: m(B(x,r)) = pi^2 r^2 for x on the axis
  // (2D polar integral of 1/rho over the half-disc, rotated).
  double oracle = 0.0;
  {
    const int N = 2000;
    for (int i = 0; i < N; ++i) {
      const double rho = (i + 0.5) / N;  // radius fraction
      // area element: the half-disc {rho^2 + z^2 < 1, rho > 0}
      const double zmax = std::sqrt(std::max(0.0, 1.0 - rho * rho));
      oracle += 2.0 * M_PI * zmax * 2.0 / N;  // integrand rho^-1 * rho drho dz dphi
    }
  }
  CHECK(oracle == doctest::Approx(M_PI * M_PI).epsilon(1e-3));
  for (double r : {0.1, 0.2}) {
    const auto q = m_ball(*dom, w, pt3(0, 0, 0), r, {48});
    CHECK(q.value == doctest::Approx(M_PI * M_PI * r * r).epsilon(0.02));
  }
  // doubling ratio 2^(n - gamma) = 4 for the flat configuration
  const double m1 = m_ball(*dom, w, pt3(0, 0, 0), 0.05, {48}).value;
  const double m2 = m_ball(*dom, w, pt3(0, 0, 0), 0.10, {48}).value;
  CHECK(m2 / m1 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("unit weight gives Lebesgue volume") {
  auto dom = cat::make_domain("halfplane");
  UnitWeight w;
  const auto q = m_ball(*dom, w, pt2(0.0, 0.5), 0.2);
  CHECK(q.value == doctest::Approx(M_PI * 0.04).epsilon(0.01));
}

TEST_CASE("rho exponent equals n-d-1-gamma on flat boundaries") {
  auto dom = cat::make_domain("halfplane");
  LebesgueOnFlat mu(1, 2);
  for (double gamma : {0.0, 0.5, -0.5}) {
    PowerDistance w(dom, gamma);
    std::vector<double> rr, pp;
    for (double r : {0.05, 0.1, 0.2, 0.4}) {
      rr.push_back(r);
      pp.push_back(rho(*dom, mu, w, pt2(0, 0), r));
    }
    const auto fit = fit_loglog(rr, pp);
    CAPTURE(gamma);
    CHECK(fit.slope == doctest::Approx(-gamma).epsilon(0.05));
  }
  // gamma = n - d - 1 = 0: rho constant in r
  PowerDistance w0(dom, 0.0);
  const double r1 = rho(*dom, mu, w0, pt2(0, 0), 0.05);
  const double r2 = rho(*dom, mu, w0, pt2(0, 0), 0.4);
  CHECK(r1 == doctest::Approx(r2).epsilon(0.02));
}

TEST_CASE("rho homogeneity on flat boundaries is exact") {
  auto dom = cat::make_domain("axis3d");
  LebesgueOnFlat mu(1, 3);
  PowerDistance w(dom, 1.0);  // sigma = n-d-1-gamma = 0
  const double a = rho(*dom, mu, w, pt3(0, 0, 0), 0.05);
  const double b = rho(*dom, mu, w, pt3(0, 0, 0), 0.15);
  CHECK(a == doctest::Approx(b).epsilon(0.03));
}

TEST_CASE("boundary-mass weight intertwines the measures") {
  auto dom = cat::make_domain("halfplane");
  auto mu = std::make_shared<RieszProduct>(0.9, 8);
  BoundaryMassWeight w(dom, mu);
  // st10: m(B(x,r)) ~ r mu(B(x,r)) uniformly
  double lo = 1e300, hi = 0.0;
  for (double x : {-0.4, 0.0, 0.55})
    for (double r : {0.05, 0.1, 0.2}) {
      const double val = rho(*dom, *mu, w, pt2(x, 0), r);
      lo = std::min(lo, val);
      hi = std::max(hi, val);
    }
  CHECK(hi / lo < 6.0);
}

TEST_CASE("weight admissibility is enforced at construction") {
  auto dom = cat::make_domain("halfplane");  // n=2, d=1: gamma in (-1, 1)
  CHECK_THROWS_AS(PowerDistance(dom, 1.0), ConfigError);
  CHECK_THROWS_AS(PowerDistance(dom, -1.0), ConfigError);
  CHECK_NOTHROW(PowerDistance(dom, 0.99));
  CHECK_NOTHROW(PowerDistance(dom, 1.0, false));  // audits may probe it
  CHECK_THROWS_AS(A2Product(dom, 1, 1.5, 0.0), ConfigError);
}

TEST_CASE("audit: lebesgue doubling constant is 2^d") {
  auto dom = cat::make_domain("halfplane");
  LebesgueOnFlat mu(1, 2);
  PowerDistance w(dom, 0.0);
  AuditOptions opt;
  opt.n_points = 8;
  const auto rep = audit(*dom, mu, w, Hypothesis::H3, opt);
  CHECK(rep.pass);
  CHECK(rep.constant == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("audit: H5 passes at the center of the admissible range") {
  auto dom = cat::make_domain("halfplane");
  LebesgueOnFlat mu(1, 2);
  PowerDistance w(dom, 0.0);  // slope 0
  AuditOptions opt;
  opt.n_points = 6;
  const auto rep = audit(*dom, mu, w, Hypothesis::H5, opt);
  CHECK(rep.pass);
  CHECK(std::abs(rep.exponent) < 0.1);
}

TEST_CASE("audit: H5 flags the inadmissible endpoint gamma = n-d") {
  auto dom = cat::make_domain("halfplane");
  LebesgueOnFlat mu(1, 2);
  PowerDistance w(dom, 1.0, false);  // weight outside the admissible range
  AuditOptions opt;
  opt.n_points = 6;
  const auto rep = audit(*dom, mu, w, Hypothesis::H5, opt);
  CHECK_FALSE(rep.pass);
  CHECK(std::abs(rep.exponent) == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("audit: H4 and H6-prime on the degenerate axis weight") {
  auto dom = cat::make_domain("axis3d");
  LebesgueOnFlat mu(1, 3);
  PowerDistance w(dom, 1.0);
  AuditOptions opt;
  opt.n_points = 4;
  opt.n_scales = 5;
  const auto h4 = audit(*dom, mu, w, Hypothesis::H4, opt);
  CHECK(h4.pass);
  CHECK(h4.constant == doctest::Approx(4.0).epsilon(0.1));  // 2^(n-gamma)
  CHECK(h4.exponent == doctest::Approx(2.0).epsilon(0.1));  // d_m = n - gamma
  const auto h6 = audit(*dom, mu, w, Hypothesis::H6prime, opt);
  CHECK(h6.pass);
  CHECK(h6.constant > 1.0);
}

TEST_CASE("radial mass table matches direct quadrature") {
  auto dom = cat::make_domain("halfplane");
  PowerDistance w(dom, 0.5);
  RadialMassTable tab(*dom, w, pt2(0.0, 0.0), 0.5, 384);
  for (double r : {0.06, 0.12, 0.25, 0.45}) {
    const double direct = m_ball(*dom, w, pt2(0, 0), r).value;
    CHECK(tab.mass(r) == doctest::Approx(direct).epsilon(0.05));
  }
}

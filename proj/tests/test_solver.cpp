#include "doctest.h"
#include "delab/solve.hpp"
#include "delab/catalog.hpp"

#include <random>

using namespace delab;
using namespace delab::disc;

namespace {
Vec pt2(double x, double y) { Vec p(2); p << x, y; return p; }

Grid halfplane_grid(int cells, double gamma = 0.0) {
  auto dom = cat::make_domain("halfplane");
  auto w = gamma == 0.0
               ? meas::WeightPtr(std::make_shared<meas::UnitWeight>())
               : meas::WeightPtr(std::make_shared<meas::PowerDistance>(dom, gamma));
  return Grid::make(dom, w, dom->bounding_box(), cells);
}
}

TEST_CASE("node classification follows the pin radius") {
  const Grid g = halfplane_grid(48);
  for (long i = 0; i < g.size(); ++i) {
    const double d = g.dom->distance(g.center(i));
    if (g.cls[i] == NodeClass::Pinned) CHECK(d <= g.pin_radius + 1e-12);
    if (g.cls[i] == NodeClass::Interior) CHECK(d > g.pin_radius);
  }
  CHECK(g.count(NodeClass::Pinned) > 0);
  CHECK(g.count(NodeClass::Outer) > 0);
}

TEST_CASE("unweighted assembly is the 5-point stencil") {
  const Grid g = halfplane_grid(24);
  const auto sys = assemble(g, CoefficientField::identity(2));
  CHECK(sys.m_matrix);
  CHECK(sys.symmetric);
  // interior row sums vanish; off-diagonals are -1 (h^(n-2) = 1 in 2d)
  for (int k = 0; k < sys.full.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.full, k); it; ++it)
      if (it.row() != it.col()) CHECK(it.value() == doctest::Approx(-1.0));
  const Vec ones = Vec::Ones(g.size());
  const Vec row_sums = sys.full * ones;
  for (long i : sys.interior_nodes)
    CHECK(std::abs(row_sums[i]) < 1e-12);
  // symmetry entrywise
  Eigen::SparseMatrix<double> diff = sys.full - Eigen::SparseMatrix<double>(sys.full.transpose());
  CHECK(diff.coeffs().abs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("degenerate face weights decay like t^-gamma") {
  const double gamma = 0.5;
  const Grid g = halfplane_grid(32, gamma);
  const auto sys = assemble(g, CoefficientField::identity(2));
  // vertical column above x ~ 0.0: the t-face conductance between cells at
  // heights t, t+h is the harmonic mean of the clamped weights
  std::vector<int> I(2);
  for (int j = 2; j + 2 < g.dims[1]; ++j) {
    I[0] = g.dims[0] / 2;
    I[1] = j;
    const long a = g.index(I);
    const long b = g.neighbor(a, 1, +1);
    const double ta = g.center(a)[1], tb = g.center(b)[1];
    const double want = 2.0 / (std::pow(ta, gamma) + std::pow(tb, gamma));
    CHECK(-sys.full.coeff(a, b) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("constant and affine data are reproduced exactly") {
  const Grid g = halfplane_grid(32);
  const auto sys = assemble(g, CoefficientField::identity(2));
  {
    Vec data = Vec::Constant(g.size(), 3.25);
    auto [u, rep] = solve_dirichlet(sys, data);
    for (long i : sys.interior_nodes)
      CHECK(u.values[i] == doctest::Approx(3.25).epsilon(1e-9));
  }
  {
    auto f = [](const Vec& X) { return 0.7 * X[0] - 0.3 * X[1] + 1.0; };
    Vec data = Vec::Zero(g.size());
    for (long i = 0; i < g.size(); ++i) data[i] = f(g.center(i));
    auto [u, rep] = solve_dirichlet(sys, data, nullptr, {1e-12, 0});
    for (long i : sys.interior_nodes)
      CHECK(u.values[i] == doctest::Approx(f(g.center(i))).epsilon(1e-7));
  }
}

TEST_CASE("power reference converges with order near one") {
  const double gamma = 0.5;
  const double alpha = gamma + 1.0;  // gamma - (n-d-2) on the half-plane
  std::vector<double> hs, errs;
  for (int cells : {16, 32, 64}) {
    const Grid g = halfplane_grid(cells, gamma);
    const auto sys = assemble(g, CoefficientField::identity(2));
    auto ref = [&](const Vec& X) { return std::pow(X[1], alpha); };
    const Vec data = boundary_data(g, ref);
    auto [u, rep] = solve_dirichlet(sys, data);
    double err = 0.0, scale = 0.0;
    for (long i : sys.interior_nodes) {
      err = std::max(err, std::abs(u.values[i] - ref(g.center(i))));
      scale = std::max(scale, ref(g.center(i)));
    }
    hs.push_back(g.h);
    errs.push_back(err / scale);
  }
  CHECK(errs.back() < 0.05);
  CHECK(fit_loglog(hs, errs).slope >= 0.8);
}

TEST_CASE("solve reports residuals and fails loudly on tiny caps") {
  const Grid g = halfplane_grid(32);
  const auto sys = assemble(g, CoefficientField::identity(2));
  Vec data = Vec::Zero(g.size());
  for (long i : sys.data_nodes) data[i] = g.center(i)[0];
  auto [u, rep] = solve_dirichlet(sys, data);
  CHECK(rep.rel_residual <= 1e-10);
  CHECK(rep.iterations > 0);
  CHECK(rep.energy >= 0.0);
  try {
    solve_dirichlet(sys, data, nullptr, {1e-14, 3});
    CHECK(false);
  } catch (const SolveError& e) {
    CHECK(e.residual_history.size() >= 3);
  }
}

TEST_CASE("discrete maximum principle is exact for the M-matrix path") {
  const Grid g = halfplane_grid(24, 0.5);
  const auto sys = assemble(g, CoefficientField::identity(2));
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  long violations = 0;
  for (int t = 0; t < 200; ++t) {
    Vec data = Vec::Zero(g.size());
    for (long i : sys.data_nodes) data[i] = ud(rng);
    auto [u, rep] = solve_dirichlet(sys, data, nullptr, {1e-12, 0});
    violations += max_principle_violations(sys, u, data);
  }
  CHECK(violations == 0);
}

TEST_CASE("subsolution residuals") {
  const double gamma = 0.5;
  const Grid g = halfplane_grid(32, gamma);
  const auto sys = assemble(g, CoefficientField::identity(2));
  auto refA = [&](const Vec& X) { return std::pow(X[1], 1.5); };
  auto refB = [&](const Vec& X) { return 0.4 - 0.2 * X[0]; };
  const Vec dataA = boundary_data(g, refA);
  const Vec dataB = boundary_data(g, refB);
  auto [uA, ra] = solve_dirichlet(sys, dataA);
  auto [uB, rb] = solve_dirichlet(sys, dataB);
  // solves have vanishing residual
  const auto res = subsolution_residual(sys, uA);
  double scale = 0.0;
  for (long i : sys.interior_nodes)
    scale = std::max(scale, std::abs(uA.values[i]));
  for (long i : sys.interior_nodes)
    CHECK(std::abs(res.values[i]) <= 1e-7 * scale);
  // max of two solutions is a subsolution up to tolerance
  Field m;
  m.grid = &g;
  m.values = uA.values.cwiseMax(uB.values);
  const auto resm = subsolution_residual(sys, m);
  for (long i : sys.interior_nodes)
    CHECK(resm.values[i] <= 1e-7 * scale);
  // u = t^alpha' strictly between the roots: one-signed residual
  auto mid = [&](const Vec& X) {
    return std::pow(std::max(X[1], 0.5 * g.h), 0.75);
  };
  Field um = make_field(g, mid);
  const auto resmid = subsolution_residual(sys, um);
  for (long i : sys.interior_nodes) {
    const Vec c = g.center(i);
    if (c[1] < 4.0 * g.h) continue;  // clamp collar
    CHECK(resmid.values[i] >= -1e-12);
  }
}

TEST_CASE("energy identities") {
  const Grid g = halfplane_grid(32);
  const auto sys = assemble(g, CoefficientField::identity(2));
  Field c = make_field(g, [](const Vec&) { return 2.0; });
  CHECK(energy(sys, c) == doctest::Approx(0.0));
  Field x0 = make_field(g, [](const Vec& X) { return X[0]; });
  const double vol = 3.0 * 1.5;
  CHECK(energy(sys, x0) == doctest::Approx(vol).epsilon(0.05));
  Field sx0 = x0;
  sx0.values *= 3.0;
  CHECK(energy(sys, sx0) == doctest::Approx(9.0 * energy(sys, x0)));
  // galerkin symmetry a(u,v) = a(v,u)
  Field y0 = make_field(g, [](const Vec& X) { return X[1] * X[0]; });
  CHECK(bilinear(sys, x0, y0) == doctest::Approx(bilinear(sys, y0, x0)));
}

TEST_CASE("full-tensor assembly: symmetry and affine exactness") {
  const Grid g = halfplane_grid(24);
  Mat M(2, 2);
  M << 1.0, 0.25, 0.25, 1.0;
  const auto sys = assemble(g, CoefficientField::constant_full(M));
  CHECK_FALSE(sys.m_matrix);
  CHECK(sys.symmetric);
  Eigen::SparseMatrix<double> diff =
      sys.full - Eigen::SparseMatrix<double>(sys.full.transpose());
  CHECK(diff.coeffs().abs().maxCoeff() < 1e-12);
  auto f = [](const Vec& X) { return 0.3 * X[0] + 0.9 * X[1]; };
  Vec data = Vec::Zero(g.size());
  for (long i = 0; i < g.size(); ++i) data[i] = f(g.center(i));
  auto [u, rep] = solve_dirichlet(sys, data, nullptr, {1e-12, 0});
  for (long i : sys.interior_nodes)
    CHECK(u.values[i] == doctest::Approx(f(g.center(i))).epsilon(1e-6));
}

TEST_CASE("transposed coefficients give the transposed operator") {
  const Grid g = halfplane_grid(16);
  Mat M(2, 2);
  M << 1.0, 0.3, -0.3, 1.0;
  const auto a = assemble(g, CoefficientField::constant_full(M));
  const auto b = assemble(g, CoefficientField::constant_full(M.transpose()));
  Eigen::SparseMatrix<double> diff =
      a.full - Eigen::SparseMatrix<double>(b.full.transpose());
  CHECK(diff.coeffs().abs().maxCoeff() < 1e-12);
  CHECK_FALSE(a.symmetric);
}

TEST_CASE("ellipticity probe rejects bad coefficients") {
  const Grid g = halfplane_grid(16);
  CoefficientField bad;
  bad.diagonal = false;
  bad.symmetric = true;
  bad.bound = 2.0;
  Mat M(2, 2);
  M << 1.0, 3.0, 3.0, 1.0;  // indefinite
  bad.full = [M](const Vec&) { return M; };
  CHECK_THROWS_AS(assemble(g, bad), ConfigError);
}

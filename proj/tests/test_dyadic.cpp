#include "doctest.h"
#include "delab/dyadic.hpp"
#include "delab/catalog.hpp"

#include <fstream>
#include <map>
#include <random>
#include <set>

#include "json.hpp"

using namespace delab;
using namespace delab::dyadic;

namespace {
Vec pt2(double x, double y) { Vec p(2); p << x, y; return p; }

// Samples of the unit segment with uniform weights.
std::vector<meas::WeightedPoint> segment_samples(int count) {
  std::vector<meas::WeightedPoint> out;
  for (int i = 0; i < count; ++i)
    out.push_back({pt2(double(i) / count, 0.0), 1.0 / count});
  return out;
}
}

TEST_CASE("literal dyadic intervals pass the cube checker with a0 = 1/2") {
  // Hand-built tree: generation-k cubes are the dyadic intervals
  // [i 2^-k, (i+1) 2^-k) with centered representatives.
  const int ns = 256;
  ChristTree t;
  t.k_min = 1;
  t.k_max = 4;
  for (int i = 0; i < ns; ++i) {
    t.points.push_back(pt2(double(i) / ns, 0.0));
    t.weights.push_back(1.0 / ns);
  }
  const int gens = t.k_max - t.k_min + 1;
  t.by_gen.assign(gens, {});
  t.ancestors.assign(ns, std::vector<int>(gens, -1));
  std::vector<std::vector<int>> grid_ids(gens);
  for (int g = 0; g < gens; ++g) {
    const int k = t.k_min + g;
    const int m = 1 << k;
    grid_ids[g].resize(m);
    for (int i = 0; i < m; ++i) {
      ChristCube q;
      q.id = static_cast<int>(t.cubes.size());
      q.gen = k;
      q.center_sample = static_cast<int>((i + 0.5) * ns / m);
      q.parent = g > 0 ? grid_ids[g - 1][i / 2] : -1;
      t.cubes.push_back(q);
      t.by_gen[g].push_back(q.id);
      grid_ids[g][i] = q.id;
      if (g > 0) t.cubes[q.parent].children.push_back(q.id);
    }
  }
  for (int s = 0; s < ns; ++s)
    for (int g = 0; g < gens; ++g) {
      const int k = t.k_min + g;
      const int i = static_cast<int>(double(s) / ns * (1 << k));
      const int id = grid_ids[g][i];
      t.ancestors[s][g] = id;
      t.cubes[id].samples.push_back(s);
      t.cubes[id].mass += t.weights[s];
    }
  for (auto& q : t.cubes) {
    const Vec& z = t.points[q.center_sample];
    double best = t.side(q.gen);
    for (int s = 0; s < ns; ++s)
      if (t.ancestors[s][q.gen - t.k_min] != q.id)
        best = std::min(best, (t.points[s] - z).norm());
    q.inner_radius = best;
  }
  const auto val = t.validate();
  CHECK(val.partition_ok);
  CHECK(val.nesting_ok);
  CHECK(val.diam_ok);
  CHECK(val.a0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("greedy net construction satisfies the cube axioms") {
  const auto tree = build_christ(segment_samples(512), 1, 5);
  const auto val = tree.validate();
  CHECK(val.partition_ok);
  CHECK(val.nesting_ok);
  CHECK(val.diam_ok);
  CHECK(val.a0 > 0.0);
  // nesting at random samples: the gen-k cube is inside the gen-(k-1) cube
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, 511);
  for (int t = 0; t < 50; ++t) {
    const int s = pick(rng);
    for (int k = 2; k <= 5; ++k) {
      const auto& child = tree.cube(tree.cube_of(s, k));
      const auto& parent = tree.cube(tree.cube_of(s, k - 1));
      std::set<int> ps(parent.samples.begin(), parent.samples.end());
      for (int m : child.samples) CHECK(ps.count(m) == 1);
    }
  }
  // masses sum to one per generation
  for (int g = 0; g < 5; ++g) {
    double mass = 0.0;
    for (int id : tree.by_gen[g]) mass += tree.cube(id).mass;
    CHECK(mass == doctest::Approx(1.0));
  }
}

TEST_CASE("resolution precondition is enforced") {
  CHECK_THROWS_AS(build_christ(segment_samples(16), 1, 6), ConfigError);
}

TEST_CASE("cantor cube masses regress to the similarity dimension") {
  auto dom = cat::make_domain("cantor2d");
  meas::CantorMeasure mu;
  const auto samples = mu.samples(1.0 / 2187.0, dom->bounding_box());
  const auto tree = build_christ(samples, 1, 6);
  std::vector<double> ks, ms;
  for (int g = 0; g < 6; ++g)
    for (int id : tree.by_gen[g]) {
      const auto& q = tree.cube(id);
      if (q.mass <= 0) continue;
      ks.push_back(q.gen);
      ms.push_back(std::log2(q.mass));
    }
  const auto fit = fit_line(ks, ms);
  const double dC = std::log(2.0) / std::log(3.0);
  CHECK(fit.slope == doctest::Approx(-dC).epsilon(0.25));
  // nonzero masses live in the self-similar band
  for (int g = 2; g < 6; ++g)
    for (int id : tree.by_gen[g]) {
      const auto& q = tree.cube(id);
      if (q.mass <= 0) continue;
      const double expected = std::pow(2.0, -q.gen * dC);
      CHECK(q.mass >= expected / 64.0);
      CHECK(q.mass <= expected * 64.0);
    }
}

namespace {
struct HalfplaneFixture {
  geo::DomainPtr dom = cat::make_domain("halfplane");
  meas::MeasurePtr mu = cat::make_measure("lebesgue", dom);
  meas::WeightPtr w = std::make_shared<meas::PowerDistance>(dom, 0.5);
  geo::WhitneySet ws = geo::whitney(*dom, dom->bounding_box(), 8);
  ChristTree tree;
  std::unique_ptr<RegionMap> rm;

  HalfplaneFixture() {
    const auto samples = mu->samples(3.0 / 512.0, dom->bounding_box());
    tree = build_christ(samples, 0, 5);
    rm = std::make_unique<RegionMap>(dom, &tree, &ws, w);
  }
};
}

TEST_CASE("whitney regions: corkscrew cube, uniform cardinality, prU") {
  HalfplaneFixture fx;
  std::map<int, std::vector<double>> star_by_gen;
  for (const auto& q : fx.tree.cubes) {
    const auto& reg = fx.rm->region(q.id);
    if (q.gen > 4) continue;
    CAPTURE(q.gen);
    CHECK(!reg.wq.empty());
    CHECK(reg.corkscrew_cube >= 0);
    CHECK(std::binary_search(reg.wq.begin(), reg.wq.end(),
                             reg.corkscrew_cube));
    CHECK(!reg.wq_star.empty());
    star_by_gen[q.gen].push_back(double(reg.wq_star.size()));

    // prU: the fattened region stays at scale l(Q)
    const double lq = fx.tree.side(q.gen);
    const Vec z = fx.tree.center(q.id);
    double diam = 0.0, dist = 1e300;
    for (int i : reg.wq_star) {
      const auto& c = fx.ws.cubes[i];
      diam = std::max(diam, (c.center - z).norm() + c.side);
      double d = 1e300;
      for (int s : q.samples)
        d = std::min(d, (fx.tree.points[s] - c.center).norm());
      dist = std::min(dist, d);
    }
    CHECK(diam <= 24.0 * lq);
    CHECK(dist <= 8.0 * lq);
    CHECK(dist > 0.0);
  }
  // |W*_Q| uniform over Q: within each generation the counts sit inside a
  // fixed band around the median, and the global maximum stays below the
  // scale-invariant C_a-dependent cap.
  for (auto& [gen, sizes] : star_by_gen) {
    std::sort(sizes.begin(), sizes.end());
    const double median = sizes[sizes.size() / 2];
    CAPTURE(gen);
    CHECK(sizes.back() <= 8.0 * std::max(median, 8.0));
  }
  for (auto& [gen, sizes] : star_by_gen)
    CHECK(sizes.back() <= 8.0 * 48.0 * 48.0);
}

TEST_CASE("cones contain the vertical ray and open linearly") {
  HalfplaneFixture fx;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(0, int(fx.tree.points.size()) - 1);
  for (int t = 0; t < 12; ++t) {
    const int s = pick(rng);
    const Vec& x = fx.tree.points[s];
    if (std::abs(x[0]) > 1.0) continue;  // keep the ray inside the box
    const auto cone = fx.rm->cone(s);
    REQUIRE(!cone.empty());
    std::set<int> in(cone.begin(), cone.end());
    for (int k = 1; k <= 5; ++k) {
      const double height = fx.tree.side(k) / 2.0;
      const int idx = fx.ws.find(pt2(x[0], height));
      if (idx < 0) continue;
      CAPTURE(k);
      CHECK(in.count(idx) == 1);
    }
    // (prgamma): clearance grows linearly along the cone
    const double c = fx.rm->cone_opening(s, cone);
    CHECK(c > 0.02);
  }
}

TEST_CASE("truncated cones nest") {
  HalfplaneFixture fx;
  const int s = int(fx.tree.points.size()) / 2;
  for (int k = 2; k <= 4; ++k) {
    const auto fine = fx.rm->cone_star_truncated(s, fx.tree.cube_of(s, k));
    const auto coarse =
        fx.rm->cone_star_truncated(s, fx.tree.cube_of(s, k - 1));
    std::set<int> cs(coarse.begin(), coarse.end());
    for (int i : fine) CHECK(cs.count(i) == 1);
  }
}

TEST_CASE("tents: enclosure, monotonicity and mass comparability") {
  HalfplaneFixture fx;
  std::mt19937_64 rng(17);
  std::vector<int> candidates;
  for (int g = 1; g <= 3; ++g)
    for (int id : fx.tree.by_gen[g]) candidates.push_back(id);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(std::min<size_t>(candidates.size(), 25));
  std::vector<double> mass_ratio;
  for (int id : candidates) {
    const auto& q = fx.tree.cube(id);
    const double lq = fx.tree.side(q.gen);
    const auto t1 = fx.rm->tent(id, false);
    const auto t2 = fx.rm->tent(id, true);
    REQUIRE(!t1.members.empty());
    // monotone: T_Q inside T_2Q
    std::set<int> m2(t2.members.begin(), t2.members.end());
    for (int i : t1.members) CHECK(m2.count(i) == 1);
    // enclosing-ball bracket (propTQ)
    CHECK(t1.r_inner > 0.0);
    CHECK(t2.r_outer >= t1.r_inner);
    CHECK(t2.r_outer <= 30.0 * lq);
    CHECK(t1.r_inner >= lq / 64.0);
    // m(T_2Q) against l(Q) rho(Q) mu(2Q)
    const auto& reg = fx.rm->region(id);
    const double rhoQ = reg.m_uq_star / (q.mass * lq);
    double mu2q = 0.0;
    for (int s : fx.tree.dilated_samples(id, 2.0))
      mu2q += fx.tree.weights[s];
    if (rhoQ > 0 && mu2q > 0)
      mass_ratio.push_back(t2.mass / (lq * rhoQ * mu2q));
  }
  REQUIRE(mass_ratio.size() >= 10);
  const auto [lo, hi] =
      std::minmax_element(mass_ratio.begin(), mass_ratio.end());
  CHECK(*lo > 1e-2);
  CHECK(*hi / *lo < 64.0);
}

TEST_CASE("lemma-scale comparability of cube masses and rho") {
  HalfplaneFixture fx;
  for (int g = 1; g <= 4; ++g)
    for (int id : fx.tree.by_gen[g]) {
      const auto& q = fx.tree.cube(id);
      const double lq = fx.tree.side(q.gen);
      const Vec z = fx.tree.center(id);
      const double mu_ball = fx.mu->ball_mass(z, lq);
      if (mu_ball <= 0 || q.mass <= 0) continue;
      CHECK(q.mass / mu_ball > 0.05);
      CHECK(q.mass / mu_ball < 20.0);
      const auto& reg = fx.rm->region(id);
      if (reg.m_uq <= 0 || reg.m_uq_star <= 0) continue;
      CHECK(reg.m_uq_star / reg.m_uq >= 1.0 - 1e-12);
      CHECK(reg.m_uq_star / reg.m_uq < 64.0);
      // rho(Q) against the oracle rho(x, l(Q))
      const double rhoQ = reg.m_uq_star / (q.mass * lq);
      const double rho_or = meas::rho(*fx.dom, *fx.mu, *fx.w, z, lq);
      CHECK(rhoQ / rho_or > 1e-2);
      CHECK(rhoQ / rho_or < 4e2);
    }
}

TEST_CASE("H5Q on ancestor pairs keeps the audited exponent") {
  HalfplaneFixture fx;
  double worst = 0.0;
  for (int id : fx.tree.by_gen[4]) {
    const auto& q = fx.tree.cube(id);
    const auto& reg = fx.rm->region(id);
    if (reg.m_uq_star <= 0 || q.mass <= 0) continue;
    const double rho_fine =
        reg.m_uq_star / (q.mass * fx.tree.side(q.gen));
    int anc = q.parent;
    while (anc >= 0) {
      const auto& qa = fx.tree.cube(anc);
      const auto& ra = fx.rm->region(anc);
      if (ra.m_uq_star > 0 && qa.mass > 0) {
        const double rho_coarse =
            ra.m_uq_star / (qa.mass * fx.tree.side(qa.gen));
        const double ratio = rho_coarse / rho_fine;  // coarse = larger scale
        const double scale =
            fx.tree.side(qa.gen) / fx.tree.side(q.gen);
        worst = std::max(worst, std::log(std::max(ratio, 1e-12)) /
                                    std::log(scale));
      }
      anc = qa.parent;
    }
  }
  CHECK(worst <= 0.95);  // matches the audited 1 - eps margin
}

TEST_CASE("bounded tent overlap at a fixed generation") {
  HalfplaneFixture fx;
  std::map<int, int> count;
  const int g = 3;
  for (int id : fx.tree.by_gen[g]) {
    const auto tent = fx.rm->tent(id, true);
    for (int i : tent.members) count[i] += 1;
  }
  int worst = 0;
  for (const auto& [k, c] : count) worst = std::max(worst, c);
  CHECK(worst <= 64);
}

TEST_CASE("tree export is well formed") {
  const auto tree = build_christ(segment_samples(256), 1, 4);
  tree.write_json("/tmp/christ.json");
  std::ifstream f("/tmp/christ.json");
  nlohmann::json j;
  f >> j;
  CHECK(j["cubes"].size() == tree.cubes.size());
  CHECK(j["k_max"] == 4);
}

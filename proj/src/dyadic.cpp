#include "delab/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace delab::dyadic {

namespace {

// Bucket grid over a point set for fixed-radius queries.
class PointGrid {
 public:
  PointGrid(const std::vector<Vec>& pts, double cell) : pts_(pts), cell_(cell) {
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
      buckets_[key(pts[i])].push_back(i);
  }
  // Grid over a growing point set; insert indices as they appear.
  PointGrid(const std::vector<Vec>& pts, double cell, bool)
      : pts_(pts), cell_(cell) {}
  void insert(int i) { buckets_[key(pts_[i])].push_back(i); }

  template <class F>
  void for_ball(const Vec& c, double r, F&& fn) const {
    const int n = static_cast<int>(c.size());
    std::vector<int64_t> lo(n), hi(n);
    for (int j = 0; j < n; ++j) {
      lo[j] = static_cast<int64_t>(std::floor((c[j] - r) / cell_));
      hi[j] = static_cast<int64_t>(std::floor((c[j] + r) / cell_));
    }
    std::vector<int64_t> cur = lo;
    while (true) {
      auto it = buckets_.find(hash(cur));
      if (it != buckets_.end())
        for (int i : it->second)
          if ((pts_[i] - c).norm() <= r) fn(i);
      int j = 0;
      for (; j < n; ++j) {
        if (cur[j] < hi[j]) {
          ++cur[j];
          break;
        }
        cur[j] = lo[j];
      }
      if (j == n) break;
    }
  }

 private:
  int64_t key(const Vec& p) const {
    std::vector<int64_t> k(p.size());
    for (int j = 0; j < p.size(); ++j)
      k[j] = static_cast<int64_t>(std::floor(p[j] / cell_));
    return hash(k);
  }
  static int64_t hash(const std::vector<int64_t>& k) {
    int64_t h = 1469598103934665603ll;
    for (int64_t v : k) {
      h ^= v + 0x9e3779b97f4a7c15ll;
      h *= 1099511628211ll;
    }
    return h;
  }
  const std::vector<Vec>& pts_;
  double cell_;
  std::unordered_map<int64_t, std::vector<int>> buckets_;
};

double point_box_distance(const Vec& p, const Vec& center, double side) {
  double s = 0.0;
  for (int j = 0; j < p.size(); ++j) {
    const double g =
        std::max(std::abs(p[j] - center[j]) - 0.5 * side, 0.0);
    s += g * g;
  }
  return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Christ tree

ChristTree build_christ(const std::vector<meas::WeightedPoint>& samples,
                        int k_min, int k_max) {
  if (k_max < k_min) throw ConfigError("build_christ: k_max < k_min");
  ChristTree t;
  t.k_min = k_min;
  t.k_max = k_max;
  for (const auto& s : samples) {
    t.points.push_back(s.x);
    t.weights.push_back(s.w);
  }
  const int N = static_cast<int>(t.points.size());
  if (N < 2) throw ConfigError("build_christ: need at least 2 samples");

  // Resolution check: the samples must be denser than the finest net.
  const double s_fin = std::pow(2.0, -k_max) / 4.0;
  {
    PointGrid pg(t.points, s_fin);
    int covered = 0;
    const int probes = std::min(N, 128);
    for (int q = 0; q < probes; ++q) {
      const int i = q * (N / probes);
      bool has_near = false;
      pg.for_ball(t.points[i], s_fin, [&](int j) {
        if (j != i) has_near = true;
      });
      covered += has_near;
    }
    if (covered < probes / 2)
      throw ConfigError(
          "build_christ: sample spacing coarser than 2^-k_max/4 = " +
          std::to_string(s_fin) + "; supply a denser boundary sampling");
  }

  const int gens = k_max - k_min + 1;
  // Greedy nets per generation: centers separated by > s_k, covering radius
  // <= s_k.
  std::vector<std::vector<int>> net(gens);
  for (int g = 0; g < gens; ++g) {
    const double s_k = std::pow(2.0, -(k_min + g)) / 4.0;
    PointGrid pg(t.points, s_k, true);
    std::vector<int>& centers = net[g];
    for (int i = 0; i < N; ++i) {
      bool near = false;
      pg.for_ball(t.points[i], s_k, [&](int) { near = true; });
      if (!near) {
        centers.push_back(i);
        pg.insert(i);
      }
    }
  }

  // Cube skeletons: one per net center per generation.
  t.by_gen.assign(gens, {});
  std::vector<std::unordered_map<int, int>> center_to_cube(gens);
  for (int g = 0; g < gens; ++g)
    for (int c : net[g]) {
      ChristCube q;
      q.id = static_cast<int>(t.cubes.size());
      q.gen = k_min + g;
      q.center_sample = c;
      t.cubes.push_back(q);
      t.by_gen[g].push_back(t.cubes.back().id);
      center_to_cube[g][c] = t.cubes.back().id;
    }

  auto nearest_center = [&](const Vec& p, int g) {
    double best = 1e300;
    int arg = -1;
    for (int c : net[g]) {
      const double d = (p - t.points[c]).norm();
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    return arg;
  };

  // Parent links between centers (nearest coarser center).
  for (int g = 1; g < gens; ++g)
    for (int id : t.by_gen[g]) {
      const int pc = nearest_center(t.points[t.cubes[id].center_sample], g - 1);
      t.cubes[id].parent = center_to_cube[g - 1][pc];
      t.cubes[t.cubes[id].parent].children.push_back(id);
    }

  // Atoms: samples attach to the nearest finest-generation center; cube
  // membership is the set of descendants' samples.
  t.ancestors.assign(N, std::vector<int>(gens, -1));
  for (int i = 0; i < N; ++i) {
    int cube = center_to_cube[gens - 1][nearest_center(t.points[i], gens - 1)];
    for (int g = gens - 1; g >= 0; --g) {
      t.ancestors[i][g] = cube;
      t.cubes[cube].samples.push_back(i);
      t.cubes[cube].mass += t.weights[i];
      cube = t.cubes[cube].parent;
    }
  }

  // Achieved inner-ball radius: distance from the center to the nearest
  // sample outside the cube (capped at the cube scale).
  PointGrid pg(t.points, s_fin * 4.0);
  for (auto& q : t.cubes) {
    const double cap = t.side(q.gen);
    const Vec& z = t.points[q.center_sample];
    double best = cap;
    pg.for_ball(z, cap, [&](int j) {
      if (t.ancestors[j][q.gen - k_min] != q.id)
        best = std::min(best, (t.points[j] - z).norm());
    });
    q.inner_radius = best;
  }
  return t;
}

double ChristTree::achieved_a0() const {
  double a0 = 1.0;
  for (const auto& q : cubes)
    a0 = std::min(a0, q.inner_radius / side(q.gen));
  return a0 * (1.0 - 1e-12);
}

std::vector<int> ChristTree::dilated_samples(int cube_id, double lambda) const {
  const ChristCube& q = cubes[cube_id];
  const double reach = (lambda - 1.0) * side(q.gen);
  std::vector<char> in(points.size(), 0);
  for (int s : q.samples) in[s] = 1;
  if (reach > 0)
    for (int i = 0; i < static_cast<int>(points.size()); ++i) {
      if (in[i]) continue;
      for (int s : q.samples)
        if ((points[i] - points[s]).norm() <= reach) {
          in[i] = 1;
          break;
        }
    }
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(points.size()); ++i)
    if (in[i]) out.push_back(i);
  return out;
}

ChristTree::Validation ChristTree::validate() const {
  Validation v;
  const int gens = k_max - k_min + 1;
  const int N = static_cast<int>(points.size());

  v.partition_ok = true;
  for (int g = 0; g < gens; ++g) {
    long total = 0;
    for (int id : by_gen[g]) total += cubes[id].samples.size();
    if (total != N) v.partition_ok = false;
  }

  v.nesting_ok = true;
  for (int i = 0; i < N; ++i)
    for (int g = 1; g < gens; ++g)
      if (cubes[ancestors[i][g]].parent != ancestors[i][g - 1])
        v.nesting_ok = false;

  v.diam_ok = true;
  for (const auto& q : cubes) {
    const Vec& z = points[q.center_sample];
    double to_center = 0.0;
    for (int s : q.samples)
      to_center = std::max(to_center, (points[s] - z).norm());
    if (to_center > 0.5 * side(q.gen) * (1 + 1e-9)) {
      // Fall back to the true diameter.
      double diam = 0.0;
      for (size_t a = 0; a < q.samples.size(); ++a)
        for (size_t b = a + 1; b < q.samples.size(); ++b)
          diam = std::max(diam, (points[q.samples[a]] - points[q.samples[b]])
                                    .norm());
      if (diam > side(q.gen) * (1 + 1e-9)) v.diam_ok = false;
    }
  }

  v.a0 = achieved_a0();
  return v;
}

void ChristTree::write_json(const std::string& path) const {
  nlohmann::json j;
  j["k_min"] = k_min;
  j["k_max"] = k_max;
  j["n_samples"] = points.size();
  auto arr = nlohmann::json::array();
  for (const auto& q : cubes) {
    nlohmann::json c;
    c["id"] = q.id;
    c["gen"] = q.gen;
    c["parent"] = q.parent;
    c["mass"] = q.mass;
    c["n_samples"] = q.samples.size();
    auto ctr = nlohmann::json::array();
    for (int k = 0; k < points[q.center_sample].size(); ++k)
      ctr.push_back(points[q.center_sample][k]);
    c["center"] = ctr;
    arr.push_back(c);
  }
  j["cubes"] = arr;
  std::ofstream f(path);
  f << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Region map

namespace {

// Whitney cubes meeting B(c, r): breadth-first search over the adjacency
// graph starting from the cube containing c. The Whitney cover is
// gap-free away from the resolution collar, so the traversal reaches every
// meeting cube.
std::vector<int> cubes_meeting_ball(const geo::WhitneySet& ws, const Vec& c,
                                    double r, std::vector<char>& mask) {
  std::vector<int> out;
  int start = ws.find(c);
  if (start < 0) {
    // Center in the collar or outside: seed from the nearest axis probe.
    for (double f : {1.0, 0.5, 0.25}) {
      for (int j = 0; j < ws.box.dim() && start < 0; ++j) {
        Vec p = c;
        p[j] += f * r;
        start = ws.find(p);
        if (start < 0) {
          p[j] -= 2.0 * f * r;
          start = ws.find(p);
        }
      }
      if (start >= 0) break;
    }
    if (start < 0) return out;
  }
  if (mask.size() != ws.cubes.size()) mask.assign(ws.cubes.size(), 0);
  std::vector<int> touched = {start};
  mask[start] = 1;
  std::vector<int> stack = {start};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const bool meets =
        point_box_distance(c, ws.cubes[i].center, ws.cubes[i].side) < r;
    if (meets) out.push_back(i);
    if (!meets && i != start) continue;  // stop past non-meeting cubes
    for (int nb : ws.cubes[i].neighbors)
      if (!mask[nb]) {
        mask[nb] = 1;
        touched.push_back(nb);
        stack.push_back(nb);
      }
  }
  for (int i : touched) mask[i] = 0;
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

RegionMap::RegionMap(geo::DomainPtr dom, const ChristTree* tree,
                     const geo::WhitneySet* ws, meas::WeightPtr weight,
                     const RegionOptions& opt)
    : dom_(std::move(dom)), tree_(tree), ws_(ws), weight_(weight), opt_(opt) {
  const int n = ws_->box.dim();
  // m-mass per Whitney cube (2^n midpoints; the weight is smooth there).
  cube_mass_.resize(ws_->cubes.size());
  for (size_t i = 0; i < ws_->cubes.size(); ++i) {
    const auto& c = ws_->cubes[i];
    double m = 0.0;
    Vec p(n);
    for (int corner = 0; corner < (1 << n); ++corner) {
      for (int j = 0; j < n; ++j)
        p[j] = c.center[j] + (((corner >> j) & 1) ? 0.25 : -0.25) * c.side;
      m += weight_->eval(p, 0.25 * c.side) * std::pow(0.5 * c.side, n);
    }
    cube_mass_[i] = m;
  }

  regions_.resize(tree_->cubes.size());
  // Memo: cubes meeting B(X_I, delta(X_I)/2) per Whitney cube (shared
  // between all the regions that seed from I).
  std::vector<std::vector<int>> ball_memo(ws_->cubes.size());
  std::vector<char> ball_done(ws_->cubes.size(), 0);
  std::vector<char> scratch;
  auto seed_ball = [&](int i) -> const std::vector<int>& {
    if (!ball_done[i]) {
      const Vec& X = ws_->cubes[i].center;
      ball_memo[i] = cubes_meeting_ball(*ws_, X, 0.5 * dom_->distance(X),
                                        scratch);
      ball_done[i] = 1;
    }
    return ball_memo[i];
  };
  // W_Q for every cube first (parents are needed for the fattening).
  for (size_t qi = 0; qi < tree_->cubes.size(); ++qi) {
    const auto& q = tree_->cubes[qi];
    const double lq = tree_->side(q.gen);
    const Vec z = tree_->center(static_cast<int>(qi));
    Region& reg = regions_[qi];
    for (size_t i = 0; i < ws_->cubes.size(); ++i) {
      const auto& c = ws_->cubes[i];
      if (c.side < lq / opt_.c_a) continue;
      if (point_box_distance(z, c.center, c.side) > 2.0 * lq + 0.5 * lq)
        continue;
      double d = 1e300;
      for (int s : q.samples) {
        d = std::min(d, point_box_distance(tree_->points[s], c.center, c.side));
        if (d <= 2.0 * lq) break;
      }
      if (d <= 2.0 * lq) reg.wq.push_back(static_cast<int>(i));
    }
    // Corkscrew cube I_Q; when the scale-lq point falls below the Whitney
    // resolution, probe the same ray at increasing clearance.
    try {
      const auto cs = geo::corkscrew(*dom_, z, lq);
      int iq = ws_->find(cs.point);
      if (iq < 0) {
        const Vec dir = (cs.point - z) / std::max((cs.point - z).norm(), 1e-30);
        for (double f : {0.75, 1.0, 1.5, 2.0}) {
          iq = ws_->find(z + (f * lq) * dir);
          if (iq >= 0) break;
        }
      }
      if (iq >= 0) {
        reg.corkscrew_cube = iq;
        if (!std::binary_search(reg.wq.begin(), reg.wq.end(), iq)) {
          reg.wq.push_back(iq);
          std::sort(reg.wq.begin(), reg.wq.end());
        }
      }
    } catch (const HypothesisViolation&) {
      // leave the region without a distinguished cube
    }
    std::sort(reg.wq.begin(), reg.wq.end());
    reg.wq.erase(std::unique(reg.wq.begin(), reg.wq.end()), reg.wq.end());
  }

  // Fattened regions.
  for (size_t qi = 0; qi < tree_->cubes.size(); ++qi) {
    const auto& q = tree_->cubes[qi];
    Region& reg = regions_[qi];
    std::set<int> star;
    std::vector<int> seed = reg.wq;
    if (q.parent >= 0)
      for (int i : regions_[q.parent].wq) seed.push_back(i);
    std::sort(seed.begin(), seed.end());
    seed.erase(std::unique(seed.begin(), seed.end()), seed.end());

    std::vector<int> w0;
    for (int i : seed) {
      const auto& b = seed_ball(i);
      w0.insert(w0.end(), b.begin(), b.end());
    }
    std::sort(w0.begin(), w0.end());
    w0.erase(std::unique(w0.begin(), w0.end()), w0.end());
    for (int i : w0) star.insert(i);

    // Harnack-chain fattening: one chain from the distinguished cube into
    // each adjacency component of W0, which is what makes U*_Q connected.
    if (reg.corkscrew_cube >= 0 && !w0.empty()) {
      std::unordered_map<int, int> comp;
      for (int i : w0) comp[i] = -1;
      int nc = 0;
      for (int i : w0) {
        if (comp[i] >= 0) continue;
        std::vector<int> stack = {i};
        comp[i] = nc;
        while (!stack.empty()) {
          const int c = stack.back();
          stack.pop_back();
          for (int nb : ws_->cubes[c].neighbors) {
            auto it = comp.find(nb);
            if (it != comp.end() && it->second < 0) {
              it->second = nc;
              stack.push_back(nb);
            }
          }
        }
        ++nc;
      }
      const Vec& A = ws_->cubes[reg.corkscrew_cube].center;
      const int home = comp.count(reg.corkscrew_cube)
                           ? comp[reg.corkscrew_cube]
                           : -1;
      for (int c = 0; c < nc; ++c) {
        if (c == home) continue;
        // nearest member of the component
        int target = -1;
        double best = 1e300;
        for (int i : w0)
          if (comp[i] == c) {
            const double d = (ws_->cubes[i].center - A).norm();
            if (d < best) {
              best = d;
              target = i;
            }
          }
        if (target < 0) continue;
        const Vec& B = ws_->cubes[target].center;
        const double r =
            0.5 * std::min(dom_->distance(A), dom_->distance(B));
        try {
          const auto ch = geo::harnack_chain(*dom_, A, B, r);
          for (size_t k = 0; k < ch.points.size(); ++k)
            for (int j : cubes_meeting_ball(*ws_, ch.points[k], ch.radii[k],
                                            scratch))
              star.insert(j);
        } catch (const HypothesisViolation&) {
          // the component stays as-is; connectivity is audited downstream
        }
      }
    }
    reg.wq_star.assign(star.begin(), star.end());
    for (int i : reg.wq) reg.m_uq += cube_mass_[i];
    for (int i : reg.wq_star) reg.m_uq_star += cube_mass_[i];
  }
}

std::vector<int> RegionMap::cone(int sample) const {
  std::vector<int> out;
  for (int g = tree_->k_min; g <= tree_->k_max; ++g) {
    const int q = tree_->cube_of(sample, g);
    const auto& r = regions_[q].wq;
    out.insert(out.end(), r.begin(), r.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> RegionMap::cone_star_truncated(int sample, int cube_id) const {
  std::vector<int> out;
  for (int g = tree_->cubes[cube_id].gen; g <= tree_->k_max; ++g) {
    const int q = tree_->cube_of(sample, g);
    const auto& r = regions_[q].wq_star;
    out.insert(out.end(), r.begin(), r.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Tent RegionMap::tent(int cube_id, bool doubled) const {
  Tent t;
  t.cube_id = cube_id;
  t.doubled = doubled;
  const auto& q = tree_->cubes[cube_id];
  std::vector<int> samples =
      doubled ? tree_->dilated_samples(cube_id, 2.0) : q.samples;

  // Union of U*_{Q'} over the truncated cones; collect the Christ cubes
  // first to avoid repeating regions shared between samples.
  std::set<int> christ;
  for (int s : samples)
    for (int g = q.gen; g <= tree_->k_max; ++g)
      christ.insert(tree_->cube_of(s, g));
  std::set<int> members;
  for (int qc : christ)
    for (int i : regions_[qc].wq_star) members.insert(i);
  t.members.assign(members.begin(), members.end());
  for (int i : t.members) t.mass += cube_mass_[i];

  const Vec z = tree_->center(cube_id);
  t.r_inner = 1e300;
  for (size_t i = 0; i < ws_->cubes.size(); ++i)
    if (!members.count(static_cast<int>(i)))
      t.r_inner = std::min(
          t.r_inner, point_box_distance(z, ws_->cubes[i].center,
                                        ws_->cubes[i].side));
  for (int i : t.members) {
    const auto& c = ws_->cubes[i];
    t.r_outer = std::max(
        t.r_outer, (c.center - z).norm() +
                       0.5 * c.side * std::sqrt(double(ws_->box.dim())));
  }
  return t;
}

double RegionMap::cone_opening(int sample,
                               const std::vector<int>& cubes) const {
  const Vec& x = tree_->points[sample];
  const int n = ws_->box.dim();
  double c = 1e300;
  for (int i : cubes) {
    const auto& cube = ws_->cubes[i];
    Vec corner(n);
    for (int k = 0; k < (1 << n); ++k) {
      for (int j = 0; j < n; ++j)
        corner[j] =
            cube.center[j] + (((k >> j) & 1) ? 0.5 : -0.5) * cube.side;
      const double dist = (corner - x).norm();
      if (dist > 1e-300)
        c = std::min(c, dom_->distance(corner) / dist);
    }
  }
  return c;
}

}  // namespace delab::dyadic

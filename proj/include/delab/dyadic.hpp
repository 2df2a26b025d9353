#pragma once

#include <string>
#include <vector>

#include "delab/core.hpp"
#include "delab/geometry.hpp"
#include "delab/measures.hpp"

namespace delab::dyadic {

// Hierarchical partition of a weighted boundary sample set into
// pseudo-cubes: greedy nets per generation with covering radius 2^-k / 4,
// membership through finest-level atoms ascending nearest-coarser-center
// links. Nesting and per-generation partitioning are exact by construction;
// diam Q <= 2^-k holds by the choice of net radii; the inner-ball constant
// a0 is measured and reported.
struct ChristCube {
  int id = -1;
  int gen = 0;           // cube side 2^-gen
  int center_sample = -1;
  int parent = -1;
  std::vector<int> children;
  std::vector<int> samples;  // member sample ids
  double mass = 0.0;         // sum of member weights
  double inner_radius = 0.0; // largest radius with B(z,.) samples inside Q
};

struct ChristTree {
  std::vector<Vec> points;     // boundary samples
  std::vector<double> weights; // mu weights
  int k_min = 0, k_max = 0;
  std::vector<ChristCube> cubes;
  std::vector<std::vector<int>> by_gen;     // cube ids per generation (k - k_min)
  std::vector<std::vector<int>> ancestors;  // [sample][gen index] -> cube id

  double side(int gen) const { return std::pow(2.0, -gen); }
  int cube_of(int sample, int gen) const {
    return ancestors[sample][gen - k_min];
  }
  const ChristCube& cube(int id) const { return cubes[id]; }
  Vec center(int id) const { return points[cubes[id].center_sample]; }
  double achieved_a0() const;

  // Samples within dist <= (lambda - 1) * side(gen) of the cube.
  std::vector<int> dilated_samples(int cube_id, double lambda) const;

  struct Validation {
    bool partition_ok = false;  // each generation partitions the samples
    bool nesting_ok = false;    // child sets contained in parent sets
    bool diam_ok = false;       // diam Q <= 2^-k
    double a0 = 0.0;            // reported inner-ball constant
    bool ok() const { return partition_ok && nesting_ok && diam_ok && a0 > 0; }
  };
  Validation validate() const;

  void write_json(const std::string& path) const;
};

// Builds the tree from weighted samples. Requires sample separation finer
// than 2^-k_max / 4; throws otherwise with the needed resolution.
ChristTree build_christ(const std::vector<meas::WeightedPoint>& samples,
                        int k_min, int k_max);

// Matched Whitney regions. For each cube Q:
//   W_Q  = Whitney cubes with side >= side(Q)/C_a within 2 side(Q) of Q,
//          plus the corkscrew cube I_Q;
//   W*_Q = cubes meeting balls B(X_I, delta(X_I)/2) over W_Q and the parent
//          region, fattened by Harnack chains from I_Q to each of them.
struct Region {
  std::vector<int> wq;       // Whitney cube indices for W_Q
  std::vector<int> wq_star;  // fattened W*_Q
  int corkscrew_cube = -1;   // I_Q
  double m_uq = 0.0, m_uq_star = 0.0;  // weighted masses of the unions
};

struct Tent {
  int cube_id = -1;
  bool doubled = false;
  std::vector<int> members;  // Whitney cube indices
  double r_inner = 0.0, r_outer = 0.0;  // enclosing-ball radii around z_Q
  double mass = 0.0;
};

struct RegionOptions {
  double c_a = 48.0;  // aperture constant of W_Q
};

class RegionMap {
 public:
  RegionMap(geo::DomainPtr dom, const ChristTree* tree,
            const geo::WhitneySet* ws, meas::WeightPtr weight,
            const RegionOptions& opt = {});

  const Region& region(int cube_id) const { return regions_[cube_id]; }
  const ChristTree& tree() const { return *tree_; }
  const geo::WhitneySet& whitney() const { return *ws_; }
  double cube_mass(int whitney_cube) const { return cube_mass_[whitney_cube]; }

  // Access cone gamma(x) for a boundary sample: union of U_Q over all
  // generations whose cube contains the sample.
  std::vector<int> cone(int sample) const;
  // Truncated fattened cone gamma*_Q(x).
  std::vector<int> cone_star_truncated(int sample, int cube_id) const;
  // Tent over Q (doubled: over 2Q).
  Tent tent(int cube_id, bool doubled) const;

  // min over member-cube corners of delta / |corner - x| (the cone opening).
  double cone_opening(int sample, const std::vector<int>& cubes) const;

 private:
  geo::DomainPtr dom_;
  const ChristTree* tree_;
  const geo::WhitneySet* ws_;
  meas::WeightPtr weight_;
  RegionOptions opt_;
  std::vector<Region> regions_;
  std::vector<double> cube_mass_;  // m-mass per Whitney cube
};

}  // namespace delab::dyadic

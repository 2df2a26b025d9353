#pragma once

#include <Eigen/Sparse>

#include <functional>
#include <string>
#include <vector>

#include "delab/core.hpp"
#include "delab/geometry.hpp"
#include "delab/measures.hpp"

namespace delab::disc {

enum class NodeClass : uint8_t { Interior, Pinned, Outer, Exterior };

// Cartesian cell-centered grid over a box with isotropic spacing h.
// Nodes closer than pin_radius to Gamma carry Dirichlet data evaluated at
// their nearest boundary point; box-face nodes carry the outer truncation
// data; nodes outside a bounded Omega are excluded.
struct Grid {
  Box box;
  int n = 0;
  std::vector<int> dims;  // cells per axis
  double h = 0.0;
  double pin_radius = 0.0;
  double clamp = 0.0;  // weight clamp, 0.5 h
  geo::DomainPtr dom;
  meas::WeightPtr weight;
  std::vector<NodeClass> cls;
  std::vector<double> cell_mass;  // m(cell)

  long size() const {
    long s = 1;
    for (int d : dims) s *= d;
    return s;
  }
  long index(const std::vector<int>& I) const {
    long idx = 0;
    for (int j = n - 1; j >= 0; --j) idx = idx * dims[j] + I[j];
    return idx;
  }
  void coords(long idx, std::vector<int>& I) const {
    I.resize(n);
    for (int j = 0; j < n; ++j) {
      I[j] = static_cast<int>(idx % dims[j]);
      idx /= dims[j];
    }
  }
  Vec center(long idx) const {
    Vec c(n);
    for (int j = 0; j < n; ++j) {
      const int i = static_cast<int>(idx % dims[j]);
      idx /= dims[j];
      c[j] = box.lo[j] + (i + 0.5) * h;
    }
    return c;
  }
  // Neighbor along axis, or -1 past the box.
  long neighbor(long idx, int axis, int dir) const {
    long stride = 1;
    for (int j = 0; j < axis; ++j) stride *= dims[j];
    const int i = static_cast<int>((idx / stride) % dims[axis]);
    if (i + dir < 0 || i + dir >= dims[axis]) return -1;
    return idx + dir * stride;
  }
  long count(NodeClass c) const {
    long k = 0;
    for (auto v : cls) k += (v == c);
    return k;
  }

  // m(cell cap B(center, radius)) by subgrid midpoints.
  double cell_ball_mass(long idx, const Vec& center, double radius,
                        int sub = 8) const;

  static Grid make(geo::DomainPtr dom, meas::WeightPtr w, Box box,
                   int cells_axis0, double pin_factor = 1.0);
};

// Normalized coefficient matrix field. The diagonal path keeps the M-matrix
// 2n+1-point stencil; the full path uses a corner-gradient quadrature with a
// wider stencil (maximum principle audited, not guaranteed).
struct CoefficientField {
  bool diagonal = true;
  bool symmetric = true;
  double bound = 4.0;  // declared ellipticity constant C_A
  std::function<Vec(const Vec&)> diag;   // used when diagonal
  std::function<Mat(const Vec&)> full;   // used otherwise

  static CoefficientField identity(int n);
  static CoefficientField axis_diagonal(Vec d);
  static CoefficientField constant_full(Mat M);

  Mat matrix(const Vec& X) const;
  // Samples the ellipticity and boundedness of the field; throws with the
  // violating sample otherwise.
  void probe(const Box& box, int samples = 64) const;
};

struct LinearSystem {
  const Grid* grid = nullptr;
  CoefficientField coeff;
  Eigen::SparseMatrix<double> full;  // all nodes; zero rows on exterior
  Eigen::SparseMatrix<double> interior;  // interior block
  std::vector<long> interior_nodes;
  std::vector<long> data_nodes;  // pinned + outer
  std::vector<long> node_to_interior;
  bool m_matrix = false;
  bool symmetric = true;
};

// Assembles the weighted form a(u,v) = sum faces/corners of w A gradients.
// Face conductances are harmonic means of w*A at adjacent cell centers,
// with w clamped at 0.5 h.
LinearSystem assemble(const Grid& grid, const CoefficientField& coeff);

struct Field {
  const Grid* grid = nullptr;
  Vec values;
  std::string name;

  double operator[](long i) const { return values[i]; }
  double& operator[](long i) { return values[i]; }
  void write_csv(const std::string& path) const;
};

Field make_field(const Grid& g, const std::function<double(const Vec&)>& f,
                 const std::string& name = "");

// Visit cells whose center lies in B(center, r), exterior cells included.
void for_cells_in_ball(const Grid& g, const Vec& center, double r,
                       const std::function<void(long)>& fn);

// Sum of cell masses over B(center, r): the grid's own m(B cap Omega).
double ball_mass_cells(const Grid& g, const Vec& center, double r);

// Gradient magnitude at a cell from available neighbor differences.
double grad_norm(const Field& u, long idx);

}  // namespace delab::disc

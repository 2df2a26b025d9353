#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace delab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Axis-aligned box in R^n. Grids and Whitney decompositions require it
// to be a cube (equal extents), domains only use it as a bounding region.
struct Box {
  Vec lo, hi;

  Box() = default;
  Box(Vec l, Vec h) : lo(std::move(l)), hi(std::move(h)) {}

  int dim() const { return static_cast<int>(lo.size()); }
  Vec center() const { return 0.5 * (lo + hi); }
  Vec extent() const { return hi - lo; }
  double side() const { return extent().maxCoeff(); }
  double volume() const { return extent().prod(); }

  bool contains(const Vec& x, double tol = 0.0) const {
    for (int j = 0; j < dim(); ++j)
      if (x[j] < lo[j] - tol || x[j] > hi[j] + tol) return false;
    return true;
  }
  bool is_cube(double tol = 1e-12) const {
    const Vec e = extent();
    return (e.maxCoeff() - e.minCoeff()) <= tol * e.maxCoeff();
  }
  Box shrunk(double margin) const {
    return Box((lo.array() + margin).matrix(), (hi.array() - margin).matrix());
  }

  static Box cube(int n, double lo_v, double hi_v) {
    return Box(Vec::Constant(n, lo_v), Vec::Constant(n, hi_v));
  }
};

// Raised when a constructive search certifies that a geometric or
// measure-theoretic hypothesis does not hold at the probed configuration.
// Carries the best candidate found so the caller can inspect how close
// the search got.
struct HypothesisViolation : std::runtime_error {
  std::string hypothesis;
  Vec best_point;
  double best_value = 0.0;

  HypothesisViolation(std::string hyp, std::string msg, Vec best = Vec(),
                      double value = 0.0)
      : std::runtime_error(msg),
        hypothesis(std::move(hyp)),
        best_point(std::move(best)),
        best_value(value) {}
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveError : std::runtime_error {
  std::vector<double> residual_history;
  SolveError(std::string msg, std::vector<double> hist)
      : std::runtime_error(std::move(msg)),
        residual_history(std::move(hist)) {}
};

// Least-squares line fit y = slope*x + intercept with a slope standard
// error (used for log-log exponent fits).
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n < 2 || y.size() != x.size())
    throw std::invalid_argument("fit_line: need >= 2 paired points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (det <= 0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  if (n > 2) {
    double ss = 0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - (f.slope * x[i] + f.intercept);
      ss += r * r;
    }
    f.slope_stderr = std::sqrt(ss / (n - 2) * n / det);
  }
  return f;
}

inline LineFit fit_loglog(const std::vector<double>& x,
                          const std::vector<double>& y) {
  std::vector<double> lx, ly;
  lx.reserve(x.size());
  ly.reserve(y.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

// Halton sequence, used for deterministic low-discrepancy searches.
inline double halton(uint64_t index, uint32_t base) {
  double f = 1.0, r = 0.0;
  uint64_t i = index;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

// Point of the Halton sequence mapped into the ball B(center, radius).
inline Vec halton_in_ball(uint64_t index, const Vec& center, double radius) {
  static const uint32_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  const int n = static_cast<int>(center.size());
  Vec p(n);
  while (true) {
    double norm2 = 0.0;
    for (int j = 0; j < n; ++j) {
      p[j] = 2.0 * halton(index + 1, primes[j]) - 1.0;
      norm2 += p[j] * p[j];
    }
    if (norm2 <= 1.0) break;
    index += 1023;  // skip ahead until inside the unit ball
  }
  return center + radius * p;
}

// Deterministic parallel map: slot i is written by exactly one worker and
// the result layout does not depend on scheduling.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  int nthreads = static_cast<int>(std::thread::hardware_concurrency());
  if (nthreads <= 1 || n <= 2) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  nthreads = std::min(nthreads, n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::exception_ptr first_error;
  std::mutex err_mx;
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int i = t; i < n; i += nthreads) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mx);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// FNV-1a: stable content hash for manifests and determinism checks.
inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline double sq(double x) { return x * x; }

// Distance from the interval [lo, hi] to the origin.
inline double interval_dist(double lo, double hi) {
  if (hi < 0) return -hi;
  if (lo > 0) return lo;
  return 0.0;
}

}  // namespace delab

#pragma once

// Uniform 2D grids, nodal grid functions and the discrete inner products.
//
// Dirichlet grids store the closed node set 0..nx x 0..ny; periodic grids
// store 0..nx-1 x 0..ny-1 (node nx is identified with node 0). Values are
// stored row-major in (i, j), i.e. index = i * points_y() + j.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace twogrid {

enum class Boundary { dirichlet, periodic };

inline const char* to_string(Boundary bc) {
  return bc == Boundary::dirichlet ? "dirichlet" : "periodic";
}

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "dirichlet") return Boundary::dirichlet;
  if (s == "periodic") return Boundary::periodic;
  throw std::invalid_argument("unknown boundary condition '" + s + "'");
}

class Grid2D {
public:
  static constexpr int min_nodes = 4;

  static Grid2D build(int nx, int ny, double lx, double ly, Boundary bc,
                      double x0 = 0.0, double y0 = 0.0) {
    if (nx < min_nodes || ny < min_nodes)
      throw std::invalid_argument("Grid2D: need at least 4 cells per direction, got " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
    if (!(lx > 0.0) || !(ly > 0.0))
      throw std::invalid_argument("Grid2D: domain lengths must be positive");
    return Grid2D(nx, ny, lx, ly, bc, x0, y0);
  }

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }
  double hx() const noexcept { return hx_; }
  double hy() const noexcept { return hy_; }
  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  Boundary bc() const noexcept { return bc_; }
  bool periodic() const noexcept { return bc_ == Boundary::periodic; }

  // Number of stored nodes per direction.
  int points_x() const noexcept { return periodic() ? nx_ : nx_ + 1; }
  int points_y() const noexcept { return periodic() ? ny_ : ny_ + 1; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(points_x()) * static_cast<std::size_t>(points_y());
  }

  double x(int i) const noexcept { return x0_ + i * hx_; }
  double y(int j) const noexcept { return y0_ + j * hy_; }

  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(points_y()) +
           static_cast<std::size_t>(j);
  }

  int wrap_x(int i) const noexcept { return ((i % nx_) + nx_) % nx_; }
  int wrap_y(int j) const noexcept { return ((j % ny_) + ny_) % ny_; }

  bool is_boundary(int i, int j) const noexcept {
    return !periodic() && (i == 0 || j == 0 || i == nx_ || j == ny_);
  }

  // Unknown count of the per-step linear systems: interior nodes for
  // Dirichlet, all stored nodes for periodic.
  std::size_t unknowns() const noexcept {
    if (periodic()) return size();
    return static_cast<std::size_t>(nx_ - 1) * static_cast<std::size_t>(ny_ - 1);
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

private:
  Grid2D(int nx, int ny, double lx, double ly, Boundary bc, double x0, double y0)
      : nx_(nx), ny_(ny), lx_(lx), ly_(ly), hx_(lx / nx), hy_(ly / ny),
        x0_(x0), y0_(y0), bc_(bc) {}

  int nx_;
  int ny_;
  double lx_;
  double ly_;
  double hx_;
  double hy_;
  double x0_;
  double y0_;
  Boundary bc_;
};

struct TwoGridPair {
  Grid2D coarse;
  Grid2D fine;
  int mx;
  int my;
};

inline TwoGridPair build_two_grid(int coarse_nx, int coarse_ny, int mx, int my,
                                  double lx, double ly, Boundary bc,
                                  double x0 = 0.0, double y0 = 0.0) {
  if (mx < 2 || my < 2)
    throw std::invalid_argument("build_two_grid: refinement ratios must be >= 2");
  auto coarse = Grid2D::build(coarse_nx, coarse_ny, lx, ly, bc, x0, y0);
  auto fine = Grid2D::build(mx * coarse_nx, my * coarse_ny, lx, ly, bc, x0, y0);
  return TwoGridPair{coarse, fine, mx, my};
}

class GridFunction {
public:
  explicit GridFunction(const Grid2D& grid, double fill = 0.0)
      : grid_(grid), values_(grid.size(), fill) {}

  // Samples f(x, y) at every stored node.
  template <class F>
  static GridFunction sample(const Grid2D& grid, F&& f) {
    GridFunction w(grid);
    for (int i = 0; i < grid.points_x(); ++i)
      for (int j = 0; j < grid.points_y(); ++j)
        w(i, j) = f(grid.x(i), grid.y(j));
    return w;
  }

  const Grid2D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }

  // Periodic-aware access: wraps indices on periodic grids.
  double at(int i, int j) const noexcept {
    if (grid_.periodic()) return values_[grid_.index(grid_.wrap_x(i), grid_.wrap_y(j))];
    return values_[grid_.index(i, j)];
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  GridFunction& operator+=(const GridFunction& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  GridFunction& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }
  // this += a * o
  GridFunction& axpy(double a, const GridFunction& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += a * o.values_[k];
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }

  template <class F>
  GridFunction map(F&& f) const {
    GridFunction out(grid_);
    for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = f(values_[k]);
    return out;
  }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  void require_same_grid(const GridFunction& o) const {
    if (!(grid_ == o.grid_)) throw std::invalid_argument("grid function grid mismatch");
  }

private:
  Grid2D grid_;
  std::vector<double> values_;
};

// (w, q): interior sum for Dirichlet, full periodic sum otherwise.
inline double inner_l2(const GridFunction& w, const GridFunction& q) {
  w.require_same_grid(q);
  const Grid2D& g = w.grid();
  double sum = 0.0;
  if (g.periodic()) {
    for (int i = 0; i < g.points_x(); ++i)
      for (int j = 0; j < g.points_y(); ++j) sum += w(i, j) * q(i, j);
  } else {
    for (int i = 1; i < g.nx(); ++i)
      for (int j = 1; j < g.ny(); ++j) sum += w(i, j) * q(i, j);
  }
  return g.hx() * g.hy() * sum;
}

// <w, q>: trapezoid weights over the closed Dirichlet node set.
inline double inner_weighted(const GridFunction& w, const GridFunction& q) {
  w.require_same_grid(q);
  const Grid2D& g = w.grid();
  if (g.periodic())
    throw std::invalid_argument("inner_weighted is defined for Dirichlet grids only");
  double sum = 0.0;
  for (int i = 0; i <= g.nx(); ++i) {
    const double wi = (i == 0 || i == g.nx()) ? 0.5 : 1.0;
    for (int j = 0; j <= g.ny(); ++j) {
      const double wj = (j == 0 || j == g.ny()) ? 0.5 : 1.0;
      sum += wi * wj * w(i, j) * q(i, j);
    }
  }
  return g.hx() * g.hy() * sum;
}

inline void require_finite(const GridFunction& w, const char* where) {
  if (!w.all_finite()) throw NonFiniteError(std::string(where) + ": non-finite grid value");
}

inline double norm_l2(const GridFunction& w) { return std::sqrt(inner_l2(w, w)); }

inline double norm_weighted(const GridFunction& w) { return std::sqrt(inner_weighted(w, w)); }

inline double norm_max(const GridFunction& w) {
  double m = 0.0;
  for (double v : w.values()) m = std::max(m, std::abs(v));
  return m;
}

inline bool same_geometry(const Grid2D& a, const Grid2D& b) {
  return a.lx() == b.lx() && a.ly() == b.ly() && a.x0() == b.x0() && a.y0() == b.y0() &&
         a.bc() == b.bc();
}

} // namespace twogrid

#pragma once

// Piecewise bi-cubic Lagrange prolongation from a coarse grid to a nested
// fine grid.
//
// In each coarse cell the 1D interpolant uses four consecutive coarse nodes.
// Dirichlet grids centre the stencil (nodes c-1..c+2) except in the first and
// last cell, which reuse the stencil of their inner neighbour cell. Periodic
// grids always centre the stencil and wrap the indices.

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"

namespace twogrid {

// Cubic Lagrange basis for nodes at xi = -1, 0, 1, 2 (units of the coarse
// spacing, relative to the second stencil node).
inline double cubic_basis(int s, double xi) {
  switch (s) {
    case 0: return -xi * (xi - 1.0) * (xi - 2.0) / 6.0;
    case 1: return (xi + 1.0) * (xi - 1.0) * (xi - 2.0) / 2.0;
    case 2: return -(xi + 1.0) * xi * (xi - 2.0) / 2.0;
    case 3: return (xi + 1.0) * xi * (xi - 1.0) / 6.0;
    default: throw std::out_of_range("cubic_basis: s must be in 0..3, got " + std::to_string(s));
  }
}

// One fine node's 1D stencil: coarse nodes first..first+3 (before wrapping)
// with their weights.
struct AxisStencil {
  int first;
  std::array<double, 4> w;
};

namespace detail {

inline std::vector<AxisStencil> axis_stencils(int coarse_n, int ratio, Boundary bc) {
  const bool periodic = bc == Boundary::periodic;
  const int fine_points = periodic ? coarse_n * ratio : coarse_n * ratio + 1;
  std::vector<AxisStencil> out(static_cast<std::size_t>(fine_points));
  for (int f = 0; f < fine_points; ++f) {
    AxisStencil& st = out[static_cast<std::size_t>(f)];
    st.w = {0.0, 0.0, 0.0, 0.0};
    if (f % ratio == 0) {
      // Coincident node: exact injection.
      const int k = f / ratio;
      st.first = periodic ? k - 1 : std::clamp(k - 1, 0, coarse_n - 3);
      st.w[static_cast<std::size_t>(k - st.first)] = 1.0;
      continue;
    }
    const int cell = f / ratio;
    const double local = static_cast<double>(f - cell * ratio) / ratio;
    double xi = local;
    if (periodic || (cell >= 1 && cell <= coarse_n - 2)) {
      st.first = cell - 1;
    } else if (cell == 0) {
      st.first = 0;
      xi = local - 1.0;
    } else {
      st.first = coarse_n - 3;
      xi = local + 1.0;
    }
    for (int s = 0; s < 4; ++s) st.w[static_cast<std::size_t>(s)] = cubic_basis(s, xi);
  }
  return out;
}

} // namespace detail

class ProlongationPlan {
public:
  explicit ProlongationPlan(const TwoGridPair& pair)
      : pair_(pair),
        sx_(detail::axis_stencils(pair.coarse.nx(), pair.mx, pair.coarse.bc())),
        sy_(detail::axis_stencils(pair.coarse.ny(), pair.my, pair.coarse.bc())) {}

  const TwoGridPair& pair() const noexcept { return pair_; }
  const AxisStencil& stencil_x(int i) const { return sx_.at(static_cast<std::size_t>(i)); }
  const AxisStencil& stencil_y(int j) const { return sy_.at(static_cast<std::size_t>(j)); }

private:
  TwoGridPair pair_;
  std::vector<AxisStencil> sx_;
  std::vector<AxisStencil> sy_;
};

inline ProlongationPlan build_plan(const TwoGridPair& pair) {
  if (pair.coarse.nx() < Grid2D::min_nodes || pair.coarse.ny() < Grid2D::min_nodes)
    throw std::invalid_argument("build_plan: coarse grid too small for cubic stencils");
  if (pair.fine.nx() != pair.mx * pair.coarse.nx() || pair.fine.ny() != pair.my * pair.coarse.ny() ||
      !same_geometry(pair.coarse, pair.fine))
    throw std::invalid_argument("build_plan: grids are not nested");
  return ProlongationPlan(pair);
}

// Pi_H = Pi_{H,y} Pi_{H,x}: interpolate along x for every coarse row, then
// along y.
inline GridFunction prolongate(const ProlongationPlan& plan, const GridFunction& coarse) {
  const Grid2D& cg = plan.pair().coarse;
  const Grid2D& fg = plan.pair().fine;
  if (!(coarse.grid() == cg)) throw std::invalid_argument("prolongate: coarse grid mismatch");
  const int cpy = cg.points_y();
  const int fpx = fg.points_x(), fpy = fg.points_y();

  // xi(i_fine, j_coarse)
  std::vector<double> xi(static_cast<std::size_t>(fpx) * cpy);
  for (int i = 0; i < fpx; ++i) {
    const AxisStencil& st = plan.stencil_x(i);
    for (int jc = 0; jc < cpy; ++jc) {
      double s = 0.0;
      for (int q = 0; q < 4; ++q) s += st.w[q] * coarse.at(st.first + q, jc);
      xi[static_cast<std::size_t>(i) * cpy + jc] = s;
    }
  }
  GridFunction out(fg);
  for (int i = 0; i < fpx; ++i) {
    const double* row = &xi[static_cast<std::size_t>(i) * cpy];
    for (int j = 0; j < fpy; ++j) {
      const AxisStencil& st = plan.stencil_y(j);
      double s = 0.0;
      for (int q = 0; q < 4; ++q) {
        int jc = st.first + q;
        if (cg.periodic()) jc = cg.wrap_y(jc);
        s += st.w[q] * row[jc];
      }
      out(i, j) = s;
    }
  }
  return out;
}

// Pointwise injection at coincident nodes (fine -> coarse).
inline GridFunction inject(const TwoGridPair& pair, const GridFunction& fine) {
  if (!(fine.grid() == pair.fine)) throw std::invalid_argument("inject: fine grid mismatch");
  GridFunction out(pair.coarse);
  for (int i = 0; i < pair.coarse.points_x(); ++i)
    for (int j = 0; j < pair.coarse.points_y(); ++j) out(i, j) = fine(i * pair.mx, j * pair.my);
  return out;
}

} // namespace twogrid

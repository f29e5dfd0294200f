#pragma once

// Fourth-order compact operators on a Grid2D.
//
//   A_x w_i   = (w_{i-1} + 10 w_i + w_{i+1}) / 12   (identity on Dirichlet boundary columns)
//   d2_x w_i  = (w_{i-1} - 2 w_i + w_{i+1}) / hx^2
//   A         = A_x A_y
//   Lambda    = A_x d2_y + A_y d2_x
//
// plus the per-step operator  alpha*A - gamma*Lambda - A o diag(d)  both as a
// matrix-free composition and as an assembled CSR matrix over the unknowns.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "sparse.hpp"

namespace twogrid {

enum class Axis { x, y };

namespace detail {

// Calls fn(i, j, im, ip, jm, jp) for every node where a 3-point stencil along
// both axes is defined: interior nodes for Dirichlet, all nodes (wrapped) for
// periodic.
template <class Fn>
void for_each_stencil_node(const Grid2D& g, Fn&& fn) {
  if (g.periodic()) {
    const int px = g.points_x(), py = g.points_y();
    for (int i = 0; i < px; ++i) {
      const int im = i == 0 ? px - 1 : i - 1;
      const int ip = i == px - 1 ? 0 : i + 1;
      for (int j = 0; j < py; ++j) {
        const int jm = j == 0 ? py - 1 : j - 1;
        const int jp = j == py - 1 ? 0 : j + 1;
        fn(i, j, im, ip, jm, jp);
      }
    }
  } else {
    for (int i = 1; i < g.nx(); ++i)
      for (int j = 1; j < g.ny(); ++j) fn(i, j, i - 1, i + 1, j - 1, j + 1);
  }
}

inline void require_dirichlet(const Grid2D& g, const char* what) {
  if (g.periodic()) throw std::invalid_argument(std::string(what) + ": Dirichlet grid required");
}

} // namespace detail

// A_{axis} w. Dirichlet rows at the two boundary lines normal to `axis` are
// the identity.
inline GridFunction apply_A_axis(const GridFunction& w, Axis axis) {
  const Grid2D& g = w.grid();
  GridFunction out(g);
  const int px = g.points_x(), py = g.points_y();
  for (int i = 0; i < px; ++i) {
    for (int j = 0; j < py; ++j) {
      const int k = axis == Axis::x ? i : j;
      const int n = axis == Axis::x ? g.nx() : g.ny();
      if (!g.periodic() && (k == 0 || k == n)) {
        out(i, j) = w(i, j);
        continue;
      }
      const double a = axis == Axis::x ? w.at(i - 1, j) : w.at(i, j - 1);
      const double b = axis == Axis::x ? w.at(i + 1, j) : w.at(i, j + 1);
      out(i, j) = (a + 10.0 * w(i, j) + b) / 12.0;
    }
  }
  return out;
}

// d2_{axis} w. On Dirichlet grids the value on the two boundary lines normal
// to `axis` is left at zero (the difference is not defined there).
inline GridFunction apply_d2_axis(const GridFunction& w, Axis axis) {
  const Grid2D& g = w.grid();
  GridFunction out(g);
  const double h = axis == Axis::x ? g.hx() : g.hy();
  const double inv_h2 = 1.0 / (h * h);
  const int px = g.points_x(), py = g.points_y();
  for (int i = 0; i < px; ++i) {
    for (int j = 0; j < py; ++j) {
      const int k = axis == Axis::x ? i : j;
      const int n = axis == Axis::x ? g.nx() : g.ny();
      if (!g.periodic() && (k == 0 || k == n)) continue;
      const double a = axis == Axis::x ? w.at(i - 1, j) : w.at(i, j - 1);
      const double b = axis == Axis::x ? w.at(i + 1, j) : w.at(i, j + 1);
      out(i, j) = (a - 2.0 * w(i, j) + b) * inv_h2;
    }
  }
  return out;
}

inline GridFunction apply_A(const GridFunction& w) {
  return apply_A_axis(apply_A_axis(w, Axis::y), Axis::x);
}

namespace detail {
inline void zero_boundary(GridFunction& w) {
  const Grid2D& g = w.grid();
  if (g.periodic()) return;
  for (int i = 0; i <= g.nx(); ++i) w(i, 0) = w(i, g.ny()) = 0.0;
  for (int j = 0; j <= g.ny(); ++j) w(0, j) = w(g.nx(), j) = 0.0;
}
} // namespace detail

// Lambda w on interior nodes (reads boundary values); zero on the Dirichlet
// boundary.
inline GridFunction apply_Lambda(const GridFunction& w) {
  GridFunction out = apply_A_axis(apply_d2_axis(w, Axis::y), Axis::x);
  out += apply_A_axis(apply_d2_axis(w, Axis::x), Axis::y);
  detail::zero_boundary(out);
  return out;
}

// Standard 5-point Laplacian d2_x + d2_y; zero on the Dirichlet boundary.
inline GridFunction apply_laplacian(const GridFunction& w) {
  GridFunction out = apply_d2_axis(w, Axis::x);
  out += apply_d2_axis(w, Axis::y);
  detail::zero_boundary(out);
  return out;
}

struct Norms {
  double l2;
  double max;
  double a_norm;
};

// ||w||, ||w||_inf and ||w||_A = sqrt((A w, w)).
inline Norms norms(const GridFunction& w) {
  require_finite(w, "norms");
  const double a2 = inner_l2(apply_A(w), w);
  return Norms{norm_l2(w), norm_max(w), std::sqrt(std::max(a2, 0.0))};
}

// alpha*A w - gamma*Lambda w - A(d .* w), evaluated by composing the
// one-dimensional operators. Interior values only (Dirichlet boundary = 0).
inline GridFunction apply_step_operator(const GridFunction& w, double alpha, double gamma,
                                        const GridFunction* d) {
  GridFunction out = apply_A(w);
  out *= alpha;
  out.axpy(-gamma, apply_Lambda(w));
  if (d) {
    w.require_same_grid(*d);
    GridFunction dw(w.grid());
    for (std::size_t k = 0; k < w.size(); ++k) dw.values()[k] = d->values()[k] * w.values()[k];
    out -= apply_A(dw);
  }
  detail::zero_boundary(out);
  return out;
}

// Maps between full grid functions and the unknown vector of the per-step
// system (lexicographic in (i, j) over interior nodes for Dirichlet, all
// nodes for periodic).
class UnknownMap {
public:
  explicit UnknownMap(const Grid2D& g) : grid_(g) {}

  const Grid2D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.unknowns(); }

  // Returns -1 for Dirichlet boundary nodes.
  long index(int i, int j) const noexcept {
    if (grid_.periodic()) return static_cast<long>(grid_.index(i, j));
    if (grid_.is_boundary(i, j)) return -1;
    return static_cast<long>(i - 1) * (grid_.ny() - 1) + (j - 1);
  }

  std::vector<double> gather(const GridFunction& w) const {
    if (grid_.periodic()) return {w.values().begin(), w.values().end()};
    std::vector<double> v;
    v.reserve(size());
    for (int i = 1; i < grid_.nx(); ++i)
      for (int j = 1; j < grid_.ny(); ++j) v.push_back(w(i, j));
    return v;
  }

  // Writes the unknowns into w, leaving Dirichlet boundary values untouched.
  void scatter(std::span<const double> v, GridFunction& w) const {
    if (grid_.periodic()) {
      std::copy(v.begin(), v.end(), w.values().begin());
      return;
    }
    std::size_t k = 0;
    for (int i = 1; i < grid_.nx(); ++i)
      for (int j = 1; j < grid_.ny(); ++j) w(i, j) = v[k++];
  }

private:
  Grid2D grid_;
};

// Assembled alpha*A - gamma*Lambda - A o diag(d) over the unknowns. Dirichlet
// boundary columns are eliminated (see boundary_rhs).
struct StepMatrix {
  CsrMatrix matrix;
  UnknownMap unknowns;
  double alpha;
  double gamma;
  std::optional<GridFunction> reaction;
};

namespace detail {

struct StencilWeights {
  std::array<double, 3> ax{1.0 / 12.0, 10.0 / 12.0, 1.0 / 12.0};
  std::array<double, 3> lx;
  std::array<double, 3> ly;
  explicit StencilWeights(const Grid2D& g) {
    const double cx = 1.0 / (g.hx() * g.hx());
    const double cy = 1.0 / (g.hy() * g.hy());
    lx = {cx, -2.0 * cx, cx};
    ly = {cy, -2.0 * cy, cy};
  }
};

} // namespace detail

inline StepMatrix assemble_step_matrix(const Grid2D& g, double alpha, double gamma,
                                       const GridFunction* d) {
  if (!(alpha > 0.0)) throw std::invalid_argument("assemble_step_matrix: alpha must be positive");
  if (d && !(d->grid() == g)) throw std::invalid_argument("assemble_step_matrix: grid mismatch");
  const detail::StencilWeights sw(g);
  const auto& a = sw.ax;
  UnknownMap map(g);
  CsrMatrix m(map.size());

  struct Entry {
    long col;
    double v;
  };
  std::array<Entry, 9> row{};

  auto emit_row = [&](int i, int j, int im, int ip, int jm, int jp) {
    const std::array<int, 3> is{im, i, ip};
    const std::array<int, 3> js{jm, j, jp};
    int count = 0;
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) {
        const long col = map.index(is[p], js[q]);
        if (col < 0) continue;
        double v = alpha * a[p] * a[q] - gamma * (a[p] * sw.ly[q] + a[q] * sw.lx[p]);
        if (d) v -= a[p] * a[q] * (*d)(is[p], js[q]);
        row[count++] = Entry{col, v};
      }
    }
    std::sort(row.begin(), row.begin() + count,
              [](const Entry& l, const Entry& r) { return l.col < r.col; });
    for (int e = 0; e < count; ++e) m.push(static_cast<std::size_t>(row[e].col), row[e].v);
    m.finish_row();
  };
  detail::for_each_stencil_node(g, emit_row);

  std::optional<GridFunction> reaction;
  if (d) reaction = *d;
  return StepMatrix{std::move(m), map, alpha, gamma, std::move(reaction)};
}

// Moves known Dirichlet boundary values to the right-hand side: returns, at
// interior nodes, minus the contribution of `boundary_values` (boundary nodes
// only) under alpha*A - gamma*Lambda - A o diag(d).
inline GridFunction boundary_rhs(const Grid2D& g, double alpha, double gamma,
                                 const GridFunction* d, const GridFunction& boundary_values) {
  detail::require_dirichlet(g, "boundary_rhs");
  if (!(boundary_values.grid() == g)) throw std::invalid_argument("boundary_rhs: grid mismatch");
  const detail::StencilWeights sw(g);
  const auto& a = sw.ax;
  GridFunction out(g);
  auto touch = [&](int i, int j, int im, int ip, int jm, int jp) {
    if (i != 1 && i != g.nx() - 1 && j != 1 && j != g.ny() - 1) return;
    const std::array<int, 3> is{im, i, ip};
    const std::array<int, 3> js{jm, j, jp};
    double s = 0.0;
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        if (!g.is_boundary(is[p], js[q])) continue;
        double v = alpha * a[p] * a[q] - gamma * (a[p] * sw.ly[q] + a[q] * sw.lx[p]);
        if (d) v -= a[p] * a[q] * (*d)(is[p], js[q]);
        s += v * boundary_values(is[p], js[q]);
      }
    out(i, j) = -s;
  };
  detail::for_each_stencil_node(g, touch);
  return out;
}

} // namespace twogrid

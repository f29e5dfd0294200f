#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "twogrid/grid.hpp"
#include "twogrid/interp.hpp"
#include "twogrid/random.hpp"

using namespace twogrid;

namespace {

constexpr double pi = std::numbers::pi;
const double c3 = 4.0 * (3.0 + 27.0 * 27.0 + std::pow(10.0 + 7.0 * std::sqrt(7.0), 2)) / (27.0 * 27.0);
const double c4 = std::pow((54.0 + 2.0 * std::sqrt(3.0)) / 27.0, 2);

GridFunction random_coarse(const Grid2D& g, CounterRng& rng, bool zero_boundary) {
  GridFunction w(g);
  for (int i = 0; i < g.points_x(); ++i)
    for (int j = 0; j < g.points_y(); ++j)
      w(i, j) = zero_boundary && g.is_boundary(i, j) ? 0.0 : rng.uniform(-1.0, 1.0);
  return w;
}

} // namespace

TEST(CubicBasis, Midpoint) {
  EXPECT_DOUBLE_EQ(cubic_basis(1, 0.5), 0.5625);
  EXPECT_DOUBLE_EQ(cubic_basis(2, 0.5), 0.5625);
  EXPECT_DOUBLE_EQ(cubic_basis(0, 0.5), -0.0625);
  EXPECT_DOUBLE_EQ(cubic_basis(3, 0.5), -0.0625);
  EXPECT_THROW(cubic_basis(4, 0.5), std::out_of_range);
}

TEST(CubicBasis, Cardinal) {
  for (int s = 0; s < 4; ++s)
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(cubic_basis(s, k - 1.0), s == k ? 1.0 : 0.0, 1e-15);
}

TEST(CubicBasis, OuterNodeMaximumOnCentralCell) {
  double m = 0.0;
  for (int k = 0; k <= 200000; ++k) m = std::max(m, std::abs(cubic_basis(0, k / 200000.0)));
  EXPECT_NEAR(m, std::sqrt(3.0) / 27.0, 1e-10);
}

// The basis of node c, sampled on its left and right neighbour cells.
TEST(CubicBasis, NeighbourCellBounds) {
  const double right = (7.0 * std::sqrt(7.0) - 10.0) / 27.0;
  const double left = (7.0 * std::sqrt(7.0) + 10.0) / 27.0;
  double on_right = 0.0, on_left = 0.0;
  for (int k = 0; k <= 200000; ++k) {
    const double xi = k / 200000.0;
    on_right = std::max(on_right, std::abs(cubic_basis(1, 1.0 + xi)));
    on_left = std::max(on_left, std::abs(cubic_basis(1, -1.0 + xi)));
  }
  EXPECT_LE(on_right, right + 1e-12);
  EXPECT_LE(on_left, left + 1e-12);
  EXPECT_NEAR(on_right, right, 1e-9);
  EXPECT_NEAR(on_left, left, 1e-9);
}

TEST(Stencils, PartitionOfUnity) {
  for (Boundary bc : {Boundary::dirichlet, Boundary::periodic}) {
    const ProlongationPlan plan = build_plan(build_two_grid(6, 5, 4, 3, 1.0, 1.0, bc));
    for (int i = 0; i < plan.pair().fine.points_x(); ++i) {
      const auto& w = plan.stencil_x(i).w;
      EXPECT_NEAR(w[0] + w[1] + w[2] + w[3], 1.0, 1e-14);
    }
    for (int j = 0; j < plan.pair().fine.points_y(); ++j) {
      const auto& w = plan.stencil_y(j).w;
      EXPECT_NEAR(w[0] + w[1] + w[2] + w[3], 1.0, 1e-14);
    }
  }
}

TEST(Stencils, DirichletEdgeCellsShareInnerStencil) {
  const ProlongationPlan plan = build_plan(build_two_grid(6, 6, 4, 4, 1.0, 1.0, Boundary::dirichlet));
  EXPECT_EQ(plan.stencil_x(1).first, 0);
  EXPECT_EQ(plan.stencil_x(5).first, 0);
  EXPECT_EQ(plan.stencil_x(23).first, 3);
  EXPECT_NEAR(plan.stencil_x(2).w[0], cubic_basis(0, -0.5), 1e-15);
  EXPECT_NEAR(plan.stencil_x(2).w[1], cubic_basis(1, -0.5), 1e-15);
}

TEST(Stencils, PeriodicLastCellWrapsToNodeOne) {
  const int n = 6, m = 4;
  const ProlongationPlan plan = build_plan(build_two_grid(n, n, m, m, 1.0, 1.0, Boundary::periodic));
  const AxisStencil& st = plan.stencil_x(n * m - 1);
  EXPECT_EQ(st.first, n - 2);
  const Grid2D& cg = plan.pair().coarse;
  EXPECT_EQ(cg.wrap_x(st.first + 2), 0);
  EXPECT_EQ(cg.wrap_x(st.first + 3), 1);
}

TEST(Prolongate, ExactAtCoincidentNodes) {
  CounterRng rng(12);
  for (Boundary bc : {Boundary::dirichlet, Boundary::periodic}) {
    const TwoGridPair pair = build_two_grid(7, 5, 3, 4, 1.0, 1.0, bc);
    const GridFunction w = random_coarse(pair.coarse, rng, false);
    const GridFunction f = prolongate(build_plan(pair), w);
    for (int i = 0; i < pair.coarse.points_x(); ++i)
      for (int j = 0; j < pair.coarse.points_y(); ++j) EXPECT_EQ(f(i * 3, j * 4), w(i, j));
    const GridFunction back = inject(pair, f);
    for (std::size_t k = 0; k < w.size(); ++k) EXPECT_EQ(back.values()[k], w.values()[k]);
  }
}

TEST(Prolongate, ReproducesBicubics) {
  const TwoGridPair pair = build_two_grid(5, 6, 4, 3, 1.0, 1.0, Boundary::dirichlet);
  const ProlongationPlan plan = build_plan(pair);
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b) {
      auto fn = [a, b](double x, double y) { return std::pow(x, a) * std::pow(y, b); };
      const GridFunction f = prolongate(plan, GridFunction::sample(pair.coarse, fn));
      const GridFunction exact = GridFunction::sample(pair.fine, fn);
      for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(f.values()[k], exact.values()[k], 1e-12);
    }
}

TEST(Prolongate, Linear) {
  CounterRng rng(9);
  const TwoGridPair pair = build_two_grid(6, 6, 3, 3, 1.0, 1.0, Boundary::periodic);
  const ProlongationPlan plan = build_plan(pair);
  const GridFunction u = random_coarse(pair.coarse, rng, false), v = random_coarse(pair.coarse, rng, false);
  const GridFunction lhs = prolongate(plan, 2.0 * u - 0.5 * v);
  const GridFunction rhs = 2.0 * prolongate(plan, u) - 0.5 * prolongate(plan, v);
  for (std::size_t k = 0; k < lhs.size(); ++k) EXPECT_NEAR(lhs.values()[k], rhs.values()[k], 1e-14);
}

TEST(Prolongate, FourthOrderAccuracy) {
  auto fn = [](double x, double y) { return std::sin(2 * pi * x) * std::sin(2 * pi * y); };
  for (Boundary bc : {Boundary::dirichlet, Boundary::periodic}) {
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
      const TwoGridPair pair = build_two_grid(n, n, 4, 4, 1.0, 1.0, bc);
      const GridFunction f = prolongate(build_plan(pair), GridFunction::sample(pair.coarse, fn));
      GridFunction e = GridFunction::sample(pair.fine, fn);
      e -= f;
      err.push_back(norm_max(e));
    }
    for (std::size_t k = 1; k < err.size(); ++k) EXPECT_NEAR(std::log2(err[k - 1] / err[k]), 4.0, 0.15);
  }
}

TEST(Prolongate, OperatorNormBounds) {
  CounterRng rng(2025);
  for (Boundary bc : {Boundary::dirichlet, Boundary::periodic}) {
    const TwoGridPair pair = build_two_grid(8, 8, 5, 5, 1.0, 1.0, bc);
    const ProlongationPlan plan = build_plan(pair);
    double worst_l2 = 0.0, worst_max = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const GridFunction w = random_coarse(pair.coarse, rng, bc == Boundary::dirichlet);
      const GridFunction f = prolongate(plan, w);
      worst_l2 = std::max(worst_l2, norm_l2(f) / norm_l2(w));
      worst_max = std::max(worst_max, norm_max(f) / norm_max(w));
    }
    EXPECT_LE(worst_l2, c3);
    EXPECT_LE(worst_max, c4);
  }
  EXPECT_NEAR(c3, 8.4796, 1e-4);
  EXPECT_NEAR(c4, 4.5297, 1e-4);
}

TEST(Prolongate, Rejections) {
  const TwoGridPair pair = build_two_grid(6, 6, 2, 2, 1.0, 1.0, Boundary::dirichlet);
  const ProlongationPlan plan = build_plan(pair);
  EXPECT_THROW(prolongate(plan, GridFunction(pair.fine)), std::invalid_argument);
  TwoGridPair bad = pair;
  bad.mx = 3;
  EXPECT_THROW(build_plan(bad), std::invalid_argument);
}

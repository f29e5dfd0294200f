#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "twogrid/compact_ops.hpp"
#include "twogrid/random.hpp"

using namespace twogrid;

namespace {

constexpr double pi = std::numbers::pi;

GridFunction random_function(const Grid2D& g, CounterRng& rng) {
  GridFunction w(g);
  for (double& v : w.values()) v = rng.uniform(-1.0, 1.0);
  return w;
}

double max_interior_diff(const GridFunction& a, const GridFunction& b) {
  const Grid2D& g = a.grid();
  double m = 0.0;
  for (int i = 0; i < g.points_x(); ++i)
    for (int j = 0; j < g.points_y(); ++j)
      if (!g.is_boundary(i, j)) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

// Dense matrix of alpha*A - gamma*Lambda - A o diag(d) over ALL nodes of a
// Dirichlet grid, built column by column from the matrix-free operator.
Eigen::MatrixXd dense_full_operator(const Grid2D& g, double alpha, double gamma, const GridFunction* d) {
  const int n = static_cast<int>(g.size());
  Eigen::MatrixXd m(n, n);
  for (int c = 0; c < n; ++c) {
    GridFunction e(g);
    e.values()[c] = 1.0;
    const GridFunction col = apply_step_operator(e, alpha, gamma, d);
    for (int r = 0; r < n; ++r) m(r, c) = col.values()[r];
  }
  return m;
}

} // namespace

TEST(CompactA, ConstantPreserved) {
  for (Boundary bc : {Boundary::dirichlet, Boundary::periodic}) {
    const GridFunction one(Grid2D::build(7, 5, 1.0, 1.0, bc), 1.0);
    for (Axis ax : {Axis::x, Axis::y})
      for (const GridFunction out = apply_A_axis(one, ax); double v : out.values()) EXPECT_NEAR(v, 1.0, 1e-15);
  }
}

TEST(CompactA, QuadraticAtInteriorNode) {
  const Grid2D g = Grid2D::build(10, 10, 1.0, 1.0, Boundary::dirichlet);
  const GridFunction w = GridFunction::sample(g, [](double x, double) { return x * x; });
  const GridFunction aw = apply_A_axis(w, Axis::x);
  const double h = 0.1;
  EXPECT_NEAR(aw(5, 3), 0.25 + h * h / 6.0, 1e-15);
  // Identity on the boundary lines normal to x.
  EXPECT_EQ(aw(0, 3), w(0, 3));
  EXPECT_EQ(aw(10, 3), w(10, 3));
}

TEST(CompactA, PeriodicEigenfunction) {
  const Grid2D g = Grid2D::build(16, 8, 1.0, 1.0, Boundary::periodic);
  const GridFunction w = GridFunction::sample(g, [](double x, double) { return std::sin(2 * pi * x); });
  const GridFunction aw = apply_A_axis(w, Axis::x);
  const double lambda = 1.0 - (1.0 - std::cos(2 * pi * g.hx())) / 6.0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 8; ++j) {
      const double direct = (w.at(i - 1, j) + 10 * w(i, j) + w.at(i + 1, j)) / 12.0;
      EXPECT_NEAR(aw(i, j), direct, 1e-15);
      EXPECT_NEAR(aw(i, j), lambda * w(i, j), 1e-15);
    }
}

TEST(SecondDifference, ExactCases) {
  const Grid2D g = Grid2D::build(10, 10, 1.0, 1.0, Boundary::dirichlet);
  const GridFunction lin = GridFunction::sample(g, [](double x, double y) { return 3 * x - y + 1; });
  for (const GridFunction out = apply_d2_axis(lin, Axis::x); double v : out.values()) EXPECT_NEAR(v, 0.0, 1e-11);
  const GridFunction quad = GridFunction::sample(g, [](double x, double) { return x * x; });
  const GridFunction d2q = apply_d2_axis(quad, Axis::x);
  for (int i = 1; i < 10; ++i) EXPECT_NEAR(d2q(i, 4), 2.0, 1e-11);
  const GridFunction quart = GridFunction::sample(g, [](double x, double) { return std::pow(x, 4); });
  const double direct = (std::pow(0.4, 4) - 2 * std::pow(0.5, 4) + std::pow(0.6, 4)) / 0.01;
  EXPECT_NEAR(direct, 3.02, 1e-12);
  EXPECT_NEAR(apply_d2_axis(quart, Axis::x)(5, 2), direct, 1e-12);
}

TEST(Lambda, SumOfSquares) {
  const Grid2D g = Grid2D::build(8, 12, 1.0, 1.5, Boundary::dirichlet);
  const GridFunction w = GridFunction::sample(g, [](double x, double y) { return x * x + y * y; });
  const GridFunction lw = apply_Lambda(w);
  for (int i = 1; i < 8; ++i)
    for (int j = 1; j < 12; ++j) EXPECT_NEAR(lw(i, j), 4.0, 1e-10);
}

TEST(Lambda, ConstantAnnihilated) {
  for (Boundary bc : {Boundary::dirichlet, Boundary::periodic}) {
    const GridFunction c(Grid2D::build(9, 9, 1.0, 1.0, bc), 2.5);
    for (const GridFunction out = apply_Lambda(c); double v : out.values()) EXPECT_NEAR(v, 0.0, 1e-10);
  }
}

// A(Lap u) - Lambda u = O(h^4) for u = sin(2 pi x) sin(2 pi y).
TEST(Lambda, FourthOrderTruncation) {
  std::vector<double> err;
  for (int n : {32, 64, 128}) {
    const Grid2D g = Grid2D::build(n, n, 1.0, 1.0, Boundary::dirichlet);
    const GridFunction u = GridFunction::sample(g, [](double x, double y) {
      return std::sin(2 * pi * x) * std::sin(2 * pi * y);
    });
    const GridFunction lap = GridFunction::sample(g, [](double x, double y) {
      return -8 * pi * pi * std::sin(2 * pi * x) * std::sin(2 * pi * y);
    });
    err.push_back(max_interior_diff(apply_A(lap), apply_Lambda(u)));
  }
  for (std::size_t k = 1; k < err.size(); ++k) EXPECT_NEAR(std::log2(err[k - 1] / err[k]), 4.0, 0.1);
}

TEST(CompactOps, Linearity) {
  CounterRng rng(5);
  for (Boundary bc : {Boundary::dirichlet, Boundary::periodic}) {
    const Grid2D g = Grid2D::build(11, 9, 1.0, 1.0, bc);
    const GridFunction u = random_function(g, rng), v = random_function(g, rng);
    const double a = 0.7, b = -1.3;
    auto check = [&](auto op, double scale) {
      const GridFunction lhs = op(a * u + b * v);
      const GridFunction rhs = a * op(u) + b * op(v);
      for (std::size_t k = 0; k < lhs.size(); ++k)
        EXPECT_NEAR(lhs.values()[k], rhs.values()[k], 1e-13 * scale);
    };
    check([](const GridFunction& w) { return apply_A(w); }, 1.0);
    check([](const GridFunction& w) { return apply_d2_axis(w, Axis::y); }, 1e3);
    check([](const GridFunction& w) { return apply_Lambda(w); }, 1e3);
  }
}

TEST(StepMatrix, MassOnlyEqualsTwoAxisAverages) {
  const Grid2D g = Grid2D::build(7, 6, 1.0, 1.0, Boundary::periodic);
  CounterRng rng(1);
  const GridFunction w = random_function(g, rng);
  const StepMatrix m = assemble_step_matrix(g, 1.0, 0.0, nullptr);
  const std::vector<double> y = m.matrix.multiply(m.unknowns.gather(w));
  const std::vector<double> ref = m.unknowns.gather(apply_A_axis(apply_A_axis(w, Axis::x), Axis::y));
  for (std::size_t k = 0; k < y.size(); ++k) EXPECT_NEAR(y[k], ref[k], 1e-15);
}

TEST(StepMatrix, AgreesWithMatrixFreeComposition) {
  CounterRng rng(77);
  for (Boundary bc : {Boundary::dirichlet, Boundary::periodic}) {
    const Grid2D g = Grid2D::build(9, 7, 1.0, 0.8, bc);
    const GridFunction d = random_function(g, rng);
    for (const GridFunction* dp : {static_cast<const GridFunction*>(nullptr), &d}) {
      const StepMatrix m = assemble_step_matrix(g, 3.5, 0.2, dp);
      for (int trial = 0; trial < 50; ++trial) {
        GridFunction w = random_function(g, rng);
        if (bc == Boundary::dirichlet)
          for (int i = 0; i <= g.nx(); ++i)
            for (int j = 0; j <= g.ny(); ++j)
              if (g.is_boundary(i, j)) w(i, j) = 0.0;
        const std::vector<double> y = m.matrix.multiply(m.unknowns.gather(w));
        const std::vector<double> ref = m.unknowns.gather(apply_step_operator(w, 3.5, 0.2, dp));
        double scale = 0.0;
        for (double v : ref) scale = std::max(scale, std::abs(v));
        for (std::size_t k = 0; k < y.size(); ++k) EXPECT_NEAR(y[k], ref[k], 1e-13 * scale);
      }
    }
  }
}

TEST(StepMatrix, PeriodicRowSumsEqualAlpha) {
  const Grid2D g = Grid2D::build(8, 8, 1.0, 1.0, Boundary::periodic);
  const StepMatrix m = assemble_step_matrix(g, 2.75, 0.3, nullptr);
  const auto rp = m.matrix.row_ptr();
  const auto v = m.matrix.values();
  for (std::size_t r = 0; r < m.matrix.rows(); ++r) {
    double s = 0.0;
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) s += v[k];
    EXPECT_NEAR(s, 2.75, 1e-11);
    EXPECT_LE(rp[r + 1] - rp[r], 9u);
  }
}

TEST(StepMatrix, RejectsNonpositiveAlpha) {
  const Grid2D g = Grid2D::build(6, 6, 1.0, 1.0, Boundary::periodic);
  EXPECT_THROW(assemble_step_matrix(g, 0.0, 1.0, nullptr), std::invalid_argument);
}

TEST(BoundaryRhs, ZeroBoundaryGivesZero) {
  const Grid2D g = Grid2D::build(6, 6, 1.0, 1.0, Boundary::dirichlet);
  for (const GridFunction out = boundary_rhs(g, 2.0, 1.0, nullptr, GridFunction(g)); double v : out.values()) EXPECT_EQ(v, 0.0);
  const Grid2D p = Grid2D::build(6, 6, 1.0, 1.0, Boundary::periodic);
  EXPECT_THROW(boundary_rhs(p, 2.0, 1.0, nullptr, GridFunction(p)), std::invalid_argument);
}

// Full system with boundary rows (identity) vs reduced system + boundary_rhs.
TEST(BoundaryRhs, ReducedSystemMatchesFullDenseSolve) {
  const Grid2D g = Grid2D::build(5, 5, 1.0, 1.0, Boundary::dirichlet);
  CounterRng rng(3);
  const GridFunction d = random_function(g, rng);
  GridFunction bnd(g), f(g);
  for (int i = 0; i <= 5; ++i)
    for (int j = 0; j <= 5; ++j) {
      if (g.is_boundary(i, j)) bnd(i, j) = 1.0;
      else f(i, j) = rng.uniform(-1, 1);
    }
  const double alpha = 4.0, gamma = 0.5;

  Eigen::MatrixXd full = dense_full_operator(g, alpha, gamma, &d);
  Eigen::VectorXd rhs(static_cast<int>(g.size()));
  for (int i = 0; i <= 5; ++i)
    for (int j = 0; j <= 5; ++j) {
      const int r = static_cast<int>(g.index(i, j));
      if (g.is_boundary(i, j)) {
        full.row(r).setZero();
        full(r, r) = 1.0;
        rhs[r] = bnd(i, j);
      } else {
        rhs[r] = f(i, j);
      }
    }
  const Eigen::VectorXd x_full = full.partialPivLu().solve(rhs);

  const StepMatrix m = assemble_step_matrix(g, alpha, gamma, &d);
  std::vector<double> b = m.unknowns.gather(f);
  const std::vector<double> br = m.unknowns.gather(boundary_rhs(g, alpha, gamma, &d, bnd));
  for (std::size_t k = 0; k < b.size(); ++k) b[k] += br[k];
  const int n = static_cast<int>(m.matrix.rows());
  Eigen::MatrixXd red = Eigen::MatrixXd::Zero(n, n);
  const auto rp = m.matrix.row_ptr();
  for (int r = 0; r < n; ++r)
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k)
      red(r, static_cast<int>(m.matrix.cols()[k])) = m.matrix.values()[k];
  const Eigen::VectorXd x_red = red.partialPivLu().solve(Eigen::Map<Eigen::VectorXd>(b.data(), n));

  GridFunction u = bnd;
  m.unknowns.scatter(std::vector<double>(x_red.data(), x_red.data() + n), u);
  for (int i = 0; i <= 5; ++i)
    for (int j = 0; j <= 5; ++j) EXPECT_NEAR(u(i, j), x_full[static_cast<int>(g.index(i, j))], 1e-13);
}

TEST(UnknownMap, GatherScatterRoundTrip) {
  const Grid2D g = Grid2D::build(6, 5, 1.0, 1.0, Boundary::dirichlet);
  const UnknownMap map(g);
  EXPECT_EQ(map.size(), 20u);
  EXPECT_EQ(map.index(0, 3), -1);
  EXPECT_EQ(map.index(1, 1), 0);
  EXPECT_EQ(map.index(2, 1), 4);
  CounterRng rng(6);
  const GridFunction w = random_function(g, rng);
  GridFunction back(g);
  map.scatter(map.gather(w), back);
  for (int i = 1; i < 6; ++i)
    for (int j = 1; j < 5; ++j) EXPECT_EQ(back(i, j), w(i, j));
  EXPECT_EQ(back(0, 0), 0.0);
}

TEST(Sparse, MatrixMarketDump) {
  const StepMatrix m = assemble_step_matrix(Grid2D::build(4, 4, 1.0, 1.0, Boundary::dirichlet), 1.0, 0.0, nullptr);
  std::ostringstream os;
  m.matrix.write_matrix_market(os);
  EXPECT_EQ(os.str().rfind("%%MatrixMarket matrix coordinate real general", 0), 0u);
  EXPECT_NE(os.str().find("9 9 " + std::to_string(m.matrix.nonzeros())), std::string::npos);
}

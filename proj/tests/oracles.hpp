#pragma once

// Dense reference implementations used to cross-check the library on tiny
// Dirichlet grids. Built from the stencil formulas directly (Kronecker
// products), not from the library operators.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace oracle {

// Tridiagonal (lo, mid, hi) of size n.
inline Eigen::MatrixXd tridiag(int n, double lo, double mid, double hi) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    m(k, k) = mid;
    if (k > 0) m(k, k - 1) = lo;
    if (k + 1 < n) m(k, k + 1) = hi;
  }
  return m;
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Interior operators for homogeneous Dirichlet data, x-major ordering.
struct DirichletOperators {
  Eigen::MatrixXd A;
  Eigen::MatrixXd Lambda;
};

inline DirichletOperators dirichlet_operators(int nx, int ny, double hx, double hy) {
  const Eigen::MatrixXd ax = tridiag(nx - 1, 1.0 / 12, 10.0 / 12, 1.0 / 12);
  const Eigen::MatrixXd ay = tridiag(ny - 1, 1.0 / 12, 10.0 / 12, 1.0 / 12);
  const Eigen::MatrixXd dx = tridiag(nx - 1, 1.0, -2.0, 1.0) / (hx * hx);
  const Eigen::MatrixXd dy = tridiag(ny - 1, 1.0, -2.0, 1.0) / (hy * hy);
  return {kron(ax, ay), kron(ax, dy) + kron(dx, ay)};
}

struct FixedPointResult {
  Eigen::VectorXd u;
  int iterations = 0;
  double last_change = 0.0;
};

// Solves b0 A u - c Lambda u - A f(u) = rhs by
//   u <- (1 - omega) u + omega (b0 A - c Lambda)^{-1} (A f(u) + rhs).
inline FixedPointResult damped_fixed_point(const DirichletOperators& ops, double b0, double c,
                                           const std::function<double(double)>& f,
                                           const Eigen::VectorXd& rhs, Eigen::VectorXd start,
                                           double omega = 0.8, double tol = 1e-14,
                                           int max_iters = 100000) {
  const Eigen::MatrixXd m = b0 * ops.A - c * ops.Lambda;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  FixedPointResult out;
  out.u = std::move(start);
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::VectorXd fu = out.u.unaryExpr(f);
    const Eigen::VectorXd next = (1.0 - omega) * out.u + omega * lu.solve(ops.A * fu + rhs);
    out.last_change = (next - out.u).cwiseAbs().maxCoeff();
    out.u = next;
    out.iterations = it;
    if (out.last_change < tol) break;
  }
  return out;
}

} // namespace oracle

#pragma once

// Linear solves for the per-step 9-point systems: right-preconditioned
// BiCGStab (ILU(0) or Jacobi), and a dense LU used as an oracle on small grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "sparse.hpp"

namespace twogrid {

enum class SolveMethod { krylov, dense_direct };
// spectral is only available through solve_step(); plain solve() treats it
// as jacobi.
enum class Preconditioner { spectral, ilu0, jacobi };

struct LinearSolveConfig {
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  int max_iters = 0;  // 0 means 10 * unknowns
  SolveMethod method = SolveMethod::krylov;
  Preconditioner preconditioner = Preconditioner::spectral;
  // Start from the supplied guess instead of zero.
  bool warm_start = false;
};

struct SolveResult {
  std::vector<double> x;
  int iterations = 0;
  double residual = 0.0;
};

// z = P^{-1} r for an externally supplied preconditioner.
using PreconditionFn = std::function<void(std::span<const double>, std::span<double>)>;

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double residual_norm(const CsrMatrix& m, std::span<const double> x,
                            std::span<const double> b, std::vector<double>& scratch) {
  m.multiply(x, scratch);
  double s = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double r = b[k] - scratch[k];
    s += r * r;
  }
  return std::sqrt(s);
}

inline SolveResult solve_dense(const CsrMatrix& m, std::span<const double> rhs) {
  const auto n = static_cast<Eigen::Index>(m.rows());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  auto rp = m.row_ptr();
  auto ci = m.cols();
  auto v = m.values();
  for (Eigen::Index r = 0; r < n; ++r)
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) a(r, static_cast<Eigen::Index>(ci[k])) = v[k];
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), n);
  Eigen::VectorXd x = a.partialPivLu().solve(b);
  SolveResult out;
  out.x.assign(x.data(), x.data() + n);
  std::vector<double> scratch(m.rows());
  out.residual = residual_norm(m, out.x, rhs, scratch);
  if (!std::isfinite(out.residual)) throw LinearSolveError("dense solve: singular system", 0, out.residual);
  return out;
}

// Incomplete LU with the sparsity pattern of the matrix. Columns of every row
// must be sorted and the diagonal present.
class Ilu0 {
public:
  explicit Ilu0(const CsrMatrix& m)
      : n_(m.rows()),
        rp_(m.row_ptr().begin(), m.row_ptr().end()),
        ci_(m.cols().begin(), m.cols().end()),
        lu_(m.values().begin(), m.values().end()),
        diag_(n_) {
    std::vector<std::ptrdiff_t> pos(n_, -1);
    for (std::size_t i = 0; i < n_; ++i) {
      diag_[i] = static_cast<std::size_t>(-1);
      for (std::size_t k = rp_[i]; k < rp_[i + 1]; ++k) {
        pos[ci_[k]] = static_cast<std::ptrdiff_t>(k);
        if (ci_[k] == i) diag_[i] = k;
      }
      if (diag_[i] == static_cast<std::size_t>(-1))
        throw LinearSolveError("ilu0: missing diagonal", 0, 0.0);
      for (std::size_t k = rp_[i]; k < diag_[i]; ++k) {
        const std::size_t c = ci_[k];
        lu_[k] /= lu_[diag_[c]];
        const double lik = lu_[k];
        for (std::size_t q = diag_[c] + 1; q < rp_[c + 1]; ++q) {
          const std::ptrdiff_t at = pos[ci_[q]];
          if (at >= 0) lu_[static_cast<std::size_t>(at)] -= lik * lu_[q];
        }
      }
      if (lu_[diag_[i]] == 0.0 || !std::isfinite(lu_[diag_[i]]))
        throw LinearSolveError("ilu0: zero pivot", 0, 0.0);
      for (std::size_t k = rp_[i]; k < rp_[i + 1]; ++k) pos[ci_[k]] = -1;
    }
  }

  // out = (LU)^{-1} in
  void apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = in[i];
      for (std::size_t k = rp_[i]; k < diag_[i]; ++k) s -= lu_[k] * out[ci_[k]];
      out[i] = s;
    }
    for (std::size_t i = n_; i-- > 0;) {
      double s = out[i];
      for (std::size_t k = diag_[i] + 1; k < rp_[i + 1]; ++k) s -= lu_[k] * out[ci_[k]];
      out[i] = s / lu_[diag_[i]];
    }
  }

private:
  std::size_t n_;
  std::vector<std::size_t> rp_;
  std::vector<std::size_t> ci_;
  std::vector<double> lu_;
  std::vector<std::size_t> diag_;
};

// Right-preconditioned BiCGStab. Convergence is confirmed
// on the true residual; a stale recursive residual triggers a restart.
inline SolveResult solve_bicgstab(const CsrMatrix& m, std::span<const double> rhs,
                                  const LinearSolveConfig& cfg, std::span<const double> guess,
                                  const PreconditionFn& external = {}) {
  const std::size_t n = m.rows();
  const int max_iters = cfg.max_iters > 0 ? cfg.max_iters : static_cast<int>(10 * n);
  const double bnorm = norm2(rhs);
  const double target = std::max(cfg.rel_tol * bnorm, cfg.abs_tol);

  std::optional<Ilu0> ilu;
  std::vector<double> inv_diag;
  if (!external && cfg.preconditioner == Preconditioner::ilu0) {
    ilu.emplace(m);
  } else if (!external) {
    inv_diag = m.diagonal();
    for (double& d : inv_diag) {
      if (d == 0.0) throw LinearSolveError("bicgstab: zero diagonal", 0, bnorm);
      d = 1.0 / d;
    }
  }
  auto precondition = [&](const std::vector<double>& in, std::vector<double>& out) {
    if (external) external(in, out);
    else if (ilu) ilu->apply(in, out);
    else
      for (std::size_t k = 0; k < n; ++k) out[k] = inv_diag[k] * in[k];
  };

  SolveResult out;
  out.x.assign(n, 0.0);
  if (cfg.warm_start && guess.size() == n) out.x.assign(guess.begin(), guess.end());

  std::vector<double> r(n), r0(n), p(n), v(n), s(n), t(n), y(n), z(n), scratch(n);
  int it = 0;
  double rnorm = residual_norm(m, out.x, rhs, scratch);
  if (!std::isfinite(rnorm)) throw LinearSolveError("bicgstab: non-finite input", 0, rnorm);

  while (rnorm > target && it < max_iters) {
    // (Re)start from the true residual.
    m.multiply(out.x, scratch);
    for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - scratch[k];
    r0 = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    bool restart = false;

    while (it < max_iters) {
      ++it;
      const double rho_new = dot(r0, r);
      if (rho_new == 0.0 || !std::isfinite(rho_new)) {
        restart = true;
        break;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
      precondition(p, y);
      m.multiply(y, v);
      const double r0v = dot(r0, v);
      if (r0v == 0.0 || !std::isfinite(r0v)) {
        restart = true;
        break;
      }
      alpha = rho / r0v;
      for (std::size_t k = 0; k < n; ++k) s[k] = r[k] - alpha * v[k];
      for (std::size_t k = 0; k < n; ++k) out.x[k] += alpha * y[k];
      if (norm2(s) <= target) {
        r = s;
        break;
      }
      precondition(s, z);
      m.multiply(z, t);
      const double tt = dot(t, t);
      if (tt == 0.0 || !std::isfinite(tt)) {
        restart = true;
        break;
      }
      omega = dot(t, s) / tt;
      for (std::size_t k = 0; k < n; ++k) out.x[k] += omega * z[k];
      for (std::size_t k = 0; k < n; ++k) r[k] = s[k] - omega * t[k];
      const double rr = norm2(r);
      if (!std::isfinite(rr)) throw LinearSolveError("bicgstab: breakdown (NaN)", it, rr);
      if (rr <= target) break;
      if (omega == 0.0) {
        restart = true;
        break;
      }
    }
    const double true_r = residual_norm(m, out.x, rhs, scratch);
    if (!std::isfinite(true_r)) throw LinearSolveError("bicgstab: breakdown (NaN)", it, true_r);
    if (restart && true_r >= rnorm && true_r > target)
      throw LinearSolveError("bicgstab: breakdown without progress", it, true_r);
    rnorm = true_r;
  }

  out.iterations = it;
  out.residual = rnorm;
  if (rnorm > target)
    throw LinearSolveError("bicgstab: no convergence in " + std::to_string(it) +
                               " iterations (residual " + std::to_string(rnorm) + ")",
                           it, rnorm);
  return out;
}

} // namespace detail

// Solves m x = rhs. Residual contract: ||m x - rhs||_2 <= max(rel_tol ||rhs||_2, abs_tol)
// for the Krylov path; the dense path is exact up to rounding.
inline SolveResult solve(const CsrMatrix& m, std::span<const double> rhs,
                         const LinearSolveConfig& cfg = {}, std::span<const double> guess = {}) {
  if (rhs.size() != m.rows()) throw std::invalid_argument("solve: dimension mismatch");
  if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0))
    throw std::invalid_argument("solve: tolerances must be positive");
  if (cfg.method == SolveMethod::dense_direct) return detail::solve_dense(m, rhs);
  return detail::solve_bicgstab(m, rhs, cfg, guess);
}

// Krylov solve with a caller-supplied preconditioner (cfg.preconditioner is
// ignored).
inline SolveResult solve_preconditioned(const CsrMatrix& m, std::span<const double> rhs,
                                        const PreconditionFn& precondition,
                                        const LinearSolveConfig& cfg = {},
                                        std::span<const double> guess = {}) {
  if (rhs.size() != m.rows()) throw std::invalid_argument("solve: dimension mismatch");
  if (!precondition) throw std::invalid_argument("solve_preconditioned: empty preconditioner");
  return detail::solve_bicgstab(m, rhs, cfg, guess, precondition);
}

} // namespace twogrid

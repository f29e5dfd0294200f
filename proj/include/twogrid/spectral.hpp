#pragma once

// Fast inverse of the constant-coefficient step operator
//   beta A - gamma Lambda
// on the unknowns of a grid. Both A and Lambda are diagonal in the sine basis
// (Dirichlet) or the Fourier basis (periodic), so the inverse costs two FFTs.
// Used as a preconditioner for step matrices with a variable reaction term,
// taking beta = alpha - mean(d).

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "compact_ops.hpp"
#include "grid.hpp"
#include "linsolve.hpp"

namespace twogrid {

namespace detail {

// FFTW planning is not thread-safe.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Symbols of A_axis and d2_axis at angle theta.
inline double symbol_a(double theta) { return (10.0 + 2.0 * std::cos(theta)) / 12.0; }
inline double symbol_d2(double theta, double h) { return (2.0 * std::cos(theta) - 2.0) / (h * h); }

} // namespace detail

class SpectralSolver {
public:
  SpectralSolver(const Grid2D& g, double beta, double gamma) : grid_(g) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("SpectralSolver: gamma must be >= 0");
    if (g.periodic()) {
      n0_ = g.nx();
      n1_ = g.ny();
      real_.reset(fftw_alloc_real(static_cast<std::size_t>(n0_) * n1_));
      const std::size_t half = static_cast<std::size_t>(n0_) * (n1_ / 2 + 1);
      spec_.reset(fftw_alloc_complex(half));
      std::lock_guard lock(detail::fftw_planner_mutex());
      forward_.reset(fftw_plan_dft_r2c_2d(n0_, n1_, real_.get(), static_cast<fftw_complex*>(spec_.get()),
                                          FFTW_ESTIMATE));
      backward_.reset(fftw_plan_dft_c2r_2d(n0_, n1_, static_cast<fftw_complex*>(spec_.get()),
                                           real_.get(), FFTW_ESTIMATE));
    } else {
      n0_ = g.nx() - 1;
      n1_ = g.ny() - 1;
      real_.reset(fftw_alloc_real(static_cast<std::size_t>(n0_) * n1_));
      std::lock_guard lock(detail::fftw_planner_mutex());
      forward_.reset(
          fftw_plan_r2r_2d(n0_, n1_, real_.get(), real_.get(), FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE));
    }
    build_inverse_symbol(beta, gamma);
  }

  SpectralSolver(const SpectralSolver&) = delete;
  SpectralSolver& operator=(const SpectralSolver&) = delete;

  std::size_t size() const noexcept { return static_cast<std::size_t>(n0_) * n1_; }

  // out = (beta A - gamma Lambda)^{-1} in, over the unknown ordering of UnknownMap.
  void apply(std::span<const double> in, std::span<double> out) const {
    if (in.size() != size() || out.size() != size())
      throw std::invalid_argument("SpectralSolver: size mismatch");
    double* buf = real_.get();
    std::copy(in.begin(), in.end(), buf);
    if (grid_.periodic()) {
      fftw_execute(forward_.get());
      auto* c = static_cast<fftw_complex*>(spec_.get());
      const std::size_t half = inv_.size();
      for (std::size_t k = 0; k < half; ++k) {
        c[k][0] *= inv_[k];
        c[k][1] *= inv_[k];
      }
      fftw_execute(backward_.get());
    } else {
      fftw_execute(forward_.get());
      for (std::size_t k = 0; k < inv_.size(); ++k) buf[k] *= inv_[k];
      fftw_execute(forward_.get());
    }
    std::copy(buf, buf + size(), out.begin());
  }

private:
  void build_inverse_symbol(double beta, double gamma) {
    const bool periodic = grid_.periodic();
    const int m1 = periodic ? n1_ / 2 + 1 : n1_;
    inv_.assign(static_cast<std::size_t>(n0_) * m1, 0.0);
    // Unnormalized FFTW transforms: forward then backward scales by n0*n1
    // (periodic) or (2(n0+1))(2(n1+1)) (sine).
    const double scale = periodic ? static_cast<double>(n0_) * n1_
                                  : 4.0 * (n0_ + 1.0) * (n1_ + 1.0);
    for (int k0 = 0; k0 < n0_; ++k0) {
      const double tx = periodic ? 2.0 * std::numbers::pi * k0 / n0_
                                 : std::numbers::pi * (k0 + 1) / (n0_ + 1);
      const double ax = detail::symbol_a(tx), lx = detail::symbol_d2(tx, grid_.hx());
      for (int k1 = 0; k1 < m1; ++k1) {
        const double ty = periodic ? 2.0 * std::numbers::pi * k1 / n1_
                                   : std::numbers::pi * (k1 + 1) / (n1_ + 1);
        const double ay = detail::symbol_a(ty), ly = detail::symbol_d2(ty, grid_.hy());
        const double lambda = beta * ax * ay - gamma * (ax * ly + ay * lx);
        if (!(std::abs(lambda) > 0.0) || !std::isfinite(lambda))
          throw std::domain_error("SpectralSolver: singular symbol");
        inv_[static_cast<std::size_t>(k0) * m1 + k1] = 1.0 / (lambda * scale);
      }
    }
  }

  Grid2D grid_;
  int n0_ = 0;
  int n1_ = 0;
  std::unique_ptr<double, detail::FftwFree> real_;
  std::unique_ptr<void, detail::FftwFree> spec_;
  detail::FftwPlan forward_;
  detail::FftwPlan backward_;
  std::vector<double> inv_;
};

// beta used when preconditioning alpha A - gamma Lambda - A o diag(d): alpha
// minus the mean of d, kept at least alpha / 2.
inline double spectral_beta(double alpha, const GridFunction* d) {
  if (!d) return alpha;
  double mean = 0.0;
  for (double v : d->values()) mean += v;
  mean /= static_cast<double>(d->size());
  return alpha - std::min(mean, 0.5 * alpha);
}

// Solves a step system, preconditioning with the FFT inverse of its
// constant-coefficient part unless another preconditioner is configured.
inline SolveResult solve_step(const StepMatrix& m, std::span<const double> rhs,
                              const LinearSolveConfig& cfg = {},
                              std::span<const double> guess = {}) {
  if (cfg.method != SolveMethod::krylov || cfg.preconditioner != Preconditioner::spectral)
    return solve(m.matrix, rhs, cfg, guess);
  const GridFunction* d = m.reaction ? &*m.reaction : nullptr;
  const SpectralSolver inv(m.unknowns.grid(), spectral_beta(m.alpha, d), m.gamma);
  return solve_preconditioned(
      m.matrix, rhs, [&](std::span<const double> in, std::span<double> out) { inv.apply(in, out); },
      cfg, guess);
}

} // namespace twogrid

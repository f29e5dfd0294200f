#pragma once

// Variable-step BDF2 compact difference time stepping:
//
//   D_2 A u^n - c Lambda u^n = A f(u^n) + A g^n           (nonlinear, Newton)
//   coarse nonlinear step + one Newton-linearized fine solve (two-grid)
//   D_2 A u^n - c Lambda u^n = A f(2u^{n-1} - u^{n-2}) + A g^n   (IMEX)
//
// with D_2 u^n = b0 (u^n - u^{n-1}) + b1 (u^{n-1} - u^{n-2}); the first step
// is backward Euler (b1 = 0).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "compact_ops.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "interp.hpp"
#include "linsolve.hpp"
#include "problems.hpp"
#include "spectral.hpp"
#include "timegrid.hpp"

namespace twogrid {

enum class Scheme { nonlinear, two_grid, imex };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::nonlinear: return "nonlinear";
    case Scheme::two_grid: return "two_grid";
    case Scheme::imex: return "imex";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "nonlinear") return Scheme::nonlinear;
  if (s == "two_grid" || s == "two-grid") return Scheme::two_grid;
  if (s == "imex") return Scheme::imex;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

struct NewtonConfig {
  double tol = 1e-13;  // max-norm of the increment
  int max_iters = 50;
};

// f clamped to its values at m - delta and M + delta outside [m - delta, M + delta].
struct CutoffSpec {
  double lower;  // m
  double upper;  // M
  double delta;

  void validate() const {
    if (!(lower < upper) || !(delta > 0.0))
      throw std::invalid_argument("CutoffSpec: need m < M and delta > 0");
  }
};

inline double cutoff_apply(const ScalarFn& f, const CutoffSpec& spec, double w) {
  const double lo = spec.lower - spec.delta;
  const double hi = spec.upper + spec.delta;
  if (w < lo) return f(lo);
  if (w > hi) return f(hi);
  return f(w);
}

// Problem with f replaced by its cut-off (f' is zero outside the band).
inline ProblemSpec with_cutoff(ProblemSpec p, const CutoffSpec& spec) {
  spec.validate();
  const ScalarFn f = p.f;
  const ScalarFn fp = p.f_prime;
  p.f = [f, spec](double w) { return cutoff_apply(f, spec, w); };
  p.f_prime = [fp, spec](double w) {
    if (w < spec.lower - spec.delta || w > spec.upper + spec.delta) return 0.0;
    return fp(w);
  };
  return p;
}

// Solution history of one grid level: u^{n-1}, u^{n-2} and the last step.
class SchemeState {
public:
  explicit SchemeState(GridFunction u0) : current_(std::move(u0)) {}

  int next_step() const noexcept { return n_ + 1; }
  double time() const noexcept { return t_; }
  double last_tau() const noexcept { return tau_prev_; }
  const GridFunction& current() const noexcept { return current_; }
  const GridFunction* previous() const noexcept { return previous_ ? &*previous_ : nullptr; }
  const Grid2D& grid() const noexcept { return current_.grid(); }

  Bdf2Coefficients coefficients(double tau) const {
    if (!(tau > 0.0)) throw std::invalid_argument("step size must be positive");
    return bdf2_coefficients(tau, n_ == 0 ? 0.0 : tau_prev_);
  }

  void advance(GridFunction u_new, double tau) {
    current_.require_same_grid(u_new);
    previous_ = std::move(current_);
    current_ = std::move(u_new);
    tau_prev_ = tau;
    t_ += tau;
    ++n_;
  }

  // Same step index and times, values injected onto the coarse grid.
  SchemeState restricted(const TwoGridPair& pair) const {
    SchemeState s(inject(pair, current_));
    if (previous_) s.previous_ = inject(pair, *previous_);
    s.n_ = n_;
    s.t_ = t_;
    s.tau_prev_ = tau_prev_;
    return s;
  }

private:
  GridFunction current_;
  std::optional<GridFunction> previous_;
  int n_ = 0;
  double t_ = 0.0;
  double tau_prev_ = 0.0;
};

struct StepStats {
  int newton_iters = 0;
  int linear_iters = 0;
  int linear_solves = 0;
  // Max-norm of each Newton increment, in order.
  std::vector<double> increments;
};

namespace detail {

inline GridFunction sample_at(const Grid2D& g, const SpaceTimeFn& fn, double t) {
  return GridFunction::sample(g, [&](double x, double y) { return fn(x, y, t); });
}

// psi(., t) on the Dirichlet boundary, zero elsewhere.
inline GridFunction boundary_data(const ProblemSpec& p, const Grid2D& g, double t) {
  GridFunction b(g);
  if (g.periodic() || !p.psi) return b;
  for (int i = 0; i <= g.nx(); ++i)
    for (int j = 0; j <= g.ny(); ++j)
      if (g.is_boundary(i, j)) b(i, j) = p.psi(g.x(i), g.y(j), t);
  return b;
}

inline void set_boundary(GridFunction& u, const GridFunction& b) {
  const Grid2D& g = u.grid();
  if (g.periodic()) return;
  for (int i = 0; i <= g.nx(); ++i)
    for (int j = 0; j <= g.ny(); ++j)
      if (g.is_boundary(i, j)) u(i, j) = b(i, j);
}

// G^n + A g^n: everything on the right-hand side that does not involve u^n.
inline GridFunction explicit_rhs(const ProblemSpec& p, const SchemeState& s,
                                 const Bdf2Coefficients& c, double t) {
  GridFunction h = s.current();
  h *= (c.b0 - c.b1);
  if (c.b1 != 0.0) {
    if (!s.previous()) throw std::logic_error("BDF2 step without u^{n-2}");
    h.axpy(c.b1, *s.previous());
  }
  if (p.g) h += sample_at(s.grid(), p.g, t);
  return apply_A(h);
}

inline void accumulate(StepStats* stats, const SolveResult& r) {
  if (!stats) return;
  stats->linear_iters += r.iterations;
  stats->linear_solves += 1;
}

// Solves M u = rhs_interior (+ boundary elimination) and returns the full
// grid function with boundary values from `boundary`.
inline GridFunction linear_solve_step(const StepMatrix& m, const GridFunction& rhs,
                                      const GridFunction& boundary, const GridFunction& guess,
                                      const LinearSolveConfig& cfg, StepStats* stats) {
  const UnknownMap& map = m.unknowns;
  std::vector<double> b = map.gather(rhs);
  if (!map.grid().periodic()) {
    const GridFunction* d = m.reaction ? &*m.reaction : nullptr;
    const GridFunction br = boundary_rhs(map.grid(), m.alpha, m.gamma, d, boundary);
    const std::vector<double> bv = map.gather(br);
    for (std::size_t k = 0; k < b.size(); ++k) b[k] += bv[k];
  }
  const std::vector<double> g = map.gather(guess);
  SolveResult r = solve_step(m, b, cfg, g);
  accumulate(stats, r);
  GridFunction u = boundary;
  map.scatter(r.x, u);
  return u;
}

} // namespace detail

// One step of the fully nonlinear scheme, solved by Newton's method started
// from u^{n-1}. Stops when the max-norm of the increment drops below tol.
inline GridFunction nonlinear_step(const ProblemSpec& p, const SchemeState& s, double tau,
                                   const NewtonConfig& newton, const LinearSolveConfig& lin,
                                   StepStats* stats = nullptr) {
  const Grid2D& g = s.grid();
  const Bdf2Coefficients c = s.coefficients(tau);
  const double t = s.time() + tau;
  const GridFunction fixed = detail::explicit_rhs(p, s, c, t);
  const GridFunction bnd = detail::boundary_data(p, g, t);
  const UnknownMap map(g);

  GridFunction u = s.current();
  detail::set_boundary(u, bnd);
  LinearSolveConfig inner = lin;
  inner.warm_start = false;

  double last = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= newton.max_iters; ++it) {
    GridFunction residual = apply_step_operator(u, c.b0, p.c, nullptr);
    residual -= apply_A(u.map(p.f));
    residual -= fixed;
    const GridFunction fprime = u.map(p.f_prime);
    const StepMatrix jac = assemble_step_matrix(g, c.b0, p.c, &fprime);
    std::vector<double> rhs = map.gather(residual);
    for (double& v : rhs) v = -v;
    SolveResult r = solve_step(jac, rhs, inner);
    detail::accumulate(stats, r);

    double inc = 0.0;
    for (double v : r.x) inc = std::max(inc, std::abs(v));
    if (!std::isfinite(inc)) throw NonFiniteError("nonlinear_step: non-finite Newton increment");
    GridFunction delta(g);
    map.scatter(r.x, delta);
    u += delta;
    if (stats) {
      stats->newton_iters = it;
      stats->increments.push_back(inc);
    }
    last = inc;
    if (inc < newton.tol) return u;
  }
  throw NewtonError("nonlinear_step: Newton did not converge in " +
                        std::to_string(newton.max_iters) + " iterations",
                    newton.max_iters, last);
}

// Fine-grid linearized step about `anchor` (the prolongated coarse solution):
//   b0 A u - c Lambda u - A(f'(anchor) u) = G + A g + A[f(anchor) - f'(anchor) anchor].
inline GridFunction linearized_step(const ProblemSpec& p, const SchemeState& s, double tau,
                                    const GridFunction& anchor, const LinearSolveConfig& lin,
                                    StepStats* stats = nullptr) {
  const Grid2D& g = s.grid();
  anchor.require_same_grid(s.current());
  const Bdf2Coefficients c = s.coefficients(tau);
  const double t = s.time() + tau;
  const GridFunction d = anchor.map(p.f_prime);
  GridFunction lin_part = anchor.map(p.f);
  for (std::size_t k = 0; k < lin_part.size(); ++k)
    lin_part.values()[k] -= d.values()[k] * anchor.values()[k];
  GridFunction rhs = detail::explicit_rhs(p, s, c, t);
  rhs += apply_A(lin_part);
  const StepMatrix m = assemble_step_matrix(g, c.b0, p.c, &d);
  GridFunction u = detail::linear_solve_step(m, rhs, detail::boundary_data(p, g, t), s.current(),
                                             lin, stats);
  if (!u.all_finite()) throw NonFiniteError("linearized_step: non-finite solution");
  return u;
}

struct TwoGridResult {
  GridFunction coarse;
  GridFunction fine;
};

// Coarse nonlinear step, then one linear solve on the fine grid about the
// prolongated coarse solution.
inline TwoGridResult two_grid_step(const ProblemSpec& p, const ProlongationPlan& plan,
                                   const SchemeState& coarse, const SchemeState& fine, double tau,
                                   const NewtonConfig& newton, const LinearSolveConfig& lin,
                                   StepStats* coarse_stats = nullptr,
                                   StepStats* fine_stats = nullptr) {
  if (!(coarse.grid() == plan.pair().coarse) || !(fine.grid() == plan.pair().fine))
    throw std::invalid_argument("two_grid_step: state grids do not match the plan");
  if (coarse.next_step() != fine.next_step())
    throw std::invalid_argument("two_grid_step: coarse and fine time levels differ");
  GridFunction uc = nonlinear_step(p, coarse, tau, newton, lin, coarse_stats);
  const GridFunction anchor = prolongate(plan, uc);
  GridFunction uf = linearized_step(p, fine, tau, anchor, lin, fine_stats);
  return {std::move(uc), std::move(uf)};
}

// u^{n,*} = 2 u^{n-1} - u^{n-2} (n >= 2), u^0 (n = 1).
inline GridFunction imex_predictor(const SchemeState& s) {
  if (s.next_step() == 1 || !s.previous()) return s.current();
  GridFunction pred = s.current();
  pred *= 2.0;
  pred -= *s.previous();
  return pred;
}

inline GridFunction imex_step(const ProblemSpec& p, const SchemeState& s, double tau,
                              const LinearSolveConfig& lin, StepStats* stats = nullptr) {
  const Grid2D& g = s.grid();
  const Bdf2Coefficients c = s.coefficients(tau);
  const double t = s.time() + tau;
  GridFunction rhs = detail::explicit_rhs(p, s, c, t);
  rhs += apply_A(imex_predictor(s).map(p.f));
  const StepMatrix m = assemble_step_matrix(g, c.b0, p.c, nullptr);
  GridFunction u = detail::linear_solve_step(m, rhs, detail::boundary_data(p, g, t), s.current(),
                                             lin, stats);
  if (!u.all_finite()) throw NonFiniteError("imex_step: non-finite solution");
  return u;
}

// ---------------------------------------------------------------------------
// Run driver

enum class StepIndicator { solution, energy };

struct RunConfig {
  Scheme scheme = Scheme::nonlinear;
  int nx = 0;  // fine grid cells
  int ny = 0;
  int mx = 10;  // coarsening ratios (two-grid only)
  int my = 10;
  NewtonConfig newton;
  LinearSolveConfig linear;
  double overflow_threshold = 1e6;
  // Two-grid only: march the nonlinear scheme on the fine grid up to this
  // time, then inject the history onto the coarse grid.
  double startup_time = 0.0;
  std::vector<double> snapshot_times;
  bool track_error = true;
};

struct StepRecord {
  int n;
  double t;
  double tau;
  int newton_iters;
  int linear_iters;
  double error_l2;  // NaN without exact solution
  double energy;    // NaN unless Allen-Cahn
  double max_u;
};

struct Snapshot {
  double t;
  GridFunction u;
};

struct RunReport {
  std::string problem;
  Scheme scheme = Scheme::nonlinear;
  std::vector<StepRecord> records;
  bool diverged = false;
  int failed_step = 0;  // step index of the failure, 0 if none
  std::string failure;
  double final_error = std::numeric_limits<double>::quiet_NaN();
  double initial_energy = std::numeric_limits<double>::quiet_NaN();
  std::optional<GridFunction> solution;
  std::vector<Snapshot> snapshots;
  int fine_linear_solves = 0;
  int fine_nonlinear_solves = 0;
  double cpu_seconds = 0.0;

  int steps() const { return static_cast<int>(records.size()); }
  double max_ratio() const {
    double m = 0.0;
    for (std::size_t k = 1; k < records.size(); ++k)
      m = std::max(m, records[k].tau / records[k - 1].tau);
    return m;
  }
};

namespace detail {

inline Grid2D problem_grid(const ProblemSpec& p, int nx, int ny) {
  return Grid2D::build(nx, ny, p.lx, p.ly, p.bc, p.x0, p.y0);
}

class Runner {
public:
  Runner(const ProblemSpec& p, const RunConfig& cfg) : p_(p), cfg_(cfg) {
    if (cfg.nx <= 0 || cfg.ny <= 0) throw std::invalid_argument("RunConfig: fine grid size missing");
    const Grid2D fine = problem_grid(p, cfg.nx, cfg.ny);
    GridFunction u0 = GridFunction::sample(fine, p.u0);
    if (!fine.periodic()) set_boundary(u0, boundary_data(p, fine, 0.0));
    fine_.emplace(std::move(u0));
    if (cfg.scheme == Scheme::two_grid) {
      if (cfg.nx % cfg.mx != 0 || cfg.ny % cfg.my != 0)
        throw std::invalid_argument("RunConfig: fine size not divisible by coarsening ratio");
      const TwoGridPair pair = build_two_grid(cfg.nx / cfg.mx, cfg.ny / cfg.my, cfg.mx, cfg.my,
                                              p.lx, p.ly, p.bc, p.x0, p.y0);
      plan_.emplace(build_plan(pair));
      if (cfg.startup_time <= 0.0) {
        GridFunction c0 = GridFunction::sample(pair.coarse, p.u0);
        if (!pair.coarse.periodic()) set_boundary(c0, boundary_data(p, pair.coarse, 0.0));
        coarse_.emplace(std::move(c0));
      }
    }
    report_.problem = p.name;
    report_.scheme = cfg.scheme;
    if (tracks_energy()) report_.initial_energy = discrete_energy(fine_->current(), *p_.epsilon);
    take_snapshots();
  }

  double time() const { return fine_->time(); }
  const SchemeState& fine() const { return *fine_; }
  bool tracks_energy() const { return p_.epsilon && p_.bc == Boundary::periodic; }
  double last_energy() const {
    return report_.records.empty() ? report_.initial_energy : report_.records.back().energy;
  }

  // Returns false once the run has failed.
  bool step(double tau) {
    const int n = fine_->next_step();
    StepStats fs, cs;
    try {
      GridFunction u = advance(tau, fs, cs);
      const double umax = norm_max(u);
      if (!std::isfinite(umax) || umax > cfg_.overflow_threshold)
        throw NonFiniteError("solution exceeded overflow threshold");
      fine_->advance(std::move(u), tau);
    } catch (const std::exception& e) {
      report_.diverged = true;
      report_.failed_step = n;
      report_.failure = e.what();
      return false;
    }
    record(n, tau, fs, cs);
    take_snapshots();
    return true;
  }

  RunReport finish(double seconds) {
    report_.cpu_seconds = seconds;
    if (!report_.diverged) {
      report_.solution = fine_->current();
      if (p_.has_exact()) report_.final_error = error_now();
    } else {
      report_.final_error = std::numeric_limits<double>::infinity();
    }
    return std::move(report_);
  }

private:
  GridFunction advance(double tau, StepStats& fs, StepStats& cs) {
    switch (cfg_.scheme) {
      case Scheme::nonlinear:
        ++report_.fine_nonlinear_solves;
        return nonlinear_step(p_, *fine_, tau, cfg_.newton, cfg_.linear, &fs);
      case Scheme::imex:
        ++report_.fine_linear_solves;
        return imex_step(p_, *fine_, tau, cfg_.linear, &fs);
      case Scheme::two_grid: {
        if (!coarse_) {
          if (fine_->time() + 0.5 * tau < cfg_.startup_time) {
            ++report_.fine_nonlinear_solves;
            return nonlinear_step(p_, *fine_, tau, cfg_.newton, cfg_.linear, &fs);
          }
          coarse_.emplace(fine_->restricted(plan_->pair()));
        }
        ++report_.fine_linear_solves;
        TwoGridResult r =
            two_grid_step(p_, *plan_, *coarse_, *fine_, tau, cfg_.newton, cfg_.linear, &cs, &fs);
        coarse_->advance(std::move(r.coarse), tau);
        return std::move(r.fine);
      }
    }
    throw std::logic_error("unknown scheme");
  }

  double error_now() const {
    const GridFunction& u = fine_->current();
    GridFunction e = sample_at(u.grid(), p_.exact, fine_->time());
    e -= u;
    return norm_l2(e);
  }

  void record(int n, double tau, const StepStats& fs, const StepStats& cs) {
    StepRecord r{};
    r.n = n;
    r.t = fine_->time();
    r.tau = tau;
    r.newton_iters = fs.newton_iters + cs.newton_iters;
    r.linear_iters = fs.linear_iters + cs.linear_iters;
    r.error_l2 = (cfg_.track_error && p_.has_exact()) ? error_now()
                                                      : std::numeric_limits<double>::quiet_NaN();
    r.energy = tracks_energy() ? discrete_energy(fine_->current(), *p_.epsilon)
                               : std::numeric_limits<double>::quiet_NaN();
    r.max_u = norm_max(fine_->current());
    report_.records.push_back(r);
  }

  void take_snapshots() {
    const double t = fine_->time();
    const double slack = 1e-9 * std::max(1.0, p_.T);
    while (next_snapshot_ < cfg_.snapshot_times.size() &&
           cfg_.snapshot_times[next_snapshot_] <= t + slack) {
      report_.snapshots.push_back(Snapshot{t, fine_->current()});
      ++next_snapshot_;
    }
  }

  const ProblemSpec& p_;
  const RunConfig& cfg_;
  std::optional<SchemeState> fine_;
  std::optional<SchemeState> coarse_;
  std::optional<ProlongationPlan> plan_;
  RunReport report_;
  std::size_t next_snapshot_ = 0;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

// Steps through `mesh`. Numerical failures (Newton/Krylov failure, NaN,
// overflow) end the run with diverged = true and the failing step index.
inline RunReport run(const ProblemSpec& p, const RunConfig& cfg, const TimeMesh& mesh) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::Runner runner(p, cfg);
  for (int k = 1; k <= mesh.steps(); ++k)
    if (!runner.step(mesh.tau(k))) break;
  return runner.finish(detail::seconds_since(t0));
}

// Steps adaptively to p.T. The indicator is ||(u^n - u^{n-1})/tau_n||_h^2 or
// ((E^n - E^{n-1})/tau_n)^2; the first step is `first_tau` (tau_min if <= 0)
// and the last step is shortened to land on T.
inline RunReport run_adaptive(const ProblemSpec& p, const RunConfig& cfg,
                              const AdaptiveConfig& acfg, StepIndicator indicator,
                              double first_tau = 0.0) {
  acfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  detail::Runner runner(p, cfg);
  if (indicator == StepIndicator::energy && !runner.tracks_energy())
    throw std::invalid_argument("run_adaptive: energy indicator needs an Allen-Cahn problem");
  const double T = p.T;
  double tau = first_tau > 0.0 ? first_tau : acfg.tau_min;
  while (runner.time() < T * (1.0 - 1e-12)) {
    if (runner.time() + tau > T * (1.0 - 1e-12)) tau = T - runner.time();
    const GridFunction before = runner.fine().current();
    const double e_before = runner.last_energy();
    if (!runner.step(tau)) break;
    double ind = 0.0;
    if (indicator == StepIndicator::solution) {
      GridFunction d = runner.fine().current();
      d -= before;
      d *= 1.0 / tau;
      ind = inner_l2(d, d);
    } else {
      const double de = (runner.last_energy() - e_before) / tau;
      ind = de * de;
    }
    tau = adaptive_next(tau, ind, acfg);
  }
  return runner.finish(detail::seconds_since(t0));
}

inline void write_report_csv(std::ostream& os, const RunReport& r) {
  os << "n,t_n,tau_n,newton_iters,linear_iters,error_l2,energy,max_u\n";
  char buf[256];
  auto num = [](double v, char* out, std::size_t cap) {
    if (std::isnan(v)) out[0] = '\0';
    else std::snprintf(out, cap, "%.10e", v);
  };
  for (const StepRecord& s : r.records) {
    char e[64], en[64];
    num(s.error_l2, e, sizeof e);
    num(s.energy, en, sizeof en);
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%d,%d,%s,%s,%.10e\n", s.n, s.t, s.tau,
                  s.newton_iters, s.linear_iters, e, en, s.max_u);
    os << buf;
  }
}

} // namespace twogrid

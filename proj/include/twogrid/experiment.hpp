#pragma once

// JSON-configured experiments: convergence tables in space or time, scheme
// comparisons, Allen-Cahn simulations and mesh generation. Every command
// writes CSV files (plus a gnuplot script) into an output directory.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "io.hpp"
#include "problems.hpp"
#include "schemes.hpp"
#include "timegrid.hpp"

namespace twogrid {

enum class MeshKind { uniform, random, adaptive };

inline const char* to_string(MeshKind k) {
  switch (k) {
    case MeshKind::uniform: return "uniform";
    case MeshKind::random: return "random";
    case MeshKind::adaptive: return "adaptive";
  }
  return "?";
}

struct TimeSpec {
  MeshKind kind = MeshKind::uniform;
  std::uint64_t seed = 1;
  AdaptiveConfig adaptive;
  StepIndicator indicator = StepIndicator::solution;
  // Adaptive only: also run each scheme on a uniform mesh with the adaptive
  // step count.
  bool uniform_companion = false;
};

struct RowSpec {
  int N = 0;   // time steps (uniform/random)
  int nh = 0;  // fine cells per direction
  int m = 0;   // coarsening ratio override, 0 = experiment default
  std::optional<double> tau_min;  // adaptive rows
};

// One Allen-Cahn run: scheme plus either a uniform tau or adaptive settings.
struct AllenCahnRun {
  std::string label;
  Scheme scheme = Scheme::nonlinear;
  std::optional<double> tau;
  std::optional<AdaptiveConfig> adaptive;
  StepIndicator indicator = StepIndicator::energy;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string command;
  std::string problem;
  std::vector<Scheme> schemes{Scheme::nonlinear};
  int coarsening = 10;
  TimeSpec time;
  std::vector<RowSpec> rows;
  NewtonConfig newton;
  LinearSolveConfig linear;
  double overflow_threshold = 1e6;
  std::optional<double> final_time;
  // Allen-Cahn
  AllenCahnOptions ac;
  int n = 0;
  std::vector<AllenCahnRun> runs;
  std::vector<double> snapshots;
  double startup_time = 0.0;
  // mesh-gen
  int mesh_steps = 0;
  bool emit_gnuplot = true;
};

namespace detail {

inline StepIndicator indicator_from_string(const std::string& s) {
  if (s == "solution") return StepIndicator::solution;
  if (s == "energy") return StepIndicator::energy;
  throw std::invalid_argument("unknown step indicator '" + s + "'");
}

inline MeshKind mesh_kind_from_string(const std::string& s) {
  if (s == "uniform") return MeshKind::uniform;
  if (s == "random") return MeshKind::random;
  if (s == "adaptive") return MeshKind::adaptive;
  throw std::invalid_argument("unknown mesh kind '" + s + "'");
}

inline AdaptiveConfig parse_adaptive(const nlohmann::json& j, AdaptiveConfig a = {}) {
  a.tau_min = j.value("tau_min", a.tau_min);
  a.tau_max = j.value("tau_max", a.tau_max);
  a.eta = j.value("eta", a.eta);
  a.r_max = j.value("r_max", a.r_max);
  return a;
}

} // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  c.command = j.value("command", std::string{});
  c.problem = j.value("problem", std::string{});
  if (j.contains("schemes")) {
    c.schemes.clear();
    for (const auto& s : j.at("schemes")) c.schemes.push_back(scheme_from_string(s.get<std::string>()));
  }
  c.coarsening = j.value("coarsening", c.coarsening);
  if (j.contains("time")) {
    const auto& t = j.at("time");
    c.time.kind = detail::mesh_kind_from_string(t.value("kind", std::string("uniform")));
    c.time.seed = t.value("seed", c.time.seed);
    c.time.adaptive = detail::parse_adaptive(t, c.time.adaptive);
    c.time.indicator = detail::indicator_from_string(t.value("indicator", std::string("solution")));
    c.time.uniform_companion = t.value("uniform_companion", false);
  }
  if (j.contains("rows"))
    for (const auto& r : j.at("rows")) {
      RowSpec row;
      row.N = r.value("N", 0);
      row.nh = r.value("nh", 0);
      row.m = r.value("m", 0);
      if (r.contains("tau_min")) row.tau_min = r.at("tau_min").get<double>();
      c.rows.push_back(row);
    }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    c.newton.tol = t.value("newton_tol", c.newton.tol);
    c.newton.max_iters = t.value("newton_max_iters", c.newton.max_iters);
    c.linear.rel_tol = t.value("linear_rel_tol", c.linear.rel_tol);
    c.linear.abs_tol = t.value("linear_abs_tol", c.linear.abs_tol);
    c.overflow_threshold = t.value("overflow_threshold", c.overflow_threshold);
  }
  if (j.contains("T")) c.final_time = j.at("T").get<double>();
  if (j.contains("epsilon")) c.ac.epsilon = j.at("epsilon").get<double>();
  c.ac.seed = j.value("seed", c.ac.seed);
  c.n = j.value("n", 0);
  c.startup_time = j.value("startup_time", 0.0);
  if (j.contains("snapshots")) c.snapshots = j.at("snapshots").get<std::vector<double>>();
  if (j.contains("runs"))
    for (const auto& r : j.at("runs")) {
      AllenCahnRun run;
      run.scheme = scheme_from_string(r.at("scheme").get<std::string>());
      run.label = r.value("label", std::string(to_string(run.scheme)));
      if (r.contains("tau")) run.tau = r.at("tau").get<double>();
      if (r.contains("adaptive")) run.adaptive = detail::parse_adaptive(r.at("adaptive"));
      run.indicator = detail::indicator_from_string(r.value("indicator", std::string("energy")));
      if (!run.tau == !run.adaptive)
        throw std::invalid_argument("run '" + run.label + "': give exactly one of tau, adaptive");
      c.runs.push_back(run);
    }
  c.mesh_steps = j.value("N", 0);
  c.emit_gnuplot = j.value("gnuplot", true);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

inline ProblemSpec make_problem(const ExperimentConfig& c) {
  AllenCahnOptions ac = c.ac;
  if (c.final_time) ac.T = *c.final_time;
  ProblemSpec p = problem_by_name(c.problem, ac);
  if (c.final_time) p.T = *c.final_time;
  return p;
}

// ---------------------------------------------------------------------------
// Convergence tables

enum class OrderAxis { space, time };

struct ConvergenceRow {
  Scheme scheme = Scheme::nonlinear;
  MeshKind mesh = MeshKind::uniform;
  int N = 0;  // steps actually taken (planned steps if the run diverged)
  int nh = 0;
  int nH = 0;  // 0 unless two-grid
  std::optional<double> tau_min;
  double max_ratio = 0.0;
  double error = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> order;
  bool diverged = false;
  int failed_step = 0;
  std::string failure;
  double cpu_seconds = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  bool any_diverged() const {
    return std::any_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.diverged; });
  }
};

// order = log(e_prev / e) / log(rho), rho = actual refinement factor of the
// chosen axis (fine cells for space, step count for time).
inline double convergence_order(double e_prev, double e, double rho) {
  return std::log(e_prev / e) / std::log(rho);
}

namespace detail {

struct RowJob {
  Scheme scheme;
  MeshKind mesh;
  RowSpec row;
  // For uniform companions of adaptive rows: index of the adaptive job whose
  // step count to use.
  int companion_of = -1;
};

inline RunConfig run_config_for(const ExperimentConfig& c, Scheme s, const RowSpec& row) {
  RunConfig rc;
  rc.scheme = s;
  rc.nx = rc.ny = row.nh;
  const int m = row.m > 0 ? row.m : c.coarsening;
  rc.mx = rc.my = m;
  rc.newton = c.newton;
  rc.linear = c.linear;
  rc.overflow_threshold = c.overflow_threshold;
  rc.startup_time = c.startup_time;
  rc.track_error = false;
  return rc;
}

inline ConvergenceRow run_row(const ExperimentConfig& c, const ProblemSpec& p, Scheme s,
                              MeshKind kind, const RowSpec& row) {
  ConvergenceRow out;
  out.scheme = s;
  out.mesh = kind;
  out.nh = row.nh;
  out.tau_min = row.tau_min;
  const RunConfig rc = run_config_for(c, s, row);
  if (s == Scheme::two_grid) out.nH = row.nh / rc.mx;
  RunReport rep;
  if (kind == MeshKind::adaptive) {
    AdaptiveConfig a = c.time.adaptive;
    if (row.tau_min) a.tau_min = *row.tau_min;
    rep = run_adaptive(p, rc, a, c.time.indicator);
    out.N = rep.steps();
    out.max_ratio = rep.max_ratio();
  } else {
    const TimeMesh mesh = kind == MeshKind::random ? random_mesh(p.T, row.N, c.time.seed)
                                                   : TimeMesh::uniform(p.T, row.N);
    rep = run(p, rc, mesh);
    out.N = row.N;
    out.max_ratio = mesh.max_ratio();
  }
  out.error = rep.final_error;
  out.diverged = rep.diverged;
  out.failed_step = rep.failed_step;
  out.failure = rep.failure;
  out.cpu_seconds = rep.cpu_seconds;
  return out;
}

// Runs jobs on up to `threads` workers. Jobs with companion_of >= 0 start
// after their parent finished.
inline std::vector<ConvergenceRow> run_jobs(const ExperimentConfig& c, const ProblemSpec& p,
                                            const std::vector<RowJob>& jobs, int threads) {
  std::vector<ConvergenceRow> out(jobs.size());
  auto exec = [&](std::size_t k) {
    RowSpec row = jobs[k].row;
    if (jobs[k].companion_of >= 0) row.N = out[static_cast<std::size_t>(jobs[k].companion_of)].N;
    out[k] = run_row(c, p, jobs[k].scheme, jobs[k].mesh, row);
    if (jobs[k].companion_of >= 0) out[k].tau_min = jobs[k].row.tau_min;
  };
  // Two phases so companions see their parent's step count.
  for (int phase = 0; phase < 2; ++phase) {
    std::vector<std::size_t> todo;
    for (std::size_t k = 0; k < jobs.size(); ++k)
      if ((jobs[k].companion_of >= 0) == (phase == 1)) todo.push_back(k);
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(todo.size())));
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    auto worker = [&] {
      for (std::size_t i = next++; i < todo.size(); i = next++) {
        try {
          exec(todo[i]);
        } catch (...) {
          std::lock_guard lock(err_mutex);
          if (!err) err = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
  }
  return out;
}

inline void fill_orders(std::vector<ConvergenceRow>& rows, OrderAxis axis) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < rows.size(); ++k)
    groups[{static_cast<int>(rows[k].scheme), static_cast<int>(rows[k].mesh)}].push_back(k);
  for (auto& [key, idx] : groups)
    for (std::size_t q = 1; q < idx.size(); ++q) {
      const ConvergenceRow& a = rows[idx[q - 1]];
      ConvergenceRow& b = rows[idx[q]];
      if (a.diverged || b.diverged || !(a.error > 0.0) || !(b.error > 0.0)) continue;
      const double rho = axis == OrderAxis::space ? static_cast<double>(b.nh) / a.nh
                                                  : static_cast<double>(b.N) / a.N;
      if (rho == 1.0) continue;
      b.order = convergence_order(a.error, b.error, rho);
    }
}

} // namespace detail

inline ConvergenceResult cmd_converge(const ExperimentConfig& c, OrderAxis axis, int threads = 1) {
  const ProblemSpec p = make_problem(c);
  if (!p.has_exact()) throw std::invalid_argument("converge: problem '" + c.problem + "' has no exact solution");
  if (c.rows.empty()) throw std::invalid_argument("converge: no rows configured");
  std::vector<detail::RowJob> jobs;
  for (Scheme s : c.schemes)
    for (const RowSpec& r : c.rows) {
      jobs.push_back({s, c.time.kind, r, -1});
      if (c.time.kind == MeshKind::adaptive && c.time.uniform_companion)
        jobs.push_back({s, MeshKind::uniform, r, static_cast<int>(jobs.size()) - 1});
    }
  ConvergenceResult res;
  res.rows = detail::run_jobs(c, p, jobs, threads);
  detail::fill_orders(res.rows, axis);
  return res;
}

// scheme,mesh,N,N_h,N_H,tau_min,max_ratio,error,order,diverged,cpu_seconds
inline void write_convergence_csv(std::ostream& os, const ConvergenceResult& r) {
  os << "scheme,mesh,N,N_h,N_H,tau_min,max_ratio,error,order,diverged,cpu_seconds\n";
  for (const ConvergenceRow& row : r.rows) {
    os << to_string(row.scheme) << ',' << to_string(row.mesh) << ',' << row.N << ',' << row.nh << ','
       << row.nH << ',' << (row.tau_min ? format_g(*row.tau_min) : "") << ','
       << format_fixed(row.max_ratio, 4) << ',' << format_sci(row.error, 4) << ','
       << (row.order ? format_fixed(*row.order, 2) : "") << ',' << (row.diverged ? 1 : 0) << ','
       << format_fixed(row.cpu_seconds, 2) << '\n';
  }
}

// Wide layout for scheme comparisons: one line per resolution.
inline void write_compare_csv(std::ostream& os, const ConvergenceResult& r,
                              const std::vector<Scheme>& schemes) {
  os << "N,N_h";
  for (Scheme s : schemes) os << ",error_" << to_string(s) << ",order_" << to_string(s);
  for (Scheme s : schemes) os << ",cpu_" << to_string(s);
  os << '\n';
  std::vector<std::pair<int, int>> keys;
  for (const ConvergenceRow& row : r.rows)
    if (std::find(keys.begin(), keys.end(), std::pair{row.N, row.nh}) == keys.end())
      keys.emplace_back(row.N, row.nh);
  for (auto [N, nh] : keys) {
    os << N << ',' << nh;
    auto find = [&](Scheme s) -> const ConvergenceRow* {
      for (const ConvergenceRow& row : r.rows)
        if (row.scheme == s && row.N == N && row.nh == nh) return &row;
      return nullptr;
    };
    for (Scheme s : schemes) {
      const ConvergenceRow* row = find(s);
      os << ',' << (row ? format_sci(row->error, 4) : "") << ','
         << (row && row->order ? format_fixed(*row->order, 2) : "");
    }
    for (Scheme s : schemes) {
      const ConvergenceRow* row = find(s);
      os << ',' << (row ? format_fixed(row->cpu_seconds, 2) : "");
    }
    os << '\n';
  }
}

inline void write_convergence_gnuplot(std::ostream& os, const std::string& csv, OrderAxis axis,
                                      const std::vector<Scheme>& schemes) {
  const int xcol = axis == OrderAxis::space ? 4 : 3;
  os << "set datafile separator ','\n"
     << "set logscale xy\n"
     << "set xlabel '" << (axis == OrderAxis::space ? "N_h" : "N") << "'\n"
     << "set ylabel 'L2 error at final time'\n"
     << "set key top right\n"
     << "set terminal pngcairo size 800,600\n"
     << "set output '" << std::filesystem::path(csv).stem().string() << ".png'\n"
     << "plot ";
  for (std::size_t k = 0; k < schemes.size(); ++k) {
    if (k) os << ", \\\n     ";
    os << "'" << csv << "' using (strcol(1) eq '" << to_string(schemes[k]) << "' ? $" << xcol
       << " : 1/0):8 with linespoints title '" << to_string(schemes[k]) << "'";
  }
  os << '\n';
}

// ---------------------------------------------------------------------------
// Allen-Cahn

struct AllenCahnResult {
  std::vector<std::pair<AllenCahnRun, RunReport>> runs;
  bool any_diverged() const {
    return std::any_of(runs.begin(), runs.end(), [](const auto& r) { return r.second.diverged; });
  }
};

inline AllenCahnResult cmd_allen_cahn(const ExperimentConfig& c, int threads = 1) {
  const ProblemSpec p = make_problem(c);
  if (!p.epsilon || p.bc != Boundary::periodic)
    throw std::invalid_argument("allen-cahn: problem '" + c.problem + "' is not an Allen-Cahn setup");
  if (c.n <= 0) throw std::invalid_argument("allen-cahn: grid size 'n' missing");
  if (c.runs.empty()) throw std::invalid_argument("allen-cahn: no runs configured");
  AllenCahnResult res;
  res.runs.resize(c.runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t k = next++; k < c.runs.size(); k = next++) {
      try {
        const AllenCahnRun& run_spec = c.runs[k];
        RowSpec row;
        row.nh = c.n;
        RunConfig rc = detail::run_config_for(c, run_spec.scheme, row);
        rc.snapshot_times = c.snapshots;
        RunReport rep;
        if (run_spec.tau) {
          const int steps = static_cast<int>(std::llround(p.T / *run_spec.tau));
          rep = run(p, rc, TimeMesh::uniform(p.T, std::max(1, steps)));
        } else {
          rep = run_adaptive(p, rc, *run_spec.adaptive, run_spec.indicator);
        }
        res.runs[k] = {run_spec, std::move(rep)};
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(c.runs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return res;
}

// label,scheme,steps,initial_energy,final_energy,max_tau,diverged,failed_step,cpu_seconds
inline void write_allen_cahn_summary(std::ostream& os, const AllenCahnResult& r) {
  os << "label,scheme,steps,initial_energy,final_energy,max_tau,diverged,failed_step,cpu_seconds\n";
  for (const auto& [spec, rep] : r.runs) {
    double max_tau = 0.0;
    for (const StepRecord& s : rep.records) max_tau = std::max(max_tau, s.tau);
    const double final_energy = rep.records.empty() ? rep.initial_energy : rep.records.back().energy;
    os << spec.label << ',' << to_string(spec.scheme) << ',' << rep.steps() << ','
       << format_sci(rep.initial_energy, 10) << ',' << format_sci(final_energy, 10) << ','
       << format_g(max_tau) << ',' << (rep.diverged ? 1 : 0) << ',' << rep.failed_step << ','
       << format_fixed(rep.cpu_seconds, 2) << '\n';
  }
}

inline void write_allen_cahn_gnuplot(std::ostream& os, const std::string& name,
                                     const AllenCahnResult& r) {
  os << "set datafile separator ','\n"
     << "set terminal pngcairo size 1200,500\n"
     << "set output '" << name << "_energy.png'\n"
     << "set multiplot layout 1,2\n"
     << "set xlabel 't'\nset ylabel 'energy'\n"
     << "plot ";
  for (std::size_t k = 0; k < r.runs.size(); ++k) {
    if (k) os << ", \\\n     ";
    os << "'" << name << "_" << r.runs[k].first.label << "_report.csv' skip 1 using 2:7 with lines title '"
       << r.runs[k].first.label << "'";
  }
  os << "\nset ylabel 'tau'\nset logscale y\nplot ";
  for (std::size_t k = 0; k < r.runs.size(); ++k) {
    if (k) os << ", \\\n     ";
    os << "'" << name << "_" << r.runs[k].first.label << "_report.csv' skip 1 using 2:3 with steps title '"
       << r.runs[k].first.label << "'";
  }
  os << "\nunset multiplot\n";
}

// Writes per-run reports, snapshots, the summary and the gnuplot script.
inline void write_allen_cahn_outputs(const std::filesystem::path& dir, const std::string& name,
                                     const AllenCahnResult& r, bool gnuplot) {
  for (const auto& [spec, rep] : r.runs) {
    auto os = open_output(dir / (name + "_" + spec.label + "_report.csv"));
    write_report_csv(os, rep);
    for (const Snapshot& s : rep.snapshots) {
      auto ss = open_output(dir / (name + "_" + spec.label + "_snap_t" + format_g(s.t, 6) + ".csv"));
      write_snapshot_csv(ss, s.u);
    }
  }
  auto os = open_output(dir / (name + "_summary.csv"));
  write_allen_cahn_summary(os, r);
  if (gnuplot) {
    auto gp = open_output(dir / (name + ".gp"));
    write_allen_cahn_gnuplot(gp, name, r);
  }
}

// ---------------------------------------------------------------------------
// Self-test: fast consistency checks run by the `selftest` verb.

struct SelftestLine {
  std::string name;
  bool pass;
  std::string detail;
};

inline std::vector<SelftestLine> selftest() {
  std::vector<SelftestLine> out;
  auto add = [&](std::string name, bool ok, std::string detail) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };
  for (const char* name : {"case1", "case2", "case3", "sec62", "sec63"}) {
    const double res = source_residual(problem_by_name(name), 100, 7);
    add(std::string("source term ") + name, res < 1e-6, "max residual " + format_sci(res, 2));
  }
  {
    const TimeMesh mesh = random_mesh(1.0, 50, 3);
    const DocKernels theta(bdf2_kernels(mesh));
    double worst = 0.0;
    for (int n = 1; n <= mesh.steps(); ++n) {
      double s = 0.0;
      for (int m = 1; m <= n; ++m) s += theta.theta(n, m);
      worst = std::max(worst, std::abs(s - mesh.tau(n)));
    }
    add("DOC kernel sums", worst < 1e-12, "max |sum theta - tau| " + format_sci(worst, 2));
  }
  {
    const ProblemSpec p = case_I();
    RunConfig rc;
    rc.nx = rc.ny = 40;
    rc.mx = rc.my = 4;
    rc.scheme = Scheme::nonlinear;
    const RunReport a = run(p, rc, TimeMesh::uniform(p.T, 20));
    rc.scheme = Scheme::two_grid;
    const RunReport b = run(p, rc, TimeMesh::uniform(p.T, 20));
    const bool ok = !a.diverged && !b.diverged && std::abs(a.final_error - b.final_error) < 0.05 * a.final_error;
    add("nonlinear vs two-grid (case1, 40x40, N=20)", ok,
        format_sci(a.final_error, 3) + " vs " + format_sci(b.final_error, 3));
  }
  return out;
}

} // namespace twogrid

// twogrid: experiment runner.
//
//   twogrid converge-space --config experiments/table1_case1_space.json --out results
//   twogrid allen-cahn --config experiments/ac_example1_desk.json --threads 2
//
// Exit codes: 0 success, 2 some run diverged, 1 error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "twogrid/experiment.hpp"

namespace {

namespace fs = std::filesystem;
using namespace twogrid;

struct Options {
  std::string config;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<int> steps;
  std::optional<double> final_time;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig c = load_config(o.config);
  if (o.seed) {
    c.time.seed = *o.seed;
    c.ac.seed = *o.seed;
  }
  return c;
}

void report_divergence(const ConvergenceResult& r) {
  for (const ConvergenceRow& row : r.rows)
    if (row.diverged)
      std::cerr << "diverged: " << to_string(row.scheme) << " N=" << row.N << " N_h=" << row.nh
                << " at step " << row.failed_step << " (" << row.failure << ")\n";
}

int converge(const Options& o, OrderAxis axis, bool wide) {
  const ExperimentConfig c = load(o);
  const ConvergenceResult r = cmd_converge(c, axis, o.threads);
  const fs::path dir(o.out);
  const std::string csv = c.name + ".csv";
  {
    auto os = open_output(dir / csv);
    if (wide) write_compare_csv(os, r, c.schemes);
    else write_convergence_csv(os, r);
  }
  if (c.emit_gnuplot && !wide) {
    auto gp = open_output(dir / (c.name + ".gp"));
    write_convergence_gnuplot(gp, csv, axis, c.schemes);
  }
  if (wide) write_compare_csv(std::cout, r, c.schemes);
  else write_convergence_csv(std::cout, r);
  report_divergence(r);
  return r.any_diverged() ? 2 : 0;
}

int allen_cahn(const Options& o) {
  const ExperimentConfig c = load(o);
  const AllenCahnResult r = cmd_allen_cahn(c, o.threads);
  write_allen_cahn_outputs(o.out, c.name, r, c.emit_gnuplot);
  write_allen_cahn_summary(std::cout, r);
  for (const auto& [spec, rep] : r.runs)
    if (rep.diverged)
      std::cerr << "diverged: " << spec.label << " at step " << rep.failed_step << " (" << rep.failure
                << ")\n";
  return r.any_diverged() ? 2 : 0;
}

int mesh_gen(const Options& o) {
  ExperimentConfig c;
  if (!o.config.empty()) c = load(o);
  else if (o.seed) c.time.seed = *o.seed;
  if (c.time.kind == MeshKind::uniform && o.config.empty()) c.time.kind = MeshKind::random;
  const double T = o.final_time.value_or(c.final_time.value_or(1.0));
  const int N = o.steps.value_or(c.mesh_steps);
  if (N < 1) throw std::invalid_argument("mesh-gen: number of steps missing (config N or --steps)");
  TimeMesh mesh = c.time.kind == MeshKind::random ? random_mesh(T, N, c.time.seed)
                                                  : TimeMesh::uniform(T, N);
  const std::string name = o.config.empty() ? "mesh" : c.name;
  auto os = open_output(fs::path(o.out) / (name + ".csv"));
  write_mesh_csv(os, mesh);
  std::printf("steps %d  T %.17g  max ratio %.6f\n", mesh.steps(), mesh.final_time(), mesh.max_ratio());
  return 0;
}

int run_selftest() {
  bool ok = true;
  for (const SelftestLine& l : selftest()) {
    std::printf("%s %s: %s\n", l.pass ? "PASS" : "FAIL", l.name.c_str(), l.detail.c_str());
    ok = ok && l.pass;
  }
  return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-grid compact difference solver: experiment runner"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    if (need_config) opt->required();
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "override the random seed");
    sub->add_option("--threads", o.threads, "independent runs executed concurrently")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  auto* space = app.add_subcommand("converge-space", "spatial convergence table");
  auto* time = app.add_subcommand("converge-time", "temporal convergence table");
  auto* compare = app.add_subcommand("compare", "side-by-side scheme comparison");
  auto* ac = app.add_subcommand("allen-cahn", "Allen-Cahn energy and snapshot runs");
  auto* mesh = app.add_subcommand("mesh-gen", "write a time mesh CSV");
  auto* self = app.add_subcommand("selftest", "quick consistency checks");
  for (auto* sub : {space, time, compare, ac}) add_common(sub, true);
  add_common(mesh, false);
  mesh->add_option("--steps", o.steps, "number of steps");
  mesh->add_option("--final-time", o.final_time, "final time T");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*space) return converge(o, OrderAxis::space, false);
    if (*time) return converge(o, OrderAxis::time, false);
    if (*compare) return converge(o, OrderAxis::time, true);
    if (*ac) return allen_cahn(o);
    if (*mesh) return mesh_gen(o);
    if (*self) return run_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

#pragma once

// Problem catalog for u_t - c Lap(u) = f(u) + g on a rectangle, with
// manufactured exact solutions and Allen-Cahn setups, plus the discrete
// Allen-Cahn energy.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "compact_ops.hpp"
#include "grid.hpp"
#include "random.hpp"

namespace twogrid {

using ScalarFn = std::function<double(double)>;
using SpaceFn = std::function<double(double, double)>;
using SpaceTimeFn = std::function<double(double, double, double)>;

struct ProblemSpec {
  std::string name;
  double c = 1.0;
  ScalarFn f;
  ScalarFn f_prime;
  SpaceTimeFn g;            // empty means g == 0
  SpaceFn u0;
  SpaceTimeFn psi;          // Dirichlet data; empty means psi == 0
  SpaceTimeFn exact;        // optional
  Boundary bc = Boundary::dirichlet;
  double T = 1.0;
  double x0 = 0.0, y0 = 0.0, lx = 1.0, ly = 1.0;
  std::optional<double> epsilon;  // set for Allen-Cahn problems

  bool has_exact() const { return static_cast<bool>(exact); }
};

namespace detail {

inline double sin2pi(double x, double y) {
  return std::sin(2.0 * std::numbers::pi * x) * std::sin(2.0 * std::numbers::pi * y);
}

// Builds u = a(t) sin(2 pi x) sin(2 pi y) on (0,1)^2 with homogeneous
// Dirichlet data and g = a' S + 8 pi^2 c a S - f(a S).
inline ProblemSpec separable_problem(std::string name, double c, double T, ScalarFn f,
                                     ScalarFn fp, std::function<double(double)> amp,
                                     std::function<double(double)> amp_dot) {
  ProblemSpec p;
  p.name = std::move(name);
  p.c = c;
  p.T = T;
  p.f = f;
  p.f_prime = std::move(fp);
  p.bc = Boundary::dirichlet;
  const double k2 = 8.0 * std::numbers::pi * std::numbers::pi;
  p.exact = [amp](double x, double y, double t) { return amp(t) * sin2pi(x, y); };
  p.g = [=](double x, double y, double t) {
    const double s = sin2pi(x, y);
    const double u = amp(t) * s;
    return amp_dot(t) * s + c * k2 * u - f(u);
  };
  p.u0 = [amp](double x, double y) { return amp(0.0) * sin2pi(x, y); };
  return p;
}

inline double cubic_f(double u) { return u - u * u * u; }
inline double cubic_fp(double u) { return 1.0 - 3.0 * u * u; }

// a(t) = sum_k coeff_k sin(freq_k t)
inline ProblemSpec sine_sum_case(std::string name, std::vector<double> coeff,
                                 std::vector<double> freq) {
  auto amp = [coeff, freq](double t) {
    double a = 0.0;
    for (std::size_t k = 0; k < coeff.size(); ++k) a += coeff[k] * std::sin(freq[k] * t);
    return a;
  };
  auto amp_dot = [coeff, freq](double t) {
    double a = 0.0;
    for (std::size_t k = 0; k < coeff.size(); ++k) a += coeff[k] * freq[k] * std::cos(freq[k] * t);
    return a;
  };
  return separable_problem(std::move(name), 1.0, std::numbers::pi, cubic_f, cubic_fp, amp, amp_dot);
}

} // namespace detail

inline ProblemSpec case_I() {
  return detail::sine_sum_case("case1", {5.0, 2.0}, {1.0, 5.0});
}

inline ProblemSpec case_II() {
  return detail::sine_sum_case("case2", {10.0, 5.0, 2.0, 1.0}, {1.0, 2.0, 5.0, 10.0});
}

inline ProblemSpec case_III() {
  return detail::sine_sum_case("case3", {10.0, 50.0, 30.0, 10.0}, {1.0, 2.0, 5.0, 10.0});
}

// c = 1/(8 pi^2), f = u - u^3, u = sin(t) sin(2 pi x) sin(2 pi y), T = 1.
inline ProblemSpec problem_6_2() {
  const double c = 1.0 / (8.0 * std::numbers::pi * std::numbers::pi);
  return detail::separable_problem(
      "sec62", c, 1.0, detail::cubic_f, detail::cubic_fp, [](double t) { return std::sin(t); },
      [](double t) { return std::cos(t); });
}

// c = 1, f = sin u, two Gaussian pulses in time, T = 4.
inline ProblemSpec problem_6_3() {
  auto amp = [](double t) {
    return 1.0 + 20.0 * std::exp(-40.0 * (t - 1.0) * (t - 1.0)) +
           30.0 * std::exp(-60.0 * (t - 4.0) * (t - 4.0));
  };
  auto amp_dot = [](double t) {
    return -1600.0 * (t - 1.0) * std::exp(-40.0 * (t - 1.0) * (t - 1.0)) -
           3600.0 * (t - 4.0) * std::exp(-60.0 * (t - 4.0) * (t - 4.0));
  };
  return detail::separable_problem(
      "sec63", 1.0, 4.0, [](double u) { return std::sin(u); }, [](double u) { return std::cos(u); },
      amp, amp_dot);
}

enum class AllenCahnInitial { four_bubble, random };

struct AllenCahnOptions {
  // Defaults to 0.02 for the bubbles and 0.01 for the random field.
  std::optional<double> epsilon;
  AllenCahnInitial initial = AllenCahnInitial::four_bubble;
  std::uint64_t seed = 0;
  double random_lo = -0.05;
  double random_amp = 0.1;
  double T = 100.0;
  // Domain; defaults follow the initial condition: (-1,1)^2 for the bubbles,
  // (0,1)^2 for the random field.
  std::optional<double> x0, y0, lx, ly;
};

inline double four_bubble(double x, double y, double eps) {
  const double r2 = 0.2 * 0.2;
  return -std::tanh(((x - 0.3) * (x - 0.3) + y * y - r2) / eps) *
         std::tanh(((x + 0.3) * (x + 0.3) + y * y - r2) / eps) *
         std::tanh((x * x + (y - 0.3) * (y - 0.3) - r2) / eps) *
         std::tanh((x * x + (y + 0.3) * (y + 0.3) - r2) / eps);
}

// Uniform deviate keyed by seed and the node position (quantized to 1e-9), so
// nested grids see the same value at coincident nodes.
inline double positional_uniform(std::uint64_t seed, double x, double y) {
  const auto qx = static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(x * 1e9)));
  const auto qy = static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(y * 1e9)));
  const std::uint64_t key = CounterRng::mix(qx * 0x9E3779B97F4A7C15ULL ^ CounterRng::mix(qy + 0x632BE59BD9B4E019ULL));
  return CounterRng::to_open01(CounterRng::at(seed, key));
}

// u_t - eps^2 Lap(u) = u - u^3 with periodic boundary conditions.
inline ProblemSpec allen_cahn(const AllenCahnOptions& opt) {
  const double eps =
      opt.epsilon.value_or(opt.initial == AllenCahnInitial::four_bubble ? 0.02 : 0.01);
  if (!(eps > 0.0)) throw std::invalid_argument("allen_cahn: epsilon must be positive");
  ProblemSpec p;
  p.c = eps * eps;
  p.epsilon = eps;
  p.f = detail::cubic_f;
  p.f_prime = detail::cubic_fp;
  p.bc = Boundary::periodic;
  p.T = opt.T;
  if (opt.initial == AllenCahnInitial::four_bubble) {
    p.name = "ac_bubbles";
    p.x0 = opt.x0.value_or(-1.0);
    p.y0 = opt.y0.value_or(-1.0);
    p.lx = opt.lx.value_or(2.0);
    p.ly = opt.ly.value_or(2.0);
    p.u0 = [eps](double x, double y) { return four_bubble(x, y, eps); };
  } else {
    p.name = "ac_random";
    p.x0 = opt.x0.value_or(0.0);
    p.y0 = opt.y0.value_or(0.0);
    p.lx = opt.lx.value_or(1.0);
    p.ly = opt.ly.value_or(1.0);
    const auto seed = opt.seed;
    const double lo = opt.random_lo, amp = opt.random_amp;
    p.u0 = [seed, lo, amp](double x, double y) { return lo + amp * positional_uniform(seed, x, y); };
  }
  return p;
}

// E[u] = -(eps^2/2) hx hy sum u Lap_h u + (1/4) hx hy sum (1 - u^2)^2 over the
// periodic node set.
inline double discrete_energy(const GridFunction& u, double epsilon) {
  const Grid2D& g = u.grid();
  if (!g.periodic()) throw std::invalid_argument("discrete_energy: periodic grid required");
  const GridFunction lap = apply_laplacian(u);
  double grad = 0.0, pot = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double v = u.values()[k];
    grad += v * lap.values()[k];
    const double w = 1.0 - v * v;
    pot += w * w;
  }
  const double cell = g.hx() * g.hy();
  return -0.5 * epsilon * epsilon * cell * grad + 0.25 * cell * pot;
}

// Max |u_t - c Lap(u) - f(u) - g| over `samples` random interior points, with
// u_t and Lap(u) from fourth-order central differences of `exact`.
inline double source_residual(const ProblemSpec& p, int samples, std::uint64_t seed,
                              double h = 1e-3) {
  if (!p.has_exact()) throw std::invalid_argument("source_residual: problem has no exact solution");
  CounterRng rng(seed);
  auto d2 = [h](const std::function<double(double)>& fn, double s) {
    return (-fn(s - 2 * h) + 16 * fn(s - h) - 30 * fn(s) + 16 * fn(s + h) - fn(s + 2 * h)) /
           (12 * h * h);
  };
  auto d1 = [h](const std::function<double(double)>& fn, double s) {
    return (fn(s - 2 * h) - 8 * fn(s - h) + 8 * fn(s + h) - fn(s + 2 * h)) / (12 * h);
  };
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double x = p.x0 + p.lx * rng.uniform(0.01, 0.99);
    const double y = p.y0 + p.ly * rng.uniform(0.01, 0.99);
    const double t = rng.uniform(0.01, p.T - 0.01);
    const double ut = d1([&](double s) { return p.exact(x, y, s); }, t);
    const double lap = d2([&](double s) { return p.exact(s, y, t); }, x) +
                       d2([&](double s) { return p.exact(x, s, t); }, y);
    const double u = p.exact(x, y, t);
    const double g = p.g ? p.g(x, y, t) : 0.0;
    worst = std::max(worst, std::abs(ut - p.c * lap - p.f(u) - g));
  }
  return worst;
}

// Catalog lookup by name: case1|case2|case3|sec62|sec63|ac_bubbles|ac_random.
inline ProblemSpec problem_by_name(const std::string& name, const AllenCahnOptions& ac = {}) {
  if (name == "case1") return case_I();
  if (name == "case2") return case_II();
  if (name == "case3") return case_III();
  if (name == "sec62") return problem_6_2();
  if (name == "sec63") return problem_6_3();
  if (name == "ac_bubbles") {
    AllenCahnOptions o = ac;
    o.initial = AllenCahnInitial::four_bubble;
    return allen_cahn(o);
  }
  if (name == "ac_random") {
    AllenCahnOptions o = ac;
    o.initial = AllenCahnInitial::random;
    return allen_cahn(o);
  }
  throw std::invalid_argument("unknown problem '" + name + "'");
}

} // namespace twogrid

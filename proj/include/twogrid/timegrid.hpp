#pragma once

// Variable time meshes, variable-step BDF2 convolution kernels, their
// discrete orthogonal convolution (DOC) kernels, and step generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "random.hpp"

namespace twogrid {

// Step-ratio bound under which the DOC kernels stay positive definite.
inline constexpr double ratio_bound = 4.8645;

class TimeMesh {
public:
  // Times t_0 = 0 < t_1 < ... < t_N. With strict = true every ratio must be
  // below ratio_bound.
  static TimeMesh from_times(std::vector<double> times, bool strict = false) {
    if (times.size() < 2) throw std::invalid_argument("TimeMesh: need at least one step");
    if (times.front() != 0.0) throw std::invalid_argument("TimeMesh: t_0 must be 0");
    for (std::size_t k = 1; k < times.size(); ++k)
      if (!(times[k] > times[k - 1]))
        throw std::invalid_argument("TimeMesh: times must be strictly increasing");
    TimeMesh m(std::move(times));
    if (strict && m.max_ratio() >= ratio_bound)
      throw std::invalid_argument("TimeMesh: step ratio exceeds 4.8645");
    return m;
  }

  static TimeMesh from_steps(const std::vector<double>& steps, bool strict = false) {
    std::vector<double> t{0.0};
    for (double tau : steps) t.push_back(t.back() + tau);
    return from_times(std::move(t), strict);
  }

  static TimeMesh uniform(double T, int N) {
    if (N < 1 || !(T > 0.0)) throw std::invalid_argument("TimeMesh::uniform: need N >= 1, T > 0");
    std::vector<double> t(static_cast<std::size_t>(N) + 1);
    for (int k = 0; k <= N; ++k) t[k] = T * k / N;
    t[N] = T;
    return TimeMesh(std::move(t));
  }

  int steps() const noexcept { return static_cast<int>(t_.size()) - 1; }
  double final_time() const noexcept { return t_.back(); }
  double t(int k) const { return t_.at(static_cast<std::size_t>(k)); }
  double tau(int k) const { return t(k) - t(k - 1); }
  // r_k = tau_k / tau_{k-1} for k >= 2, r_1 = 0.
  double ratio(int k) const { return k <= 1 ? 0.0 : tau(k) / tau(k - 1); }

  double max_tau() const {
    double m = 0.0;
    for (int k = 1; k <= steps(); ++k) m = std::max(m, tau(k));
    return m;
  }
  double max_ratio() const {
    double m = 0.0;
    for (int k = 2; k <= steps(); ++k) m = std::max(m, ratio(k));
    return m;
  }

  const std::vector<double>& times() const noexcept { return t_; }

private:
  explicit TimeMesh(std::vector<double> t) : t_(std::move(t)) {}
  std::vector<double> t_;
};

struct Bdf2Coefficients {
  double b0;
  double b1;
};

// Coefficients of D_2 w^n = b0 (w^n - w^{n-1}) + b1 (w^{n-1} - w^{n-2}).
// tau_prev <= 0 selects the BDF1 start (b0 = 1/tau, b1 = 0).
inline Bdf2Coefficients bdf2_coefficients(double tau, double tau_prev) {
  if (tau_prev <= 0.0) return {1.0 / tau, 0.0};
  const double r = tau / tau_prev;
  return {(1.0 + 2.0 * r) / (tau * (1.0 + r)), -(r * r) / (tau * (1.0 + r))};
}

class BdfKernels {
public:
  explicit BdfKernels(const TimeMesh& mesh) {
    const int n = mesh.steps();
    b0_.resize(n);
    b1_.resize(n);
    for (int k = 1; k <= n; ++k) {
      const auto c = bdf2_coefficients(mesh.tau(k), k == 1 ? 0.0 : mesh.tau(k - 1));
      b0_[k - 1] = c.b0;
      b1_[k - 1] = c.b1;
    }
  }

  int steps() const noexcept { return static_cast<int>(b0_.size()); }
  double b0(int n) const { return b0_.at(static_cast<std::size_t>(n - 1)); }
  double b1(int n) const { return b1_.at(static_cast<std::size_t>(n - 1)); }
  // b^{(n)}_j; zero for j >= 2.
  double b(int n, int j) const { return j == 0 ? b0(n) : j == 1 ? b1(n) : 0.0; }

private:
  std::vector<double> b0_;
  std::vector<double> b1_;
};

inline BdfKernels bdf2_kernels(const TimeMesh& mesh) { return BdfKernels(mesh); }

// Row n of the DOC kernels: result[j] = theta^{(n)}_j, j = 0..n-1.
inline std::vector<double> doc_row(const BdfKernels& b, int n) {
  std::vector<double> row(static_cast<std::size_t>(n));
  if (b.b0(n) == 0.0) throw std::domain_error("doc_row: zero b0");
  row[0] = 1.0 / b.b0(n);
  // theta^{(n)}_{n-k} = -theta^{(n)}_{n-k-1} b^{(k+1)}_1 / b^{(k)}_0
  for (int k = n - 1; k >= 1; --k) {
    const int j = n - k;
    row[j] = -row[j - 1] * b.b1(k + 1) / b.b0(k);
  }
  return row;
}

// All DOC kernels, stored as a lower-triangular table. O(N^2) memory; use
// doc_row() directly to stream rows for long meshes.
class DocKernels {
public:
  explicit DocKernels(const BdfKernels& b) {
    rows_.reserve(b.steps());
    for (int n = 1; n <= b.steps(); ++n) rows_.push_back(doc_row(b, n));
  }

  int steps() const noexcept { return static_cast<int>(rows_.size()); }
  // theta^{(n)}_{n-m}
  double theta(int n, int m) const {
    return rows_.at(static_cast<std::size_t>(n - 1)).at(static_cast<std::size_t>(n - m));
  }
  const std::vector<double>& row(int n) const { return rows_.at(static_cast<std::size_t>(n - 1)); }

private:
  std::vector<std::vector<double>> rows_;
};

inline DocKernels doc_kernels(const BdfKernels& b) { return DocKernels(b); }

// tau_k = T theta_k / sum(theta) with theta_k uniform on (lower_ratio, 1).
inline TimeMesh random_mesh(double T, int N, std::uint64_t seed,
                            double lower_ratio = 1.0 / ratio_bound) {
  if (N < 2) throw std::invalid_argument("random_mesh: need N >= 2");
  CounterRng rng(seed);
  std::vector<double> theta(static_cast<std::size_t>(N));
  double sum = 0.0;
  for (double& th : theta) {
    th = rng.uniform(lower_ratio, 1.0);
    sum += th;
  }
  std::vector<double> t(static_cast<std::size_t>(N) + 1, 0.0);
  double acc = 0.0;
  for (int k = 1; k <= N; ++k) {
    acc += theta[k - 1];
    t[k] = T * (acc / sum);
  }
  t[N] = T;
  return TimeMesh::from_times(std::move(t));
}

struct AdaptiveConfig {
  double tau_min = 1e-3;
  double tau_max = 1e-1;
  double eta = 0.0;
  double r_max = 4.8;

  void validate() const {
    if (!(tau_min > 0.0) || !(tau_min <= tau_max))
      throw std::invalid_argument("AdaptiveConfig: need 0 < tau_min <= tau_max");
    if (!(eta >= 0.0)) throw std::invalid_argument("AdaptiveConfig: eta must be >= 0");
    if (!(r_max > 1.0 && r_max < ratio_bound))
      throw std::invalid_argument("AdaptiveConfig: need 1 < r_max < 4.8645");
  }
};

// tau_{n+1} = min{ max{tau_min, tau_max / sqrt(1 + eta * indicator_sq)}, r_max tau_n }.
inline double adaptive_next(double tau_n, double indicator_sq, const AdaptiveConfig& cfg) {
  if (!(tau_n > 0.0)) throw std::invalid_argument("adaptive_next: tau_n must be positive");
  if (!(indicator_sq >= 0.0)) throw std::invalid_argument("adaptive_next: negative indicator");
  const double inner = cfg.tau_max / std::sqrt(1.0 + cfg.eta * indicator_sq);
  return std::min(std::max(cfg.tau_min, inner), cfg.r_max * tau_n);
}

// CSV with header k,t_k,tau_k,r_k; row k = 0 carries tau = r = 0.
inline void write_mesh_csv(std::ostream& os, const TimeMesh& mesh) {
  os << "k,t_k,tau_k,r_k\n";
  char buf[128];
  for (int k = 0; k <= mesh.steps(); ++k) {
    const double tau = k == 0 ? 0.0 : mesh.tau(k);
    const double r = k == 0 ? 0.0 : mesh.ratio(k);
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", k, mesh.t(k), tau, r);
    os << buf;
  }
}

// Reads the t_k column back; tau/r columns are derived and ignored.
inline TimeMesh read_mesh_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("k,t_k", 0) != 0)
    throw std::runtime_error("mesh csv: missing header");
  std::vector<double> t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string k, tk;
    if (!std::getline(ss, k, ',') || !std::getline(ss, tk, ','))
      throw std::runtime_error("mesh csv: malformed row '" + line + "'");
    t.push_back(std::stod(tk));
  }
  return TimeMesh::from_times(std::move(t));
}

} // namespace twogrid

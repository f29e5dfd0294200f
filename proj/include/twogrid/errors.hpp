#pragma once

#include <stdexcept>
#include <string>

namespace twogrid {

// A grid function or solver iterate picked up NaN/Inf.
class NonFiniteError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class LinearSolveError : public std::runtime_error {
public:
  LinearSolveError(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

private:
  int iterations_;
  double residual_;
};

class NewtonError : public std::runtime_error {
public:
  NewtonError(const std::string& what, int iterations, double last_increment)
      : std::runtime_error(what), iterations_(iterations), last_increment_(last_increment) {}

  int iterations() const noexcept { return iterations_; }
  double last_increment() const noexcept { return last_increment_; }

private:
  int iterations_;
  double last_increment_;
};

} // namespace twogrid

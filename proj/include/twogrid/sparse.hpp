#pragma once

#include <cassert>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

namespace twogrid {

// Compressed sparse rows. Column indices within a row are sorted.
class CsrMatrix {
public:
  CsrMatrix() = default;
  explicit CsrMatrix(std::size_t n) : n_(n) { row_ptr_.reserve(n + 1); }

  std::size_t rows() const noexcept { return n_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  // Rows must be appended in order; entries of a row must be pushed in
  // increasing column order.
  void push(std::size_t col, double value) {
    col_.push_back(col);
    values_.push_back(value);
  }
  void finish_row() { row_ptr_.push_back(col_.size()); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> cols() const noexcept { return col_; }
  std::span<const double> values() const noexcept { return values_; }

  void multiply(std::span<const double> x, std::span<double> y) const {
    assert(x.size() == n_ && y.size() == n_);
    const std::size_t* rp = row_ptr_.data();
    const std::size_t* ci = col_.data();
    const double* v = values_.data();
    for (std::size_t r = 0; r < n_; ++r) {
      double s = 0.0;
      for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) s += v[k] * x[ci[k]];
      y[r] = s;
    }
  }

  std::vector<double> multiply(std::span<const double> x) const {
    std::vector<double> y(n_);
    multiply(x, y);
    return y;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(n_, 0.0);
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        if (col_[k] == r) d[r] = values_[k];
    return d;
  }

  double at(std::size_t r, std::size_t c) const {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (col_[k] == c) return values_[k];
    return 0.0;
  }

  // MatrixMarket coordinate dump (1-based indices).
  void write_matrix_market(std::ostream& os) const {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << n_ << ' ' << n_ << ' ' << values_.size() << '\n';
    os.precision(17);
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        os << r + 1 << ' ' << col_[k] + 1 << ' ' << values_[k] << '\n';
  }

private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_;
  std::vector<double> values_;
};

} // namespace twogrid

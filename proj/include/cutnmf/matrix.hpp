#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace cutnmf {

inline void check_arg(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Dense row-major matrix. Doubles carry all numeric kernels; the int
// instantiation holds rounded rating/prediction matrices.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      check_arg(r.size() == cols_, "Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  T* row(std::size_t i) { return data_.data() + i * cols_; }
  const T* row(std::size_t i) const { return data_.data() + i * cols_; }
  std::span<T> row_span(std::size_t i) { return {row(i), cols_}; }
  std::span<const T> row_span(std::size_t i) const { return {row(i), cols_}; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using MatrixD = Matrix<double>;
using MatrixI = Matrix<int>;

template <typename T>
bool all_finite(const Matrix<T>& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(static_cast<double>(m.data()[i]))) return false;
  }
  return true;
}

template <typename T>
bool all_nonnegative(const Matrix<T>& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.data()[i] < T{}) return false;
  }
  return true;
}

inline MatrixD transpose(const MatrixD& m) {
  MatrixD out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* src = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = src[j];
  }
  return out;
}

// out = x * y, accumulated per output row over x's columns in a fixed order.
// Each output row is produced by exactly one thread, so the result is
// bit-identical for any thread count.
inline MatrixD matmul(const MatrixD& x, const MatrixD& y) {
  check_arg(x.cols() == y.rows(), "matmul: inner dimensions differ");
  MatrixD out(x.rows(), y.cols());
  const std::size_t q = x.cols();
  const std::size_t r = y.cols();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(x.rows()); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double* oi = out.row(i);
    const double* xi = x.row(i);
    for (std::size_t f = 0; f < q; ++f) {
      const double s = xi[f];
      if (s == 0.0) continue;
      const double* yf = y.row(f);
      for (std::size_t j = 0; j < r; ++j) oi[j] += s * yf[j];
    }
  }
  return out;
}

// x * y^T for factor products W H^T
inline MatrixD matmul_transposed(const MatrixD& x, const MatrixD& y) {
  check_arg(x.cols() == y.cols(), "matmul_transposed: inner dimensions differ");
  return matmul(x, transpose(y));
}

// x^T x, accumulated over rows of x in index order (single-threaded; the
// k x k result is small at every scale this toolkit targets).
inline MatrixD gram(const MatrixD& x) {
  const std::size_t k = x.cols();
  MatrixD g(k, k);
  for (std::size_t u = 0; u < x.rows(); ++u) {
    const double* xu = x.row(u);
    for (std::size_t f = 0; f < k; ++f) {
      const double s = xu[f];
      if (s == 0.0) continue;
      double* gf = g.row(f);
      for (std::size_t t = 0; t < k; ++t) gf[t] += s * xu[t];
    }
  }
  return g;
}

inline double frobenius_norm(const MatrixD& m) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) acc += m.data()[i] * m.data()[i];
  return std::sqrt(acc);
}

}  // namespace cutnmf

#pragma once

#include <cmath>
#include <limits>

#include "cutnmf/matrix.hpp"
#include "cutnmf/ratings.hpp"

namespace cutnmf {

// P_Omega: keep entries in omega, zero the rest.
inline MatrixD project_observed(const MatrixD& m, const IndexSet& omega) {
  check_arg(m.rows() == omega.rows && m.cols() == omega.cols,
            "project_observed: matrix shape differs from omega's declared shape");
  MatrixD out(m.rows(), m.cols());
  for (const Cell& c : omega.cells) {
    check_arg(c.row < omega.rows && c.col < omega.cols,
              "project_observed: cell outside declared shape");
    out(c.row, c.col) = m(c.row, c.col);
  }
  return out;
}

// cut_v: clip entrywise above at v; values below pass through unchanged.
template <typename T>
Matrix<T> cut_upper(const Matrix<T>& m, int v) {
  check_arg(v >= 1, "cut_upper: v must be a positive integer");
  Matrix<T> out = m;
  const T cap = static_cast<T>(v);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.data()[i] > cap) out.data()[i] = cap;
  }
  return out;
}

// nearest integer, exact halves away from zero
inline int round_half_away(double x) {
  check_arg(std::isfinite(x), "round_nearest: non-finite entry");
  check_arg(std::abs(x) < static_cast<double>(std::numeric_limits<int>::max()),
            "round_nearest: entry out of integer range");
  return static_cast<int>(std::llround(x));
}

inline MatrixI round_nearest(const MatrixD& m) {
  MatrixI out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.data()[i] = round_half_away(m.data()[i]);
  }
  return out;
}

// B = W H^T
inline MatrixD reconstruct(const FactorPair& f) {
  check_arg(f.W.cols() == f.H.cols(), "reconstruct: factor widths differ");
  return matmul_transposed(f.W, f.H);
}

}  // namespace cutnmf

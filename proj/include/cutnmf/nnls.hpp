#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cutnmf/matrix.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cutnmf {

struct NnlsOptions {
  std::uint32_t inner_sweeps = 2;  // coordinate passes per subproblem call
  double coord_tol = 1e-9;         // per-coordinate first-order threshold
  bool greedy = true;              // greedy selection; cyclic order otherwise

  void validate() const {
    check_arg(inner_sweeps >= 1, "NnlsOptions: inner_sweeps must be >= 1");
    check_arg(coord_tol >= 0.0, "NnlsOptions: coord_tol must be >= 0");
  }
};

namespace detail {

// Worst first-order violation of a single row at its current gradient:
// a free coordinate must have (near) zero partial derivative, a coordinate
// at the bound must not have a strictly negative one.
inline double row_kkt_violation(const double* h, const double* g, std::size_t k) {
  double worst = 0.0;
  for (std::size_t f = 0; f < k; ++f) {
    const double v = h[f] > 0.0 ? std::abs(g[f]) : std::max(0.0, -g[f]);
    if (v > worst) worst = v;
  }
  return worst;
}

// Scratch for one coordinate-descent row: maintained gradient plus the
// diagonal of the quadratic term and its reciprocals (greedy selection scores
// every coordinate each step, so a division there would dominate the solve).
struct RowScratch {
  std::vector<double> gradient;
  std::vector<double> diag;
  std::vector<double> inv_diag;

  void reset(const MatrixD& g_mat) {
    const std::size_t k = g_mat.cols();
    gradient.resize(k);
    diag.resize(k);
    inv_diag.resize(k);
    for (std::size_t f = 0; f < k; ++f) {
      diag[f] = g_mat(f, f);
      inv_diag[f] = diag[f] > 0.0 ? 1.0 / diag[f] : 0.0;
    }
  }
};

// Minimize 0.5*h'Gh - rhs'h over h >= 0 for one row by projected coordinate
// descent. Each single-coordinate step applies the exact projected 1-D
// minimizer max(0, x - g/a) with a = G(f,f); zero-curvature coordinates are
// skipped (a dead factor column also has zero gradient, so they are
// consistent). Greedy selection picks the coordinate with the largest exact
// objective decrease: g^2/(2a) for an interior step, x(g - ax/2) when the
// step clamps at the bound.
inline void solve_row(double* h, const double* rhs, const MatrixD& g_mat,
                      const NnlsOptions& opt, RowScratch& scratch) {
  const std::size_t k = g_mat.cols();
  double* g = scratch.gradient.data();
  const double* diag = scratch.diag.data();
  const double* inv_diag = scratch.inv_diag.data();
  for (std::size_t f = 0; f < k; ++f) {
    double acc = -rhs[f];
    const double* gf = g_mat.row(f);
    for (std::size_t t = 0; t < k; ++t) acc += gf[t] * h[t];
    g[f] = acc;
  }
  for (std::uint32_t pass = 0; pass < opt.inner_sweeps; ++pass) {
    if (row_kkt_violation(h, g, k) <= opt.coord_tol) return;
    if (opt.greedy) {
      // one pass = k greedy single-coordinate updates
      for (std::size_t step = 0; step < k; ++step) {
        std::size_t best_f = k;
        double best_dec = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
          const double a = diag[f];
          if (a <= 0.0) continue;
          const double gf = g[f];
          const double x = h[f];
          const double dec = a * x >= gf ? 0.5 * gf * gf * inv_diag[f]
                                         : x * (gf - 0.5 * a * x);
          if (dec > best_dec) {
            best_dec = dec;
            best_f = f;
          }
        }
        if (best_f == k) return;  // no coordinate can improve
        double x = h[best_f] - g[best_f] / diag[best_f];
        if (x < 0.0) x = 0.0;
        const double delta = x - h[best_f];
        if (delta == 0.0) return;
        h[best_f] = x;
        const double* grow = g_mat.row(best_f);
        for (std::size_t t = 0; t < k; ++t) g[t] += delta * grow[t];
      }
    } else {
      for (std::size_t f = 0; f < k; ++f) {
        const double a = diag[f];
        if (a <= 0.0) continue;
        double x = h[f] - g[f] / a;
        if (x < 0.0) x = 0.0;
        const double d = x - h[f];
        if (d == 0.0) continue;
        h[f] = x;
        const double* grow = g_mat.row(f);
        for (std::size_t t = 0; t < k; ++t) g[t] += d * grow[t];
      }
    }
  }
}

// Shared core of both half-steps: rows are independent subproblems
// argmin_{x_i >= 0} 0.5*x_i'G x_i - rhs_i'x_i and may run on any number of
// threads with bit-identical results.
inline MatrixD solve_rows(const MatrixD& gram_mat, const MatrixD& rhs, MatrixD x,
                          const NnlsOptions& opt) {
#pragma omp parallel
  {
    RowScratch scratch;
    scratch.reset(gram_mat);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(x.rows()); ++ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      solve_row(x.row(i), rhs.row(i), gram_mat, opt, scratch);
    }
  }
  return x;
}

inline void check_subproblem_inputs(const MatrixD& c, const MatrixD& f,
                                    const MatrixD& x_init, bool f_is_left) {
  const std::size_t n_f = f_is_left ? c.rows() : c.cols();
  const std::size_t n_x = f_is_left ? c.cols() : c.rows();
  check_arg(f.rows() == n_f, "nnls: fixed factor height mismatch");
  check_arg(x_init.rows() == n_x && x_init.cols() == f.cols(),
            "nnls: init factor shape mismatch");
  check_arg(all_finite(c) && all_finite(f) && all_finite(x_init),
            "nnls: non-finite input");
  check_arg(all_nonnegative(f) && all_nonnegative(x_init),
            "nnls: negative factor input");
}

}  // namespace detail

// argmin_{H >= 0} ||C - W H^T||_F^2, warm-started from h_init.
inline MatrixD solve_for_H(const MatrixD& c, const MatrixD& w,
                           const MatrixD& h_init, const NnlsOptions& opt = {}) {
  opt.validate();
  detail::check_subproblem_inputs(c, w, h_init, /*f_is_left=*/true);
  return detail::solve_rows(gram(w), matmul(transpose(c), w), h_init, opt);
}

// argmin_{W >= 0} ||C - W H^T||_F^2 via the transposed problem.
inline MatrixD solve_for_W(const MatrixD& c, const MatrixD& h,
                           const MatrixD& w_init, const NnlsOptions& opt = {}) {
  opt.validate();
  detail::check_subproblem_inputs(c, h, w_init, /*f_is_left=*/false);
  return detail::solve_rows(gram(h), matmul(c, h), w_init, opt);
}

// max over entries of |min(h, g)| with g the gradient of
// 0.5*||C - W H^T||_F^2 at H; zero iff the KKT conditions hold exactly.
inline double kkt_residual(const MatrixD& c, const MatrixD& w, const MatrixD& h) {
  check_arg(w.rows() == c.rows() && h.rows() == c.cols() && w.cols() == h.cols(),
            "kkt_residual: dimension mismatch");
  const MatrixD g_mat = gram(w);
  const MatrixD rhs = matmul(transpose(c), w);
  const MatrixD hg = matmul(h, g_mat);
  double worst = 0.0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t f = 0; f < h.cols(); ++f) {
      const double g = hg(i, f) - rhs(i, f);
      const double v = std::abs(std::min(h(i, f), g));
      if (v > worst) worst = v;
    }
  }
  return worst;
}

}  // namespace cutnmf

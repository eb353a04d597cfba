#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "cutnmf/matrix.hpp"
#include "cutnmf/nnls.hpp"
#include "cutnmf/ops.hpp"
#include "cutnmf/ratings.hpp"
#include "cutnmf/rng.hpp"

namespace cutnmf {

struct CutNmfConfig {
  std::uint32_t k = 10;
  std::uint32_t max_iterations = 2000;  // outer iteration budget
  double tol = 1e-7;                    // relative mFE stagnation threshold
  std::uint64_t seed = 0;               // W_0 initialization
  NnlsOptions nnls;
  std::uint32_t trace_every = 0;  // observer cadence, 0 = never

  void validate() const {
    check_arg(k >= 1, "CutNmfConfig: k must be >= 1");
    check_arg(max_iterations >= 1, "CutNmfConfig: max_iterations must be >= 1");
    check_arg(tol > 0.0, "CutNmfConfig: tol must be > 0");
    nnls.validate();
  }
};

struct IterationTrace {
  std::uint32_t iteration = 0;
  double mfe = 0.0;
  std::uint32_t mie = 0;
  double elapsed_seconds = 0.0;
};

enum class StopReason { max_iterations, exact_reconstruction, mfe_stagnated };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::exact_reconstruction: return "exact_reconstruction";
    case StopReason::mfe_stagnated: return "mfe_stagnated";
  }
  return "?";
}

struct CutNmfResult {
  FactorPair factors;
  CompletedMatrix completed;
  std::vector<IterationTrace> trace;
  StopReason stop_reason = StopReason::max_iterations;

  std::uint32_t iterations() const {
    return static_cast<std::uint32_t>(trace.size());
  }
};

// mean Frobenius error: ||P_Omega(A - B)||_F / |Omega| (the norm itself, not
// its square, over the entry count)
inline double mfe(const ObservedRatings& a, const MatrixD& b) {
  check_arg(b.rows() == a.n_users() && b.cols() == a.n_items(), "mfe: shape mismatch");
  check_arg(a.size() > 0, "mfe: empty observed set");
  double acc = 0.0;
  for (const Rating& r : a.entries()) {
    const double d = static_cast<double>(r.value) - b(r.user, r.item);
    acc += d * d;
  }
  return std::sqrt(acc) / static_cast<double>(a.size());
}

// maximum integer error: max over Omega of |a - cut_v([b])|. The outer
// rounding in the definition is the identity once the inner one is applied,
// so round-then-cut is computed once.
inline std::uint32_t mie(const ObservedRatings& a, const MatrixD& b) {
  check_arg(b.rows() == a.n_users() && b.cols() == a.n_items(), "mie: shape mismatch");
  check_arg(a.size() > 0, "mie: empty observed set");
  const int v = a.scale().v_max;
  std::int64_t worst = 0;
  for (const Rating& r : a.entries()) {
    const int rounded = round_half_away(b(r.user, r.item));
    const int pred = rounded > v ? v : rounded;
    const std::int64_t d = std::abs(static_cast<std::int64_t>(r.value) - pred);
    if (d > worst) worst = d;
  }
  return static_cast<std::uint32_t>(worst);
}

// W_0 initializer: entries uniform on (0, 1], bit-identical for a given seed
// on every platform.
inline MatrixD random_uniform_matrix(std::size_t rows, std::size_t cols,
                                     std::uint64_t seed) {
  Rng rng(seed);
  MatrixD m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform_positive();
  return m;
}

// observer invoked with the freshly computed trace record and the current
// factors; used for metric traces and factor-level tests
using EngineObserver =
    std::function<void(const IterationTrace&, const MatrixD& w, const MatrixD& h)>;

struct AnlsStopping {
  std::uint32_t max_iterations = 100;
  double rel_tol = 0.0;  // relative change of ||A - W H^T||_F; 0 disables
};

// Generic alternating nonnegative least squares on a fixed dense target.
// Each half-step is the same subproblem solver the adaptive loop uses, so the
// two loops coincide when the observed set covers every cell. Observer
// records carry ||A - W H^T||_F in the mfe slot (there is no mask here) and
// a zero mie.
inline FactorPair anls(const MatrixD& a, const MatrixD& w0, std::uint32_t k,
                       const AnlsStopping& stop, const NnlsOptions& nnls_opt = {},
                       const EngineObserver& observer = {}) {
  check_arg(k >= 1, "anls: k must be >= 1");
  check_arg(w0.rows() == a.rows() && w0.cols() == k, "anls: W0 shape mismatch");
  check_arg(all_nonnegative(a), "anls: target has negative entries");
  MatrixD w = w0;
  MatrixD h(a.cols(), k);
  double err_old = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint32_t j = 1; j <= stop.max_iterations; ++j) {
    h = solve_for_H(a, w, h, nnls_opt);
    w = solve_for_W(a, h, w, nnls_opt);
    if (observer || stop.rel_tol > 0.0) {
      const MatrixD b = matmul_transposed(w, h);
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
      }
      const double err = std::sqrt(acc);
      if (observer) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        observer({j, err, 0, dt.count()}, w, h);
      }
      if (stop.rel_tol > 0.0 && err == 0.0) break;
      if (stop.rel_tol > 0.0 && std::abs(err_old - err) / err <= stop.rel_tol) break;
      err_old = err;
    }
  }
  return FactorPair{std::move(w), std::move(h), k};
}

// The adaptive loop: missing entries are imputed every iteration with the
// clipped reconstruction while observed votes stay fixed.
//
//   C_0 = P_Omega(A);  W_0 random positive;  H_0 = 0
//   H_j = argmin_{H>=0} ||C_{j-1} - W_{j-1} H^T||_F^2
//   W_j = argmin_{W>=0} ||C_{j-1} - W H_j^T||_F^2
//   B   = W_j H_j^T
//   C_j = P_Omega(A) + P_OmegaBar(cut_v(B))
//
// stopping on iteration budget, integer-exact reconstruction (MIE = 0), or
// relative mFE stagnation. mFE_old starts at 0, so the stagnation test sees a
// relative change of exactly 1 at the first iteration and cannot fire there
// for any tol < 1.
inline CutNmfResult cutnmf(const ObservedRatings& a, const CutNmfConfig& cfg,
                           const EngineObserver& observer = {}) {
  cfg.validate();
  check_arg(a.size() > 0, "cutnmf: empty observed set");
  const std::size_t n = a.n_users();
  const std::size_t m = a.n_items();
  const double v = static_cast<double>(a.scale().v_max);

  MatrixD c = a.to_dense();
  MatrixD w = random_uniform_matrix(n, cfg.k, cfg.seed);
  MatrixD h(m, cfg.k);

  CutNmfResult result;
  result.stop_reason = StopReason::max_iterations;
  result.trace.reserve(std::min<std::uint32_t>(cfg.max_iterations, 1u << 16));

  double mfe_cur = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint32_t j = 1; j <= cfg.max_iterations; ++j) {
    const double mfe_old = mfe_cur;
    h = solve_for_H(c, w, h, cfg.nnls);
    w = solve_for_W(c, h, w, cfg.nnls);
    MatrixD b = matmul_transposed(w, h);

    mfe_cur = mfe(a, b);
    const std::uint32_t mie_cur = mie(a, b);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    result.trace.push_back({j, mfe_cur, mie_cur, dt.count()});

    // C_j: clip the reconstruction above at v, then restore observed votes
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b.data()[i] > v) b.data()[i] = v;
    }
    a.paste_into(b);
    c = std::move(b);

    if (observer && cfg.trace_every > 0 && j % cfg.trace_every == 0) {
      observer(result.trace.back(), w, h);
    }

    if (mie_cur == 0 || mfe_cur == 0.0) {
      result.stop_reason = StopReason::exact_reconstruction;
      break;
    }
    if (std::abs(mfe_old - mfe_cur) / mfe_cur <= cfg.tol) {
      result.stop_reason = StopReason::mfe_stagnated;
      break;
    }
  }

  if (observer && cfg.trace_every > 0 &&
      result.trace.back().iteration % cfg.trace_every != 0) {
    observer(result.trace.back(), w, h);
  }

  result.factors = FactorPair{std::move(w), std::move(h), cfg.k};
  result.completed = CompletedMatrix{std::move(c), &a};
  return result;
}

// Integer predictions cut_v([W H^T]) over the whole matrix; all evaluation
// metrics consume these, never raw real-valued reconstructions.
inline MatrixI predicted_ratings(const FactorPair& f, const RatingScale& scale) {
  return cut_upper(round_nearest(reconstruct(f)), scale.v_max);
}

// The recommendation matrix P_OmegaBar(cut_v([C])): integer predictions on
// the unobserved cells, zero on Omega.
inline MatrixI predict(const CutNmfResult& result) {
  check_arg(result.completed.source != nullptr, "predict: result has no source");
  const ObservedRatings& a = *result.completed.source;
  MatrixI out = cut_upper(round_nearest(result.completed.values), a.scale().v_max);
  for (const Rating& r : a.entries()) out(r.user, r.item) = 0;
  return out;
}

}  // namespace cutnmf

#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles are
// deliberately plain scalar loops so they share no code path with the
// implementations they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cutnmf/matrix.hpp"
#include "cutnmf/ratings.hpp"
#include "cutnmf/rng.hpp"

namespace testsupport {

using cutnmf::Matrix;
using cutnmf::MatrixD;
using cutnmf::MatrixI;
using cutnmf::ObservedRatings;
using cutnmf::Rating;
using cutnmf::RatingScale;
using cutnmf::Rng;

inline MatrixD random_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                             double scale = 1.0) {
  MatrixD m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.uniform();
  return m;
}

inline double max_abs_diff(const MatrixD& a, const MatrixD& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

// random observed-ratings instance: every cell kept with probability density
inline ObservedRatings random_ratings(std::uint32_t n_users, std::uint32_t n_items,
                                      double density, Rng& rng,
                                      RatingScale scale = {1, 5}) {
  std::vector<Rating> entries;
  for (std::uint32_t u = 0; u < n_users; ++u) {
    for (std::uint32_t i = 0; i < n_items; ++i) {
      if (rng.uniform() < density) {
        const int v = scale.v_min +
                      static_cast<int>(rng.below(
                          static_cast<std::uint64_t>(scale.v_max - scale.v_min + 1)));
        entries.push_back({u, i, static_cast<std::int8_t>(v)});
      }
    }
  }
  if (entries.empty()) entries.push_back({0, 0, static_cast<std::int8_t>(scale.v_min)});
  return ObservedRatings(n_users, n_items, std::move(entries), scale);
}

// random integer prediction matrix over the full scale, plus slack below and
// above to exercise clipping-adjacent metric behavior
inline MatrixI random_predictions(std::uint32_t n_users, std::uint32_t n_items, Rng& rng,
                                  int lo = 0, int hi = 6) {
  MatrixI p(n_users, n_items);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p.data()[i] = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  return p;
}

// ---- scalar double-loop metric oracles ----

inline double oracle_mae(const ObservedRatings& a, const MatrixI& c) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Rating& r : a.entries()) {
    sum += std::abs(static_cast<double>(r.value) - static_cast<double>(c(r.user, r.item)));
    ++count;
  }
  return sum / static_cast<double>(count);
}

inline double oracle_zero_one(const ObservedRatings& a, const MatrixI& c, int t) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Rating& r : a.entries()) {
    const int av = r.value;
    const int cv = c(r.user, r.item);
    const bool mm = (av >= t && cv < t) || (av < t && cv >= t);
    sum += mm ? 1.0 : 0.0;
    ++count;
  }
  return sum / static_cast<double>(count);
}

inline std::optional<double> oracle_cmae(const ObservedRatings& a, const MatrixI& c, int t) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Rating& r : a.entries()) {
    const int cv = c(r.user, r.item);
    if (r.value >= t || cv >= t) {
      sum += std::abs(static_cast<double>(r.value) - static_cast<double>(cv));
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

inline std::pair<std::optional<double>, std::optional<double>> oracle_precision_recall(
    const ObservedRatings& a, const MatrixI& c, int t) {
  std::size_t s = 0, rr = 0, both = 0;
  for (const Rating& r : a.entries()) {
    const bool in_s = r.value >= t;
    const bool in_r = c(r.user, r.item) >= t;
    if (in_s) ++s;
    if (in_r) ++rr;
    if (in_s && in_r) ++both;
  }
  std::pair<std::optional<double>, std::optional<double>> out;
  if (rr > 0) out.first = 100.0 * static_cast<double>(both) / static_cast<double>(rr);
  if (s > 0) out.second = 100.0 * static_cast<double>(both) / static_cast<double>(s);
  return out;
}

inline double oracle_mfe(const ObservedRatings& a, const MatrixD& b) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Rating& r : a.entries()) {
    const double d = static_cast<double>(r.value) - b(r.user, r.item);
    sum += d * d;
    ++count;
  }
  return std::sqrt(sum) / static_cast<double>(count);
}

inline std::uint32_t oracle_mie(const ObservedRatings& a, const MatrixD& b) {
  const int v = a.scale().v_max;
  std::int64_t worst = 0;
  for (const Rating& r : a.entries()) {
    double x = b(r.user, r.item);
    // nearest integer, halves away from zero
    double rounded = std::floor(std::abs(x) + 0.5);
    if (x < 0) rounded = -rounded;
    double cut = rounded > v ? v : rounded;
    // outer rounding of the definition: already integral
    const std::int64_t d =
        std::llabs(static_cast<std::int64_t>(r.value) - static_cast<std::int64_t>(cut));
    worst = std::max(worst, d);
  }
  return static_cast<std::uint32_t>(worst);
}

// ---- independent projected-gradient solver for the H-subproblem ----
// minimizes ||C - W H^T||_F^2 over H >= 0 with a fixed step 1/L, L the
// largest eigenvalue bound of the quadratic term, iterated to tiny tolerance

inline double oracle_subproblem_objective(const MatrixD& c, const MatrixD& w,
                                          const MatrixD& h) {
  double total = 0.0;
  for (std::size_t u = 0; u < c.rows(); ++u) {
    for (std::size_t i = 0; i < c.cols(); ++i) {
      double pred = 0.0;
      for (std::size_t f = 0; f < w.cols(); ++f) pred += w(u, f) * h(i, f);
      const double d = c(u, i) - pred;
      total += d * d;
    }
  }
  return total;
}

inline MatrixD oracle_projected_gradient(const MatrixD& c, const MatrixD& w,
                                         MatrixD h, double tol = 1e-10,
                                         std::size_t max_iter = 2'000'000) {
  const std::size_t k = w.cols();
  const std::size_t m = c.cols();
  // Frobenius norm of W^T W bounds its spectral radius
  double l_bound = 0.0;
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t g = 0; g < k; ++g) {
      double dot = 0.0;
      for (std::size_t u = 0; u < w.rows(); ++u) dot += w(u, f) * w(u, g);
      l_bound += dot * dot;
    }
  }
  l_bound = std::sqrt(l_bound);
  if (l_bound == 0.0) return h;
  const double step = 1.0 / (2.0 * l_bound);

  for (std::size_t it = 0; it < max_iter; ++it) {
    double max_move = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t f = 0; f < k; ++f) {
        // gradient of ||C - W H^T||^2 w.r.t. h_{if}: -2 sum_u w_{uf}(c_{ui} - w_u.h_i)
        double g = 0.0;
        for (std::size_t u = 0; u < w.rows(); ++u) {
          double pred = 0.0;
          for (std::size_t t = 0; t < k; ++t) pred += w(u, t) * h(i, t);
          g += -2.0 * w(u, f) * (c(u, i) - pred);
        }
        double next = h(i, f) - step * g;
        if (next < 0.0) next = 0.0;
        max_move = std::max(max_move, std::abs(next - h(i, f)));
        h(i, f) = next;
      }
    }
    if (max_move <= tol) break;
  }
  return h;
}

}  // namespace testsupport

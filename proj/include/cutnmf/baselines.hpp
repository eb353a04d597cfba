#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cutnmf/engine.hpp"
#include "cutnmf/matrix.hpp"
#include "cutnmf/ops.hpp"
#include "cutnmf/ratings.hpp"
#include "cutnmf/rng.hpp"

namespace cutnmf {

struct KnnConfig {
  int n_neighbors = 40;
  int min_overlap = 3;  // co-rated items needed before a correlation counts

  void validate() const {
    check_arg(n_neighbors >= 1, "KnnConfig: n_neighbors must be >= 1");
    check_arg(min_overlap >= 2, "KnnConfig: min_overlap must be >= 2");
  }
};

// Pearson correlation over co-rated items only (means and variances taken on
// the overlap). Absent when the overlap is below min_overlap or either side
// has zero variance there.
inline std::optional<double> pearson_similarity(std::span<const Rating> ratings_u,
                                                std::span<const Rating> ratings_w,
                                                int min_overlap = 2) {
  std::vector<std::pair<double, double>> pairs;
  std::size_t a = 0, b = 0;
  while (a < ratings_u.size() && b < ratings_w.size()) {
    if (ratings_u[a].item < ratings_w[b].item) {
      ++a;
    } else if (ratings_w[b].item < ratings_u[a].item) {
      ++b;
    } else {
      pairs.emplace_back(ratings_u[a].value, ratings_w[b].value);
      ++a;
      ++b;
    }
  }
  if (pairs.size() < static_cast<std::size_t>(min_overlap)) return std::nullopt;
  double mean_u = 0.0, mean_w = 0.0;
  for (const auto& [x, y] : pairs) {
    mean_u += x;
    mean_w += y;
  }
  mean_u /= static_cast<double>(pairs.size());
  mean_w /= static_cast<double>(pairs.size());
  double cov = 0.0, var_u = 0.0, var_w = 0.0;
  for (const auto& [x, y] : pairs) {
    const double du = x - mean_u;
    const double dw = y - mean_w;
    cov += du * dw;
    var_u += du * du;
    var_w += dw * dw;
  }
  if (var_u == 0.0 || var_w == 0.0) return std::nullopt;
  return std::clamp(cov / std::sqrt(var_u * var_w), -1.0, 1.0);
}

// Full user-user similarity matrix; NaN marks an undefined correlation.
// Rows above the diagonal are computed in parallel and mirrored.
inline MatrixD user_similarity_matrix(const ObservedRatings& train,
                                      const KnnConfig& cfg) {
  const std::uint32_t n = train.n_users();
  MatrixD sims(n, n, std::numeric_limits<double>::quiet_NaN());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t uu = 0; uu < static_cast<std::ptrdiff_t>(n); ++uu) {
    const std::uint32_t u = static_cast<std::uint32_t>(uu);
    const auto row_u = train.by_user(u);
    for (std::uint32_t w = u + 1; w < n; ++w) {
      const auto s = pearson_similarity(row_u, train.by_user(w), cfg.min_overlap);
      if (s) sims(u, w) = *s;
    }
  }
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t w = u + 1; w < n; ++w) sims(w, u) = sims(u, w);
  }
  return sims;
}

namespace detail {

struct UserMeans {
  std::vector<double> mean;     // user mean over train ratings (0 if none)
  std::vector<bool> has_any;
  double global_mean = 0.0;
};

inline UserMeans user_means(const ObservedRatings& train) {
  UserMeans m;
  m.mean.assign(train.n_users(), 0.0);
  m.has_any.assign(train.n_users(), false);
  std::vector<std::uint32_t> counts(train.n_users(), 0);
  double total = 0.0;
  for (const Rating& r : train.entries()) {
    m.mean[r.user] += r.value;
    ++counts[r.user];
    total += r.value;
  }
  for (std::uint32_t u = 0; u < train.n_users(); ++u) {
    if (counts[u] > 0) {
      m.mean[u] /= counts[u];
      m.has_any[u] = true;
    }
  }
  m.global_mean = train.size() > 0 ? total / static_cast<double>(train.size()) : 0.0;
  return m;
}

}  // namespace detail

// User-based KNN prediction for each query cell: mean-centered weighted
// average over the top-n positively correlated neighbors who rated the item,
// re-centered on the query user's mean, clipped to scale and rounded.
// Fallback chain when no neighbor qualifies: user mean, then global mean.
inline std::vector<int> knn_predict(const ObservedRatings& train, const KnnConfig& cfg,
                                    std::span<const Cell> queries) {
  cfg.validate();
  const MatrixD sims = user_similarity_matrix(train, cfg);
  const detail::UserMeans means = detail::user_means(train);
  const int v_min = train.scale().v_min;
  const int v_max = train.scale().v_max;

  std::vector<int> out(queries.size());
#pragma omp parallel
  {
    std::vector<std::pair<double, std::uint32_t>> candidates;  // (sim, entry id)
#pragma omp for schedule(static)
    for (std::ptrdiff_t qq = 0; qq < static_cast<std::ptrdiff_t>(queries.size()); ++qq) {
      const Cell q = queries[static_cast<std::size_t>(qq)];
      candidates.clear();
      for (const std::uint32_t e : train.entry_ids_by_item(q.col)) {
        const Rating& r = train.entry(e);
        if (r.user == q.row) continue;
        const double s = sims(q.row, r.user);
        if (std::isnan(s) || s <= 0.0) continue;
        candidates.emplace_back(s, e);
      }
      double prediction;
      if (candidates.empty()) {
        prediction = means.has_any[q.row] ? means.mean[q.row] : means.global_mean;
      } else {
        const std::size_t keep =
            std::min(candidates.size(), static_cast<std::size_t>(cfg.n_neighbors));
        // strongest similarity first; entry id breaks ties deterministically
        std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                          [](const auto& a, const auto& b) {
                            return a.first != b.first ? a.first > b.first
                                                      : a.second < b.second;
                          });
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < keep; ++t) {
          const Rating& r = train.entry(candidates[t].second);
          num += candidates[t].first * (r.value - means.mean[r.user]);
          den += candidates[t].first;
        }
        const double base = means.has_any[q.row] ? means.mean[q.row] : means.global_mean;
        prediction = base + num / den;
      }
      const int rounded = round_half_away(std::clamp(
          prediction, static_cast<double>(v_min), static_cast<double>(v_max)));
      out[static_cast<std::size_t>(qq)] = rounded;
    }
  }
  return out;
}

// --- classical multiplicative-update NMF (the zero-filled naive control) ---

constexpr double kMuEps = 1e-12;

inline void nmf_mu_update_h(const MatrixD& a, const MatrixD& w, MatrixD& h) {
  const MatrixD numer = matmul(transpose(a), w);  // m x k
  const MatrixD denom = matmul(h, gram(w));       // m x k
  for (std::size_t i = 0; i < h.size(); ++i) {
    h.data()[i] *= numer.data()[i] / (denom.data()[i] + kMuEps);
  }
}

inline void nmf_mu_update_w(const MatrixD& a, MatrixD& w, const MatrixD& h) {
  const MatrixD numer = matmul(a, h);        // n x k
  const MatrixD denom = matmul(w, gram(h));  // n x k
  for (std::size_t i = 0; i < w.size(); ++i) {
    w.data()[i] *= numer.data()[i] / (denom.data()[i] + kMuEps);
  }
}

inline FactorPair nmf_multiplicative(const MatrixD& a_filled, std::uint32_t k,
                                     std::uint32_t iterations, std::uint64_t seed) {
  check_arg(k >= 1, "nmf_multiplicative: k must be >= 1");
  check_arg(all_nonnegative(a_filled), "nmf_multiplicative: negative entries");
  MatrixD w = random_uniform_matrix(a_filled.rows(), k, derive_seed(seed, "nmf-mu/w"));
  MatrixD h = random_uniform_matrix(a_filled.cols(), k, derive_seed(seed, "nmf-mu/h"));
  for (std::uint32_t it = 0; it < iterations; ++it) {
    nmf_mu_update_h(a_filled, w, h);
    nmf_mu_update_w(a_filled, w, h);
  }
  return FactorPair{std::move(w), std::move(h), k};
}

// --- regularized latent-factor model fitted by projected SGD ---

struct RegNmfConfig {
  std::uint32_t k = 6;
  double lambda = 0.05;
  double learning_rate = 0.005;
  std::uint32_t epochs = 60;
  std::uint64_t seed = 0;

  void validate() const {
    check_arg(k >= 1, "RegNmfConfig: k must be >= 1");
    check_arg(lambda >= 0.0, "RegNmfConfig: lambda must be >= 0");
    check_arg(learning_rate > 0.0, "RegNmfConfig: learning_rate must be > 0");
    check_arg(epochs >= 1, "RegNmfConfig: epochs must be >= 1");
  }
};

// per-entry loss (a - w.h)^2 + lambda (||w||^2 + ||h||^2) and its gradient,
// exposed separately so tests can check it against finite differences
inline double reg_entry_loss(std::span<const double> w_u, std::span<const double> h_i,
                             double a, double lambda) {
  double dot = 0.0, nw = 0.0, nh = 0.0;
  for (std::size_t f = 0; f < w_u.size(); ++f) {
    dot += w_u[f] * h_i[f];
    nw += w_u[f] * w_u[f];
    nh += h_i[f] * h_i[f];
  }
  const double e = a - dot;
  return e * e + lambda * (nw + nh);
}

inline void reg_entry_gradient(std::span<const double> w_u, std::span<const double> h_i,
                               double a, double lambda, std::span<double> grad_w,
                               std::span<double> grad_h) {
  double dot = 0.0;
  for (std::size_t f = 0; f < w_u.size(); ++f) dot += w_u[f] * h_i[f];
  const double e = a - dot;
  for (std::size_t f = 0; f < w_u.size(); ++f) {
    grad_w[f] = -2.0 * e * h_i[f] + 2.0 * lambda * w_u[f];
    grad_h[f] = -2.0 * e * w_u[f] + 2.0 * lambda * h_i[f];
  }
}

namespace detail {

inline double reg_objective(const ObservedRatings& a, const MatrixD& w, const MatrixD& h,
                            double lambda) {
  double total = 0.0;
  for (const Rating& r : a.entries()) {
    total += reg_entry_loss(w.row_span(r.user), h.row_span(r.item), r.value, lambda);
  }
  return total;
}

}  // namespace detail

// Minimizes sum over Omega of the per-entry regularized loss by stochastic
// gradient steps in a seeded shuffle order, projecting both factor rows onto
// the nonnegative orthant after every step. Single-threaded: the visit order
// is part of the reproducibility contract. Throws if the training objective
// exceeds 10x its initial value (divergence guard).
inline FactorPair regularized_mf(const ObservedRatings& train, const RegNmfConfig& cfg) {
  cfg.validate();
  const std::uint32_t k = cfg.k;
  MatrixD w = random_uniform_matrix(train.n_users(), k, derive_seed(cfg.seed, "rnmf/w"));
  MatrixD h = random_uniform_matrix(train.n_items(), k, derive_seed(cfg.seed, "rnmf/h"));

  std::vector<std::uint32_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  Rng shuffle_rng(derive_seed(cfg.seed, "rnmf/shuffle"));

  const double initial_objective = detail::reg_objective(train, w, h, cfg.lambda);
  std::vector<double> grad_w(k), grad_h(k);
  const auto entries = train.entries();
  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (const std::uint32_t e : order) {
      const Rating& r = entries[e];
      double* wu = w.row(r.user);
      double* hi = h.row(r.item);
      reg_entry_gradient({wu, k}, {hi, k}, r.value, cfg.lambda, grad_w, grad_h);
      for (std::uint32_t f = 0; f < k; ++f) {
        wu[f] = std::max(0.0, wu[f] - cfg.learning_rate * grad_w[f]);
        hi[f] = std::max(0.0, hi[f] - cfg.learning_rate * grad_h[f]);
      }
    }
    const double objective = detail::reg_objective(train, w, h, cfg.lambda);
    if (!std::isfinite(objective) || objective > 10.0 * initial_objective) {
      throw std::runtime_error("regularized_mf: training objective diverged");
    }
  }
  return FactorPair{std::move(w), std::move(h), k};
}

}  // namespace cutnmf

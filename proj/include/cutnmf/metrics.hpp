#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "cutnmf/matrix.hpp"
#include "cutnmf/ratings.hpp"

namespace cutnmf {

// One evaluation snapshot over a named index set. Absent values mean the
// defining denominator set was empty.
struct MetricReport {
  std::string set_label;
  int threshold = 4;
  double mae = 0.0;
  std::optional<double> cmae;
  double zero_one = 0.0;
  std::optional<double> precision;  // percent
  std::optional<double> recall;     // percent
};

// An evaluation set is a view of the utility matrix restricted to sigma:
// (user, item, true vote) triples under a name that travels with every
// report derived from it. Predictions come as an integer matrix.
struct EvalSet {
  std::string label;  // "omega", "omega80", "theta20", ...
  std::span<const Rating> sigma;
};

inline double mae(std::span<const Rating> sigma, const MatrixI& pred) {
  check_arg(!sigma.empty(), "mae: empty evaluation set");
  double acc = 0.0;
  for (const Rating& r : sigma) {
    acc += std::abs(static_cast<double>(r.value) - pred(r.user, r.item));
  }
  return acc / static_cast<double>(sigma.size());
}

// mismatch indicator: true and predicted votes on strictly opposite sides of
// the recommendability threshold (exact agreement at the threshold is never
// a mismatch)
inline bool mismatch(int truth, int predicted, int threshold) {
  return (truth >= threshold && predicted < threshold) ||
         (truth < threshold && predicted >= threshold);
}

inline double zero_one_loss(std::span<const Rating> sigma, const MatrixI& pred,
                            int threshold = 4) {
  check_arg(!sigma.empty(), "zero_one_loss: empty evaluation set");
  std::size_t mismatches = 0;
  for (const Rating& r : sigma) {
    if (mismatch(r.value, pred(r.user, r.item), threshold)) ++mismatches;
  }
  return static_cast<double>(mismatches) / static_cast<double>(sigma.size());
}

// MAE restricted to the recommendable cells: those with either the true or
// the predicted vote at or above the threshold. Absent if no cell qualifies.
inline std::optional<double> cmae(std::span<const Rating> sigma, const MatrixI& pred,
                                  int threshold = 4) {
  check_arg(!sigma.empty(), "cmae: empty evaluation set");
  double acc = 0.0;
  std::size_t count = 0;
  for (const Rating& r : sigma) {
    const int p = pred(r.user, r.item);
    if (r.value >= threshold || p >= threshold) {
      acc += std::abs(static_cast<double>(r.value) - p);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return acc / static_cast<double>(count);
}

// S = true positives in sigma, R = predicted positives in sigma;
// precision = 100 |S n R| / |R|, recall = 100 |S n R| / |S|.
inline std::pair<std::optional<double>, std::optional<double>> precision_recall(
    std::span<const Rating> sigma, const MatrixI& pred, int threshold = 4) {
  check_arg(!sigma.empty(), "precision_recall: empty evaluation set");
  std::size_t s_count = 0, r_count = 0, both = 0;
  for (const Rating& r : sigma) {
    const bool in_s = r.value >= threshold;
    const bool in_r = pred(r.user, r.item) >= threshold;
    s_count += in_s;
    r_count += in_r;
    both += in_s && in_r;
  }
  std::optional<double> precision, recall;
  if (r_count > 0) precision = 100.0 * static_cast<double>(both) / static_cast<double>(r_count);
  if (s_count > 0) recall = 100.0 * static_cast<double>(both) / static_cast<double>(s_count);
  return {precision, recall};
}

inline MetricReport evaluate_metrics(std::string set_label,
                                     std::span<const Rating> sigma,
                                     const MatrixI& pred, int threshold = 4) {
  MetricReport rep;
  rep.set_label = std::move(set_label);
  rep.threshold = threshold;
  rep.mae = mae(sigma, pred);
  rep.cmae = cmae(sigma, pred, threshold);
  rep.zero_one = zero_one_loss(sigma, pred, threshold);
  auto [p, r] = precision_recall(sigma, pred, threshold);
  rep.precision = p;
  rep.recall = r;
  return rep;
}

inline MetricReport evaluate_metrics(const EvalSet& set, const MatrixI& pred,
                                     int threshold = 4) {
  return evaluate_metrics(set.label, set.sigma, pred, threshold);
}

// shortest round-trip decimal form; deterministic across runs
inline std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

inline std::string format_optional(const std::optional<double>& x) {
  return x ? format_double(*x) : std::string();
}

// CSV row: set_label, k, iterations, mae, cmae, zero_one, precision, recall
// (empty field for absent values)
inline std::string metric_csv_row(const MetricReport& rep, std::uint32_t k,
                                  std::uint32_t iterations) {
  std::string row = rep.set_label;
  row += ',';
  row += std::to_string(k);
  row += ',';
  row += std::to_string(iterations);
  row += ',';
  row += format_double(rep.mae);
  row += ',';
  row += format_optional(rep.cmae);
  row += ',';
  row += format_double(rep.zero_one);
  row += ',';
  row += format_optional(rep.precision);
  row += ',';
  row += format_optional(rep.recall);
  return row;
}

}  // namespace cutnmf

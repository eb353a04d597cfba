#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cutnmf/matrix.hpp"
#include "cutnmf/ops.hpp"
#include "cutnmf/ratings.hpp"
#include "cutnmf/rng.hpp"

namespace cutnmf {

enum class DatasetSource {
  movielens_100k,  // "user \t item \t rating \t timestamp"
  movielens_1m,    // "UserID::MovieID::Rating::Timestamp"
  movielens_10m,   // same layout, half-star ratings doubled onto {1..10}
  synthetic,
  generic_csv,     // headerless "user,item,rating"
};

inline const char* to_string(DatasetSource s) {
  switch (s) {
    case DatasetSource::movielens_100k: return "movielens_100k";
    case DatasetSource::movielens_1m: return "movielens_1m";
    case DatasetSource::movielens_10m: return "movielens_10m";
    case DatasetSource::synthetic: return "synthetic";
    case DatasetSource::generic_csv: return "generic_csv";
  }
  return "?";
}

struct DatasetSpec {
  DatasetSource source = DatasetSource::generic_csv;
  std::string path;
  RatingScale scale;  // declared scale; 10M is forced to {1..10}
};

// Ratings re-indexed to contiguous 0-based users/items, with the raw id of
// each internal index retained for reporting.
struct Dataset {
  ObservedRatings ratings;
  std::vector<std::int64_t> user_ids;
  std::vector<std::int64_t> item_ids;
};

namespace detail {

inline std::runtime_error parse_error(const std::string& path, std::size_t line_no,
                                      const std::string& what) {
  return std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

inline bool parse_int(std::string_view s, std::int64_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && !s.empty();
}

inline bool parse_double(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && !s.empty();
}

inline std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
  return fields;
}

class Reindexer {
 public:
  std::uint32_t intern(std::int64_t raw) {
    auto [it, inserted] = map_.try_emplace(raw, static_cast<std::uint32_t>(ids_.size()));
    if (inserted) ids_.push_back(raw);
    return it->second;
  }
  std::vector<std::int64_t> take_ids() { return std::move(ids_); }
  std::size_t size() const { return ids_.size(); }

 private:
  std::unordered_map<std::int64_t, std::uint32_t> map_;
  std::vector<std::int64_t> ids_;
};

}  // namespace detail

// Load a ratings file. Raw user/movie ids are mapped to contiguous 0-based
// indices in order of first appearance; duplicates and out-of-scale votes are
// rejected with the offending line number.
inline Dataset load_movielens(const DatasetSpec& spec) {
  check_arg(spec.source != DatasetSource::synthetic,
            "load_movielens: synthetic datasets are generated, not loaded");
  RatingScale scale = spec.scale;
  if (spec.source == DatasetSource::movielens_10m) scale = RatingScale{1, 10};
  scale.validate();

  std::ifstream in(spec.path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + spec.path);

  const bool colons = spec.source == DatasetSource::movielens_1m ||
                      spec.source == DatasetSource::movielens_10m;
  const std::string_view sep = colons                                      ? "::"
                               : spec.source == DatasetSource::movielens_100k ? "\t"
                                                                              : ",";
  const std::size_t min_fields = spec.source == DatasetSource::generic_csv ? 3 : 4;

  detail::Reindexer users, items;
  std::vector<Rating> entries;
  std::unordered_map<std::uint64_t, std::size_t> seen;  // (user, item) -> first line
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split(line, sep);
    if (fields.size() < min_fields) {
      throw detail::parse_error(spec.path, line_no, "expected at least " +
                                std::to_string(min_fields) + " fields");
    }
    std::int64_t raw_user = 0, raw_item = 0;
    if (!detail::parse_int(fields[0], raw_user) || !detail::parse_int(fields[1], raw_item)) {
      throw detail::parse_error(spec.path, line_no, "malformed user/item id");
    }
    int vote = 0;
    if (spec.source == DatasetSource::movielens_10m) {
      double r = 0.0;
      if (!detail::parse_double(fields[2], r)) {
        throw detail::parse_error(spec.path, line_no, "malformed rating");
      }
      const double doubled = 2.0 * r;
      if (std::abs(doubled - std::llround(doubled)) > 1e-9) {
        throw detail::parse_error(spec.path, line_no,
                                  "rating is not a whole or half star");
      }
      vote = static_cast<int>(std::llround(doubled));
    } else {
      std::int64_t r = 0;
      if (!detail::parse_int(fields[2], r)) {
        throw detail::parse_error(spec.path, line_no, "malformed rating");
      }
      vote = static_cast<int>(r);
    }
    if (!scale.contains(vote)) {
      throw detail::parse_error(spec.path, line_no, "rating outside declared scale");
    }
    const std::uint32_t u = users.intern(raw_user);
    const std::uint32_t i = items.intern(raw_item);
    const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | i;
    if (!seen.try_emplace(key, line_no).second) {
      throw detail::parse_error(spec.path, line_no, "duplicate (user, item) pair");
    }
    entries.push_back({u, i, static_cast<std::int8_t>(vote)});
  }
  if (entries.empty()) throw std::runtime_error("dataset is empty: " + spec.path);

  const std::uint32_t n_users = static_cast<std::uint32_t>(users.size());
  const std::uint32_t n_items = static_cast<std::uint32_t>(items.size());
  return Dataset{ObservedRatings(n_users, n_items, std::move(entries), scale),
                 users.take_ids(), items.take_ids()};
}

struct SyntheticSpec {
  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
  std::uint32_t true_rank = 1;
  std::uint64_t n_observed = 0;
  std::uint64_t seed = 0;
  RatingScale scale;

  void validate() const {
    check_arg(n_users > 0 && n_items > 0, "SyntheticSpec: empty shape");
    check_arg(true_rank >= 1, "SyntheticSpec: rank must be >= 1");
    check_arg(n_observed >= 1, "SyntheticSpec: need at least one observed cell");
    check_arg(n_observed <= static_cast<std::uint64_t>(n_users) * n_items,
              "SyntheticSpec: n_observed exceeds cell count");
    scale.validate();
  }
};

struct SyntheticData {
  ObservedRatings observed;
  MatrixI ground_truth;
};

// Planted low-rank instance: uniform nonnegative factors, product rescaled
// affinely onto [v_min, v_max] and rounded to integer votes, then n_observed
// cells sampled uniformly without replacement. A constant product (possible
// at rank 1) degenerates to every vote equal to v_min.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  MatrixD ws(spec.n_users, spec.true_rank);
  for (std::size_t i = 0; i < ws.size(); ++i) ws.data()[i] = rng.uniform();
  MatrixD hs(spec.n_items, spec.true_rank);
  for (std::size_t i = 0; i < hs.size(); ++i) hs.data()[i] = rng.uniform();

  MatrixD product = matmul_transposed(ws, hs);
  double lo = product.data()[0], hi = product.data()[0];
  for (std::size_t i = 0; i < product.size(); ++i) {
    lo = std::min(lo, product.data()[i]);
    hi = std::max(hi, product.data()[i]);
  }
  MatrixI truth(spec.n_users, spec.n_items, spec.scale.v_min);
  if (hi > lo) {
    const double span = static_cast<double>(spec.scale.v_max - spec.scale.v_min);
    for (std::size_t i = 0; i < product.size(); ++i) {
      const double scaled =
          spec.scale.v_min + span * (product.data()[i] - lo) / (hi - lo);
      truth.data()[i] = round_half_away(scaled);
    }
  }

  // partial Fisher-Yates over the linear cell indices
  const std::uint64_t cell_count = static_cast<std::uint64_t>(spec.n_users) * spec.n_items;
  std::vector<std::uint64_t> cells(cell_count);
  for (std::uint64_t i = 0; i < cell_count; ++i) cells[i] = i;
  for (std::uint64_t i = 0; i < spec.n_observed; ++i) {
    const std::uint64_t j = i + rng.below(cell_count - i);
    std::swap(cells[i], cells[j]);
  }

  std::vector<Rating> entries;
  entries.reserve(spec.n_observed);
  for (std::uint64_t i = 0; i < spec.n_observed; ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(cells[i] / spec.n_items);
    const std::uint32_t it = static_cast<std::uint32_t>(cells[i] % spec.n_items);
    entries.push_back({u, it, static_cast<std::int8_t>(truth(u, it))});
  }
  return SyntheticData{
      ObservedRatings(spec.n_users, spec.n_items, std::move(entries), spec.scale),
      std::move(truth)};
}

struct Split {
  ObservedRatings train;  // Omega_80
  ObservedRatings test;   // Theta_20
  double fraction = 0.8;
  std::uint64_t seed = 0;
};

// Uniform split without replacement; |train| = round(fraction * |Omega|) and
// the two sides partition the original entry set.
inline Split split_train_test(const ObservedRatings& a, double fraction,
                              std::uint64_t seed) {
  check_arg(fraction > 0.0 && fraction < 1.0, "split: fraction must be in (0, 1)");
  check_arg(a.size() >= 2, "split: need at least two observed entries");
  const std::size_t total = a.size();
  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  check_arg(n_train >= 1 && n_train < total, "split: fraction produces an empty side");

  std::vector<std::uint32_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = static_cast<std::uint32_t>(i);
  Rng rng(seed);
  rng.shuffle(order);

  const auto entries = a.entries();
  std::vector<Rating> train_entries, test_entries;
  train_entries.reserve(n_train);
  test_entries.reserve(total - n_train);
  for (std::size_t i = 0; i < total; ++i) {
    (i < n_train ? train_entries : test_entries).push_back(entries[order[i]]);
  }
  return Split{
      ObservedRatings(a.n_users(), a.n_items(), std::move(train_entries), a.scale()),
      ObservedRatings(a.n_users(), a.n_items(), std::move(test_entries), a.scale()),
      fraction, seed};
}

// atomic file write: temp file in the target directory, then rename
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, target);
}

inline void save_generic_csv(const std::string& path, const ObservedRatings& a) {
  std::string out;
  out.reserve(a.size() * 12);
  for (const Rating& r : a.entries()) {
    out += std::to_string(r.user);
    out += ',';
    out += std::to_string(r.item);
    out += ',';
    out += std::to_string(static_cast<int>(r.value));
    out += '\n';
  }
  write_file_atomic(path, out);
}

// ground-truth sidecar: one CSV row per matrix row
inline void save_matrix_csv(const std::string& path, const MatrixI& m) {
  std::string out;
  out.reserve(m.size() * 2);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += std::to_string(m(i, j));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace cutnmf

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cutnmf/matrix.hpp"

namespace cutnmf {

// Integer vote range. MovieLens uses {1..5}; half-star datasets are doubled
// onto {1..10} by the loader.
struct RatingScale {
  int v_min = 1;
  int v_max = 5;

  void validate() const {
    check_arg(v_min >= 1 && v_min < v_max, "RatingScale: need 1 <= v_min < v_max");
  }
  bool contains(int r) const { return r >= v_min && r <= v_max; }
};

// Default recommendability threshold: 4 on the 1..5 scale, scaled
// proportionally for doubled scales (8 on 1..10).
inline int default_threshold(const RatingScale& scale) {
  return static_cast<int>(std::llround(0.8 * scale.v_max));
}

struct Rating {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::int8_t value = 0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct Cell {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// An index set together with the matrix shape it refers to.
struct IndexSet {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<Cell> cells;
};

// The observed part of the utility matrix: the entry set, stored sorted by
// (user, item) with row offsets, plus a column-oriented view over the same
// entries. Immutable after construction.
class ObservedRatings {
 public:
  ObservedRatings(std::uint32_t n_users, std::uint32_t n_items,
                  std::vector<Rating> entries, RatingScale scale)
      : n_users_(n_users), n_items_(n_items), scale_(scale),
        entries_(std::move(entries)) {
    scale_.validate();
    check_arg(n_users_ > 0 && n_items_ > 0, "ObservedRatings: empty shape");
    for (const Rating& r : entries_) {
      check_arg(r.user < n_users_ && r.item < n_items_,
                "ObservedRatings: entry index out of range");
      check_arg(scale_.contains(r.value),
                "ObservedRatings: rating outside scale");
    }
    std::sort(entries_.begin(), entries_.end(), [](const Rating& a, const Rating& b) {
      return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    for (std::size_t i = 1; i < entries_.size(); ++i) {
      check_arg(entries_[i - 1].user != entries_[i].user ||
                    entries_[i - 1].item != entries_[i].item,
                "ObservedRatings: duplicate (user, item) pair");
    }
    row_ptr_.assign(n_users_ + 1, 0);
    for (const Rating& r : entries_) ++row_ptr_[r.user + 1];
    for (std::uint32_t u = 0; u < n_users_; ++u) row_ptr_[u + 1] += row_ptr_[u];

    // column view: entry indices bucketed by item, user-sorted within each
    // bucket because the source order is row-major
    col_ptr_.assign(n_items_ + 1, 0);
    for (const Rating& r : entries_) ++col_ptr_[r.item + 1];
    for (std::uint32_t i = 0; i < n_items_; ++i) col_ptr_[i + 1] += col_ptr_[i];
    col_entry_.resize(entries_.size());
    std::vector<std::uint32_t> cursor(col_ptr_.begin(), col_ptr_.end() - 1);
    for (std::uint32_t e = 0; e < entries_.size(); ++e) {
      col_entry_[cursor[entries_[e].item]++] = e;
    }
  }

  std::uint32_t n_users() const { return n_users_; }
  std::uint32_t n_items() const { return n_items_; }
  const RatingScale& scale() const { return scale_; }
  std::size_t size() const { return entries_.size(); }

  std::span<const Rating> entries() const { return entries_; }

  std::span<const Rating> by_user(std::uint32_t u) const {
    return {entries_.data() + row_ptr_[u], row_ptr_[u + 1] - row_ptr_[u]};
  }

  // entry ids (indices into entries()) of the users who rated item i
  std::span<const std::uint32_t> entry_ids_by_item(std::uint32_t i) const {
    return {col_entry_.data() + col_ptr_[i], col_ptr_[i + 1] - col_ptr_[i]};
  }

  const Rating& entry(std::uint32_t id) const { return entries_[id]; }

  std::optional<int> rating(std::uint32_t u, std::uint32_t i) const {
    auto row = by_user(u);
    auto it = std::lower_bound(row.begin(), row.end(), i,
                               [](const Rating& r, std::uint32_t item) { return r.item < item; });
    if (it == row.end() || it->item != i) return std::nullopt;
    return static_cast<int>(it->value);
  }

  // P_Omega(A) as a dense matrix: observed votes, zero elsewhere
  MatrixD to_dense() const {
    MatrixD out(n_users_, n_items_);
    for (const Rating& r : entries_) out(r.user, r.item) = static_cast<double>(r.value);
    return out;
  }

  // overwrite the observed cells of m with the observed votes
  void paste_into(MatrixD& m) const {
    check_arg(m.rows() == n_users_ && m.cols() == n_items_,
              "paste_into: shape mismatch");
    for (const Rating& r : entries_) m(r.user, r.item) = static_cast<double>(r.value);
  }

  IndexSet index_set() const {
    IndexSet s;
    s.rows = n_users_;
    s.cols = n_items_;
    s.cells.reserve(entries_.size());
    for (const Rating& r : entries_) s.cells.push_back({r.user, r.item});
    return s;
  }

 private:
  std::uint32_t n_users_;
  std::uint32_t n_items_;
  RatingScale scale_;
  std::vector<Rating> entries_;
  std::vector<std::uint32_t> row_ptr_;
  std::vector<std::uint32_t> col_ptr_;
  std::vector<std::uint32_t> col_entry_;
};

// Nonnegative rank-k factors: W is n_users x k, H is n_items x k.
struct FactorPair {
  MatrixD W;
  MatrixD H;
  std::uint32_t k = 0;

  void validate() const {
    check_arg(k >= 1, "FactorPair: rank must be >= 1");
    check_arg(W.cols() == k && H.cols() == k, "FactorPair: factor width != k");
    check_arg(all_finite(W) && all_finite(H), "FactorPair: non-finite entries");
    check_arg(all_nonnegative(W) && all_nonnegative(H),
              "FactorPair: negative entries");
  }
};

// Dense working matrix with the observed votes fixed and the complement
// carrying the clipped reconstruction. `source` is a non-owning reference to
// the ratings it completes and must outlive the struct.
struct CompletedMatrix {
  MatrixD values;
  const ObservedRatings* source = nullptr;
};

// Invariant check: exact agreement on Omega, [0, v_max] on the complement.
inline bool completed_matrix_ok(const CompletedMatrix& c) {
  if (c.source == nullptr) return false;
  const ObservedRatings& a = *c.source;
  if (c.values.rows() != a.n_users() || c.values.cols() != a.n_items()) return false;
  for (const Rating& r : a.entries()) {
    if (c.values(r.user, r.item) != static_cast<double>(r.value)) return false;
  }
  const double v = static_cast<double>(a.scale().v_max);
  MatrixD mask(a.n_users(), a.n_items());
  for (const Rating& r : a.entries()) mask(r.user, r.item) = 1.0;
  for (std::size_t u = 0; u < c.values.rows(); ++u) {
    for (std::size_t i = 0; i < c.values.cols(); ++i) {
      if (mask(u, i) != 0.0) continue;
      const double x = c.values(u, i);
      if (!(x >= 0.0 && x <= v)) return false;
    }
  }
  return true;
}

}  // namespace cutnmf

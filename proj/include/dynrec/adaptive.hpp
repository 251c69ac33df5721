#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "dynrec/diffusion.hpp"
#include "dynrec/graph.hpp"
#include "dynrec/oracle.hpp"

namespace dynrec {

/// First order (AAF): refresh the touched item's column by one MD pass.
/// Second order (AAS): additionally refresh its row by one HC pass.
enum class Approximation : std::uint8_t { FirstOrder = 1, SecondOrder = 2 };

inline const char* to_string(Approximation a) { return a == Approximation::FirstOrder ? "aaf" : "aas"; }

/// Compressed approximation of M keyed by column. Column alpha holds the
/// nonzero entries m_{beta,alpha}; rows are never indexed separately.
class SparseColumnStore {
 public:
  using Column = absl::flat_hash_map<std::uint32_t, double>;

  explicit SparseColumnStore(Approximation a) : approximation_(a) {}

  Approximation approximation() const noexcept { return approximation_; }
  std::size_t column_count() const noexcept { return columns_.size(); }

  const Column& column(ItemId col) const { return columns_.at(col.value); }

  double at(ItemId row, ItemId col) const {
    if (col.value >= columns_.size()) return 0.0;
    const auto& c = columns_[col.value];
    auto it = c.find(row.value);
    return it == c.end() ? 0.0 : it->second;
  }

  template <class Fn>
  void for_each_in_column(ItemId col, Fn&& fn) const {
    if (col.value >= columns_.size()) return;
    for (const auto& [row, v] : columns_[col.value]) fn(ItemId{row}, v);
  }

  std::size_t nonzeros() const {
    std::size_t n = 0;
    for (const auto& c : columns_) n += c.size();
    return n;
  }

  /// Number of events that changed the graph since construction (or restore).
  std::uint64_t events_applied() const noexcept { return events_; }
  /// Entry writes and erasures performed by event updates (not compared by ==).
  std::uint64_t value_writes() const noexcept { return writes_; }

  void ensure_columns(std::size_t n) {
    if (columns_.size() < n) columns_.resize(n);
  }

  /// Replaces column alpha wholesale with md_from_item(g, alpha).
  void refresh_column(const BipartiteGraph& g, ItemId alpha) {
    ensure_columns(g.item_count());
    auto& col = columns_[alpha.value];
    col.clear();
    writes_ += visit_md_column(g, alpha, ws_, [&](ItemId beta, double v) { col[beta.value] = v; });
  }

  /// Writes row alpha from one HC pass. Each entry (alpha, beta) lives in
  /// column beta. `may_have_left` lists items that could have dropped out of
  /// the HC support (the user's profile before a removal); their stale
  /// entries are erased.
  void refresh_row(const BipartiteGraph& g, ItemId alpha, std::span<const ItemId> may_have_left) {
    ensure_columns(g.item_count());
    if (in_row_.size() < g.item_count()) in_row_.resize(g.item_count(), 0);
    row_scratch_.clear();
    writes_ += visit_hc_column(g, alpha, ws_, [&](ItemId beta, double v) {
      columns_[beta.value][alpha.value] = v;
      in_row_[beta.value] = 1;
      row_scratch_.push_back(beta);
    });
    for (ItemId beta : may_have_left) {
      if (!in_row_[beta.value]) writes_ += columns_[beta.value].erase(alpha.value);
    }
    if (!in_row_[alpha.value]) writes_ += columns_[alpha.value].erase(alpha.value);
    for (ItemId beta : row_scratch_) in_row_[beta.value] = 0;
  }

  /// Diagonals m_{beta,beta} for beta in the user's profile (other than
  /// alpha) shift by (1/k_i' - 1/k_i) / k_beta when user i gains or loses an
  /// edge. They belong to no column or row being refreshed, so they are
  /// patched in place: O(k_i) writes.
  void adjust_diagonals(const BipartiteGraph& g, UserId user, ItemId alpha, EdgeOp op) {
    const auto profile = g.items_of(user);
    const double k_after = static_cast<double>(profile.size());
    const double k_before = op == EdgeOp::Add ? k_after - 1.0 : k_after + 1.0;
    const double w_after = k_after > 0.0 ? 1.0 / k_after : 0.0;
    const double w_before = k_before > 0.0 ? 1.0 / k_before : 0.0;
    for (ItemId beta : profile) {
      if (beta == alpha) continue;
      auto& col = columns_[beta.value];
      auto it = col.find(beta.value);
      const double k_beta = static_cast<double>(g.item_degree(beta));
      const double base = it == col.end() ? 0.0 : it->second;
      col[beta.value] = base + (w_after - w_before) / k_beta;
      ++writes_;
    }
  }

  void note_event() noexcept { ++events_; }
  void restore_write_counter(std::uint64_t w) noexcept { writes_ = w; }

  /// Every entry as (col, row, value), sorted by column then row.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> sorted_entries() const {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> out;
    out.reserve(nonzeros());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto start = out.size();
      for (const auto& [r, v] : columns_[c]) out.emplace_back(static_cast<std::uint32_t>(c), r, v);
      std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
    }
    return out;
  }

  static SparseColumnStore from_entries(Approximation a, std::size_t column_count,
                                        std::span<const std::tuple<std::uint32_t, std::uint32_t, double>> entries,
                                        std::uint64_t events, std::uint64_t writes) {
    SparseColumnStore s(a);
    s.columns_.resize(column_count);
    for (const auto& [c, r, v] : entries) {
      if (c >= column_count) throw InconsistencyError("store entry outside column range");
      s.columns_[c][r] = v;
    }
    s.events_ = events;
    s.writes_ = writes;
    return s;
  }

  bool operator==(const SparseColumnStore& other) const {
    return approximation_ == other.approximation_ && events_ == other.events_ && columns_ == other.columns_;
  }

 private:
  Approximation approximation_;
  std::vector<Column> columns_;
  std::uint64_t events_ = 0;
  std::uint64_t writes_ = 0;
  DiffusionWorkspace ws_;
  std::vector<char> in_row_;
  std::vector<ItemId> row_scratch_;
};

/// Brings `store` up to date after `g` absorbed an event on `outcome.item`.
/// `profile_before` is the user's item list before the event (only read for
/// removals under second-order approximation).
inline void update_after_event(SparseColumnStore& store, const BipartiteGraph& g, const EdgeOutcome& outcome,
                               EdgeOp op, std::span<const ItemId> profile_before) {
  store.ensure_columns(g.item_count());
  if (outcome.duplicate) return;
  store.refresh_column(g, outcome.item);
  if (store.approximation() == Approximation::SecondOrder) store.refresh_row(g, outcome.item, profile_before);
  store.adjust_diagonals(g, outcome.user, outcome.item, op);
  store.note_event();
}

namespace detail {

inline std::vector<ItemId> profile_before_removal(const BipartiteGraph& g, const EdgeEvent& event) {
  if (event.op != EdgeOp::Remove) return {};
  auto u = g.find_user(event.user);
  if (!u) return {};
  const auto items = g.items_of(*u);
  return {items.begin(), items.end()};
}

inline EdgeOutcome apply_event_with(SparseColumnStore& store, BipartiteGraph& g, const EdgeEvent& event) {
  const auto before = store.approximation() == Approximation::SecondOrder ? profile_before_removal(g, event)
                                                                          : std::vector<ItemId>{};
  const auto outcome = g.apply(event);
  update_after_event(store, g, outcome, event.op, before);
  return outcome;
}

}  // namespace detail

/// Mutates `g` with the event, then refreshes column alpha (first order).
inline EdgeOutcome apply_event_aaf(SparseColumnStore& store, BipartiteGraph& g, const EdgeEvent& event) {
  if (store.approximation() != Approximation::FirstOrder) throw std::invalid_argument("store is not first-order");
  return detail::apply_event_with(store, g, event);
}

/// Mutates `g`, then refreshes column alpha and row alpha (second order).
inline EdgeOutcome apply_event_aas(SparseColumnStore& store, BipartiteGraph& g, const EdgeEvent& event) {
  if (store.approximation() != Approximation::SecondOrder) throw std::invalid_argument("store is not second-order");
  return detail::apply_event_with(store, g, event);
}

inline EdgeOutcome apply_event(SparseColumnStore& store, BipartiteGraph& g, const EdgeEvent& event) {
  return detail::apply_event_with(store, g, event);
}

/// Sets every column to its exact MD column for `g`.
inline void bulk_initialize(SparseColumnStore& store, const BipartiteGraph& g) {
  store.ensure_columns(g.item_count());
  const auto writes = store.value_writes();
  for (std::size_t a = 0; a < g.item_count(); ++a) store.refresh_column(g, ItemId{a});
  store.restore_write_counter(writes);
}

inline ScoreVector score(const SparseColumnStore& store, const BipartiteGraph& g, UserId user) {
  return score_user(store, g, user);
}

/// HC columns read off an MD store: column beta of H is row beta of M,
/// gathered by probing every column. Desk scale only.
struct TransposedStore {
  const SparseColumnStore& store;

  template <class Fn>
  void for_each_in_column(ItemId col, Fn&& fn) const {
    for (std::size_t a = 0; a < store.column_count(); ++a) {
      const double v = store.at(col, ItemId{a});
      if (v != 0.0) fn(ItemId{a}, v);
    }
  }
};

struct ErrorPosition {
  ItemId row;
  ItemId col;
  double error = 0.0;  // stored - exact
  std::optional<oracle::ChangeType> type;
};

struct ErrorReport {
  double max_abs_error = 0.0;
  ItemId max_row;
  ItemId max_col;
  std::vector<ErrorPosition> positions;  // row-major order
  std::size_t edge_count = 0;

  bool exact() const { return positions.empty(); }

  const ErrorPosition* find(ItemId row, ItemId col) const {
    for (const auto& p : positions)
      if (p.row == row && p.col == col) return &p;
    return nullptr;
  }
};

/// Entrywise comparison against an exact matrix. Differences at or below
/// `tolerance` count as exact. When `ledger` is given, positions it lists
/// are tagged with their change type.
inline ErrorReport error_report(const SparseColumnStore& store, const DensePropMatrix& exact,
                                const oracle::ChangeLedger* ledger = nullptr,
                                double tolerance = kExactTolerance) {
  if (store.column_count() != exact.size()) {
    throw InconsistencyError("error_report: store has " + std::to_string(store.column_count()) +
                             " columns, matrix has " + std::to_string(exact.size()));
  }
  absl::flat_hash_map<std::uint64_t, oracle::ChangeType> types;
  if (ledger) {
    for (const auto& e : ledger->entries)
      types[(std::uint64_t{e.row.value} << 32) | e.col.value] = e.type;
  }
  ErrorReport rep;
  rep.edge_count = exact.edge_count;
  const std::size_t n = exact.size();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double diff = store.at(ItemId{r}, ItemId{c}) - exact.at(r, c);
      if (std::abs(diff) <= tolerance) continue;
      ErrorPosition p{ItemId{r}, ItemId{c}, diff, std::nullopt};
      if (auto it = types.find((std::uint64_t{r} << 32) | c); it != types.end()) p.type = it->second;
      if (std::abs(diff) > rep.max_abs_error) {
        rep.max_abs_error = std::abs(diff);
        rep.max_row = p.row;
        rep.max_col = p.col;
      }
      rep.positions.push_back(p);
    }
  }
  return rep;
}

}  // namespace dynrec

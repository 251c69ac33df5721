#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dynrec/graph.hpp"

namespace dynrec {

/// Default ceiling on |I| for anything that materialises a dense item x item matrix.
inline constexpr std::size_t kDefaultDenseItemCap = 20000;

/// One column (mass diffusion) or row (heat conduction) of the propagation matrix.
/// Entries are sorted by item index and strictly positive.
struct SparseItemVector {
  ItemId source;
  std::vector<std::pair<ItemId, double>> entries;
  bool degenerate = false;  // source had degree zero

  double at(ItemId item) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), item,
                               [](const auto& e, ItemId id) { return e.first < id; });
    return it != entries.end() && it->first == item ? it->second : 0.0;
  }

  double sum() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.second;
    return s;
  }
};

/// Scratch buffers for diffusion passes; reuse one per thread to avoid
/// re-zeroing an |I|-sized array on every pass.
class DiffusionWorkspace {
 public:
  void prepare(std::size_t item_count) {
    if (acc_.size() < item_count) acc_.resize(item_count, 0.0);
  }

  void add(ItemId item, double v) {
    double& slot = acc_[item.value];
    if (slot == 0.0) touched_.push_back(item);
    slot += v;
  }

  // Visits every touched slot (in first-touch order) and resets it.
  template <class Fn>
  void drain(Fn&& fn) {
    for (ItemId item : touched_) {
      fn(item, acc_[item.value]);
      acc_[item.value] = 0.0;
    }
    touched_.clear();
  }

  std::size_t touched() const noexcept { return touched_.size(); }

 private:
  std::vector<double> acc_;
  std::vector<ItemId> touched_;
};

namespace detail {

// Accumulates S[beta] = sum over users j of `source` that also hold beta of 1/k_j.
// Both MD and HC passes share this sum; they only differ in the final divisor.
inline void co_occurrence_pass(const BipartiteGraph& g, ItemId source, DiffusionWorkspace& ws) {
  ws.prepare(g.item_count());
  for (UserId j : g.users_of(source)) {
    const auto items = g.items_of(j);
    const double share = 1.0 / static_cast<double>(items.size());
    for (ItemId beta : items) ws.add(beta, share);
  }
}

inline SparseItemVector sorted_vector(ItemId source, std::vector<std::pair<ItemId, double>> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return SparseItemVector{source, std::move(entries), false};
}

}  // namespace detail

/// Mass diffusion from `source`: visits (beta, m_{beta,source}) for every
/// item reached, in unspecified order. Returns the number of entries visited.
template <class Fn>
std::size_t visit_md_column(const BipartiteGraph& g, ItemId source, DiffusionWorkspace& ws, Fn&& fn) {
  const auto k_source = static_cast<double>(g.item_degree(source));
  if (k_source == 0.0) return 0;
  detail::co_occurrence_pass(g, source, ws);
  const std::size_t n = ws.touched();
  ws.drain([&](ItemId beta, double s) { fn(beta, s / k_source); });
  return n;
}

/// Heat conduction from `source`: visits (beta, h_{beta,source}) = (beta, m_{source,beta}).
template <class Fn>
std::size_t visit_hc_column(const BipartiteGraph& g, ItemId source, DiffusionWorkspace& ws, Fn&& fn) {
  if (g.item_degree(source) == 0) return 0;
  detail::co_occurrence_pass(g, source, ws);
  const std::size_t n = ws.touched();
  ws.drain([&](ItemId beta, double s) { fn(beta, s / static_cast<double>(g.item_degree(beta))); });
  return n;
}

/// Column `source` of M. Entries sum to one.
inline SparseItemVector md_from_item(const BipartiteGraph& g, ItemId source, DiffusionWorkspace& ws) {
  if (g.item_degree(source) == 0) return SparseItemVector{source, {}, true};
  std::vector<std::pair<ItemId, double>> entries;
  visit_md_column(g, source, ws, [&](ItemId b, double v) { entries.emplace_back(b, v); });
  return detail::sorted_vector(source, std::move(entries));
}

inline SparseItemVector md_from_item(const BipartiteGraph& g, ItemId source) {
  DiffusionWorkspace ws;
  return md_from_item(g, source, ws);
}

/// Row `source` of M, obtained as one heat-conduction pass (H = M^T).
inline SparseItemVector hc_from_item(const BipartiteGraph& g, ItemId source, DiffusionWorkspace& ws) {
  if (g.item_degree(source) == 0) return SparseItemVector{source, {}, true};
  std::vector<std::pair<ItemId, double>> entries;
  visit_hc_column(g, source, ws, [&](ItemId b, double v) { entries.emplace_back(b, v); });
  return detail::sorted_vector(source, std::move(entries));
}

inline SparseItemVector hc_from_item(const BipartiteGraph& g, ItemId source) {
  DiffusionWorkspace ws;
  return hc_from_item(g, source, ws);
}

/// Row-major |I| x |I| matrix; entry (row, col) is the fraction of col's
/// resource that ends up on row.
class DensePropMatrix {
 public:
  DensePropMatrix() = default;
  explicit DensePropMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }

  double& at(ItemId row, ItemId col) { return data_[row.value * n_ + col.value]; }
  double at(ItemId row, ItemId col) const { return data_[row.value * n_ + col.value]; }
  double& at(std::size_t row, std::size_t col) { return data_[row * n_ + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * n_ + col]; }

  /// Grows to n x n, new rows and columns zero.
  void expand(std::size_t n) {
    if (n <= n_) return;
    std::vector<double> grown(n * n, 0.0);
    for (std::size_t r = 0; r < n_; ++r) {
      std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(r * n_), n_,
                  grown.begin() + static_cast<std::ptrdiff_t>(r * n));
    }
    data_ = std::move(grown);
    n_ = n;
  }

  DensePropMatrix transposed() const {
    DensePropMatrix t(n_);
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t c = 0; c < n_; ++c) t.at(c, r) = at(r, c);
    return t;
  }

  double column_sum(std::size_t col) const {
    double s = 0.0;
    for (std::size_t r = 0; r < n_; ++r) s += at(r, col);
    return s;
  }

  /// l, the edge count this matrix corresponds to.
  std::size_t edge_count = 0;

  bool operator==(const DensePropMatrix& other) const { return n_ == other.n_ && data_ == other.data_; }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

inline void check_dense_cap(const BipartiteGraph& g, std::size_t cap) {
  if (g.item_count() > cap) {
    throw SizeLimitError("dense matrix over " + std::to_string(g.item_count()) +
                         " items exceeds cap of " + std::to_string(cap));
  }
}

/// Full MD propagation matrix assembled column by column from diffusion passes.
inline DensePropMatrix build_dense_md(const BipartiteGraph& g, std::size_t cap = kDefaultDenseItemCap) {
  check_dense_cap(g, cap);
  DensePropMatrix m(g.item_count());
  m.edge_count = g.edge_count();
  DiffusionWorkspace ws;
  for (std::size_t a = 0; a < g.item_count(); ++a) {
    const ItemId alpha{a};
    visit_md_column(g, alpha, ws, [&](ItemId beta, double v) { m.at(beta, alpha) = v; });
  }
  return m;
}

/// HC matrix; always the exact transpose of the MD matrix.
inline DensePropMatrix build_dense_hc(const BipartiteGraph& g, std::size_t cap = kDefaultDenseItemCap) {
  auto h = build_dense_md(g, cap).transposed();
  h.edge_count = g.edge_count();
  return h;
}

// ---------------------------------------------------------------------------
// Scoring

struct ScoreVector {
  UserId user;
  std::size_t edge_count = 0;
  std::vector<double> scores;  // indexed by item
  bool degenerate = false;     // empty profile

  double operator[](ItemId item) const { return scores[item.value]; }
};

/// Anything that can enumerate the stored entries of one propagation-matrix column.
template <class P>
concept ColumnProvider = requires(const P& p, ItemId col) {
  p.for_each_in_column(col, [](ItemId, double) {});
};

/// Columns of a dense matrix.
struct DenseColumns {
  const DensePropMatrix& matrix;

  template <class Fn>
  void for_each_in_column(ItemId col, Fn&& fn) const {
    for (std::size_t r = 0; r < matrix.size(); ++r) {
      const double v = matrix.at(r, col.value);
      if (v != 0.0) fn(ItemId{r}, v);
    }
  }
};

/// Columns of the transpose of a dense matrix (HC columns read off an MD matrix).
struct DenseRows {
  const DensePropMatrix& matrix;

  template <class Fn>
  void for_each_in_column(ItemId col, Fn&& fn) const {
    for (std::size_t c = 0; c < matrix.size(); ++c) {
      const double v = matrix.at(col.value, c);
      if (v != 0.0) fn(ItemId{c}, v);
    }
  }
};

/// MD columns computed on demand from the graph.
struct GraphMdColumns {
  const BipartiteGraph& graph;
  mutable DiffusionWorkspace ws;

  template <class Fn>
  void for_each_in_column(ItemId col, Fn&& fn) const {
    visit_md_column(graph, col, ws, fn);
  }
};

/// HC columns computed on demand from the graph.
struct GraphHcColumns {
  const BipartiteGraph& graph;
  mutable DiffusionWorkspace ws;

  template <class Fn>
  void for_each_in_column(ItemId col, Fn&& fn) const {
    visit_hc_column(graph, col, ws, fn);
  }
};

/// f' = W f with f the indicator of the user's collected items.
template <ColumnProvider P>
ScoreVector score_user(const P& columns, const BipartiteGraph& g, UserId user) {
  ScoreVector out{user, g.edge_count(), std::vector<double>(g.item_count(), 0.0), false};
  const auto profile = g.items_of(user);
  if (profile.empty()) {
    out.degenerate = true;
    return out;
  }
  for (ItemId beta : profile) {
    columns.for_each_in_column(beta, [&](ItemId alpha, double v) {
      if (alpha.value < out.scores.size()) out.scores[alpha.value] += v;
    });
  }
  return out;
}

/// MD scores for one user straight from the graph: items -> users -> items,
/// touching each co-rating user once. Equal to M f by linearity.
inline ScoreVector mass_diffusion_scores(const BipartiteGraph& g, UserId user) {
  ScoreVector out{user, g.edge_count(), std::vector<double>(g.item_count(), 0.0), false};
  const auto profile = g.items_of(user);
  if (profile.empty()) {
    out.degenerate = true;
    return out;
  }
  std::vector<double> user_resource(g.user_count(), 0.0);
  std::vector<UserId> reached;
  for (ItemId beta : profile) {
    const auto users = g.users_of(beta);
    const double share = 1.0 / static_cast<double>(users.size());
    for (UserId j : users) {
      if (user_resource[j.value] == 0.0) reached.push_back(j);
      user_resource[j.value] += share;
    }
  }
  std::sort(reached.begin(), reached.end());
  for (UserId j : reached) {
    const auto items = g.items_of(j);
    const double share = user_resource[j.value] / static_cast<double>(items.size());
    for (ItemId alpha : items) out.scores[alpha.value] += share;
  }
  return out;
}

/// HC scores for one user straight from the graph.
inline ScoreVector heat_conduction_scores(const BipartiteGraph& g, UserId user) {
  ScoreVector out{user, g.edge_count(), std::vector<double>(g.item_count(), 0.0), false};
  const auto profile = g.items_of(user);
  if (profile.empty()) {
    out.degenerate = true;
    return out;
  }
  std::vector<double> overlap(g.user_count(), 0.0);
  std::vector<UserId> reached;
  for (ItemId beta : profile) {
    for (UserId j : g.users_of(beta)) {
      if (overlap[j.value] == 0.0) reached.push_back(j);
      overlap[j.value] += 1.0;
    }
  }
  std::sort(reached.begin(), reached.end());
  for (UserId j : reached) {
    const auto items = g.items_of(j);
    const double temp = overlap[j.value] / static_cast<double>(items.size());
    for (ItemId alpha : items) out.scores[alpha.value] += temp;
  }
  for (std::size_t a = 0; a < out.scores.size(); ++a) {
    const auto k = g.item_degree(ItemId{a});
    if (k > 0) out.scores[a] /= static_cast<double>(k);
  }
  return out;
}

/// Orders by descending score, ties by ascending item index.
inline bool ranks_before(const std::vector<double>& scores, ItemId a, ItemId b) {
  const double sa = scores[a.value], sb = scores[b.value];
  if (sa != sb) return sa > sb;
  return a < b;
}

/// Top-K uncollected items. `collected` must be sorted.
inline std::vector<ItemId> recommend_top_k(const ScoreVector& scores, std::span<const ItemId> collected,
                                           std::size_t k) {
  if (k == 0) throw std::invalid_argument("recommend_top_k: K must be positive");
  std::vector<ItemId> candidates;
  candidates.reserve(scores.scores.size());
  std::size_t next = 0;
  for (std::size_t a = 0; a < scores.scores.size(); ++a) {
    const ItemId item{a};
    while (next < collected.size() && collected[next] < item) ++next;
    if (next < collected.size() && collected[next] == item) continue;
    candidates.push_back(item);
  }
  const std::size_t n = std::min(k, candidates.size());
  auto cmp = [&](ItemId a, ItemId b) { return ranks_before(scores.scores, a, b); };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), cmp);
  candidates.resize(n);
  return candidates;
}

/// lambda * MD + (1 - lambda) * HC, elementwise.
template <ColumnProvider Md, ColumnProvider Hc>
ScoreVector hybrid_score(const Md& md_columns, const Hc& hc_columns, const BipartiteGraph& g, UserId user,
                         double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("hybrid_score: lambda outside [0,1]");
  auto md = score_user(md_columns, g, user);
  const auto hc = score_user(hc_columns, g, user);
  for (std::size_t a = 0; a < md.scores.size(); ++a) {
    md.scores[a] = lambda * md.scores[a] + (1.0 - lambda) * hc.scores[a];
  }
  return md;
}

}  // namespace dynrec

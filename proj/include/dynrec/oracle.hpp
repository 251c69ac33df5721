#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "dynrec/diffusion.hpp"
#include "dynrec/graph.hpp"

// Exact incremental maintenance of the dense MD matrix. This is the
// ground-truth comparator for the adaptive engines and is desk-scale only:
// it stores all |I|^2 entries.

namespace dynrec::oracle {

/// Classes of off-diagonal entries changed by adding edge (i, alpha).
///   TypeI   (beta, alpha), beta in Gamma_i
///   TypeII  (gamma, alpha), gamma co-rated with alpha by someone other than i
///   TypeIII (alpha, beta), beta in Gamma_i
///   TypeIV  (mu, beta), mu != beta both in Gamma_i
enum class ChangeType : std::uint8_t { TypeI, TypeII, TypeIII, TypeIV };

inline const char* to_string(ChangeType t) {
  switch (t) {
    case ChangeType::TypeI: return "I";
    case ChangeType::TypeII: return "II";
    case ChangeType::TypeIII: return "III";
    case ChangeType::TypeIV: return "IV";
  }
  return "?";
}

struct ChangeEntry {
  ItemId row;
  ItemId col;
  ChangeType type;
  double delta = 0.0;
};

struct ChangeLedger {
  std::vector<ChangeEntry> entries;
  bool has_deltas = false;

  std::vector<ChangeEntry> of_type(ChangeType t) const {
    std::vector<ChangeEntry> out;
    for (const auto& e : entries)
      if (e.type == t) out.push_back(e);
    return out;
  }
};

/// m_{row,col} evaluated directly: (1/k_col) * sum over common users j of 1/k_j.
inline double md_entry(const BipartiteGraph& g, ItemId row, ItemId col) {
  const auto k_col = g.item_degree(col);
  if (k_col == 0) return 0.0;
  const auto a = g.users_of(row);
  const auto b = g.users_of(col);
  double s = 0.0;
  std::size_t x = 0, y = 0;
  while (x < a.size() && y < b.size()) {
    if (a[x] < b[y]) {
      ++x;
    } else if (b[y] < a[x]) {
      ++y;
    } else {
      s += 1.0 / static_cast<double>(g.user_degree(a[x]));
      ++x;
      ++y;
    }
  }
  return s / static_cast<double>(k_col);
}

/// The whole matrix from the adjacency by enumerating co-rated item pairs per user.
inline DensePropMatrix recompute_bruteforce(const BipartiteGraph& g, std::size_t cap = kDefaultDenseItemCap) {
  check_dense_cap(g, cap);
  DensePropMatrix m(g.item_count());
  m.edge_count = g.edge_count();
  for (std::size_t u = 0; u < g.user_count(); ++u) {
    const auto items = g.items_of(UserId{u});
    const double w = 1.0 / static_cast<double>(items.size());
    for (ItemId row : items)
      for (ItemId col : items) m.at(row, col) += w;
  }
  for (std::size_t c = 0; c < g.item_count(); ++c) {
    const auto k = g.item_degree(ItemId{c});
    if (k == 0) continue;
    for (std::size_t r = 0; r < g.item_count(); ++r) m.at(r, c) /= static_cast<double>(k);
  }
  return m;
}

/// Positions (and types) of off-diagonal entries that change when edge
/// (user, alpha) is added to `before`. Both ids must be registered; a node of
/// degree zero plays the role of a new user or new item.
inline ChangeLedger classify_changes(const BipartiteGraph& before, UserId user, ItemId alpha) {
  ChangeLedger ledger;
  const auto gamma_i = before.items_of(user);

  for (ItemId beta : gamma_i)
    if (beta != alpha) ledger.entries.push_back({beta, alpha, ChangeType::TypeI});

  // Type II: co-rated with alpha, but not collected by user i.
  std::vector<char> seen(before.item_count(), 0);
  for (ItemId beta : gamma_i) seen[beta.value] = 1;
  seen[alpha.value] = 1;
  std::vector<ItemId> type2;
  for (UserId j : before.users_of(alpha)) {
    for (ItemId g : before.items_of(j)) {
      if (!seen[g.value]) {
        seen[g.value] = 1;
        type2.push_back(g);
      }
    }
  }
  std::sort(type2.begin(), type2.end());
  for (ItemId g : type2) ledger.entries.push_back({g, alpha, ChangeType::TypeII});

  for (ItemId beta : gamma_i)
    if (beta != alpha) ledger.entries.push_back({alpha, beta, ChangeType::TypeIII});

  for (ItemId mu : gamma_i) {
    if (mu == alpha) continue;
    for (ItemId beta : gamma_i)
      if (beta != alpha && beta != mu) ledger.entries.push_back({mu, beta, ChangeType::TypeIV});
  }
  return ledger;
}

/// Ledger with each delta evaluated from the four update rules against
/// the matrix of `before`.
inline ChangeLedger ledger_with_deltas(const DensePropMatrix& m_before, const BipartiteGraph& before,
                                       UserId user, ItemId alpha) {
  auto ledger = classify_changes(before, user, alpha);
  const double k_user_before = static_cast<double>(before.user_degree(user));
  const double k_user_after = k_user_before + 1.0;
  const double k_alpha_after = static_cast<double>(before.item_degree(alpha)) + 1.0;
  auto m_at = [&](ItemId r, ItemId c) { return r.value < m_before.size() && c.value < m_before.size() ? m_before.at(r, c) : 0.0; };

  for (auto& e : ledger.entries) {
    switch (e.type) {
      case ChangeType::TypeI:
        e.delta = -m_at(e.row, alpha) / k_alpha_after + 1.0 / (k_alpha_after * k_user_after);
        break;
      case ChangeType::TypeII:
        e.delta = -m_at(e.row, alpha) / k_alpha_after;
        break;
      case ChangeType::TypeIII: {
        const double k_beta = static_cast<double>(before.item_degree(e.col));
        e.delta = 1.0 / (k_beta * k_user_after);
        break;
      }
      case ChangeType::TypeIV: {
        const double k_beta = static_cast<double>(before.item_degree(e.col));
        e.delta = -1.0 / (k_beta * k_user_before * k_user_after);
        break;
      }
    }
  }
  ledger.has_deltas = true;
  return ledger;
}

namespace detail {

// Diagonal entry m_{beta,beta} after adding (user, alpha), evaluated on `before`.
inline double diagonal_after_add(const BipartiteGraph& before, UserId user, ItemId alpha, ItemId beta) {
  const double k_user_after = static_cast<double>(before.user_degree(user)) + 1.0;
  double s = 0.0;
  for (UserId j : before.users_of(beta)) {
    const double k_j = static_cast<double>(before.user_degree(j)) + (j == user ? 1.0 : 0.0);
    s += 1.0 / k_j;
  }
  double k_beta = static_cast<double>(before.item_degree(beta));
  if (beta == alpha) {
    s += 1.0 / k_user_after;
    k_beta += 1.0;
  }
  return s / k_beta;
}

}  // namespace detail

/// Advances `m` (exact for `before`) to the matrix of `before` + (user, alpha).
/// Off-diagonals follow the four update rules; affected diagonals are
/// re-evaluated directly. Returns the ledger that was applied.
inline ChangeLedger apply_add(DensePropMatrix& m, const BipartiteGraph& before, UserId user, ItemId alpha) {
  m.expand(before.item_count());
  auto ledger = ledger_with_deltas(m, before, user, alpha);
  for (const auto& e : ledger.entries) m.at(e.row, e.col) += e.delta;

  m.at(alpha, alpha) = detail::diagonal_after_add(before, user, alpha, alpha);
  for (ItemId beta : before.items_of(user)) m.at(beta, beta) = detail::diagonal_after_add(before, user, alpha, beta);
  m.edge_count = before.edge_count() + 1;
  return ledger;
}

/// Advances `m` (exact for `before`) past the removal of (user, alpha) by
/// re-evaluating column alpha, row alpha and the Gamma_i x Gamma_i block,
/// the only positions a removal can change.
inline void apply_remove(DensePropMatrix& m, const BipartiteGraph& before, UserId user, ItemId alpha) {
  if (!before.has_edge(user, alpha)) {
    throw MissingEdgeError("no edge (" + before.user_label(user) + ", " + before.item_label(alpha) + ")");
  }
  BipartiteGraph after = before;
  after.remove_edge(user, alpha);
  m.expand(after.item_count());

  const std::size_t n = after.item_count();
  for (std::size_t r = 0; r < n; ++r) m.at(ItemId{r}, alpha) = md_entry(after, ItemId{r}, alpha);
  for (std::size_t c = 0; c < n; ++c) m.at(alpha, ItemId{c}) = md_entry(after, alpha, ItemId{c});
  const auto gamma = after.items_of(user);
  for (ItemId mu : gamma)
    for (ItemId beta : gamma) m.at(mu, beta) = md_entry(after, mu, beta);
  m.edge_count = after.edge_count();
}

/// Graph plus exact matrix, advanced event by event.
class IncrementalOracle {
 public:
  explicit IncrementalOracle(std::size_t cap = kDefaultDenseItemCap) : cap_(cap) {}

  IncrementalOracle(BipartiteGraph g, std::size_t cap = kDefaultDenseItemCap)
      : graph_(std::move(g)), matrix_(recompute_bruteforce(graph_, cap)), cap_(cap) {}

  EdgeOutcome apply(const EdgeEvent& event) {
    if (event.op == EdgeOp::Remove) {
      auto u = graph_.find_user(event.user);
      auto i = graph_.find_item(event.item);
      if (!u || !i || !graph_.has_edge(*u, *i)) {
        throw MissingEdgeError("no edge (" + event.user + ", " + event.item + ")");
      }
      apply_remove(matrix_, graph_, *u, *i);
      graph_.remove_edge(*u, *i);
      last_ledger_ = {};
      return EdgeOutcome{*u, *i, false, false, false};
    }
    EdgeOutcome out;
    std::tie(out.user, out.new_user) = graph_.intern_user(event.user);
    std::tie(out.item, out.new_item) = graph_.intern_item(event.item);
    check_dense_cap(graph_, cap_);
    if (graph_.has_edge(out.user, out.item)) {
      out.duplicate = true;
      matrix_.expand(graph_.item_count());
      return out;
    }
    last_ledger_ = apply_add(matrix_, graph_, out.user, out.item);
    graph_.add_edge(out.user, out.item);
    return out;
  }

  const BipartiteGraph& graph() const noexcept { return graph_; }
  const DensePropMatrix& matrix() const noexcept { return matrix_; }
  const ChangeLedger& last_ledger() const noexcept { return last_ledger_; }

 private:
  BipartiteGraph graph_;
  DensePropMatrix matrix_;
  ChangeLedger last_ledger_;
  std::size_t cap_;
};

}  // namespace dynrec::oracle

#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dynrec/diffusion.hpp"

namespace dynrec {

/// Per-user evaluation sets at one checkpoint; all three sorted and disjoint.
struct UserEvalSets {
  std::vector<ItemId> test;       // T_i: held-out items present in the candidate universe
  std::vector<ItemId> collected;  // Gamma_i: training items so far
  std::vector<ItemId> rest;       // F_i: universe - Gamma_i - T_i
};

/// Builds the sets over the universe {0, ..., item_count-1}.
/// `collected` must be sorted; `test` may be unsorted and may contain
/// items outside the universe or inside `collected` (both dropped).
inline UserEvalSets make_eval_sets(std::size_t item_count, std::span<const ItemId> collected,
                                   std::vector<ItemId> test) {
  UserEvalSets s;
  s.collected.assign(collected.begin(), collected.end());
  std::sort(test.begin(), test.end());
  test.erase(std::unique(test.begin(), test.end()), test.end());
  for (ItemId t : test) {
    if (t.value < item_count && !std::binary_search(s.collected.begin(), s.collected.end(), t)) s.test.push_back(t);
  }
  s.rest.reserve(item_count);
  std::size_t ci = 0, ti = 0;
  for (std::size_t a = 0; a < item_count; ++a) {
    const ItemId item{a};
    while (ci < s.collected.size() && s.collected[ci] < item) ++ci;
    while (ti < s.test.size() && s.test[ti] < item) ++ti;
    if (ci < s.collected.size() && s.collected[ci] == item) continue;
    if (ti < s.test.size() && s.test[ti] == item) continue;
    s.rest.push_back(item);
  }
  return s;
}

/// Exact pair statistic: P(score of a random test item > score of a random
/// item from F), ties counted one half. Undefined when T or F is empty.
inline std::optional<double> auc_user(std::span<const double> scores, const UserEvalSets& sets) {
  if (sets.test.empty() || sets.rest.empty()) return std::nullopt;
  std::vector<double> negatives;
  negatives.reserve(sets.rest.size());
  for (ItemId f : sets.rest) negatives.push_back(scores[f.value]);
  std::sort(negatives.begin(), negatives.end());
  double wins = 0.0;
  for (ItemId t : sets.test) {
    const double s = scores[t.value];
    const auto [lo, hi] = std::equal_range(negatives.begin(), negatives.end(), s);
    wins += static_cast<double>(lo - negatives.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(sets.test.size()) * static_cast<double>(negatives.size()));
}

inline std::optional<double> auc_user(const ScoreVector& scores, const UserEvalSets& sets) {
  return auc_user(std::span<const double>(scores.scores), sets);
}

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Hits among the first K ranked items, over K and over |T|.
/// Uses at most the first K entries of `ranked`.
inline std::optional<PrecisionRecall> precision_recall_user(std::span<const ItemId> ranked,
                                                            const UserEvalSets& sets, std::size_t k) {
  if (sets.test.empty() || k == 0) return std::nullopt;
  std::size_t hits = 0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (std::binary_search(sets.test.begin(), sets.test.end(), ranked[r])) ++hits;
  }
  return PrecisionRecall{static_cast<double>(hits) / static_cast<double>(k),
                         static_cast<double>(hits) / static_cast<double>(sets.test.size())};
}

}  // namespace dynrec

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dynrec/graph.hpp"
#include "dynrec/rng.hpp"

// Seeded generators for property tests, the verify command and the
// synthetic acceptance streams.

namespace dynrec::synthetic {

inline std::string user_label(std::size_t i) { return "u" + std::to_string(i); }
inline std::string item_label(std::size_t i) { return "i" + std::to_string(i); }

/// Each of users x items pairs present with probability `density`.
inline BipartiteGraph random_graph(std::size_t users, std::size_t items, double density, Rng& rng) {
  BipartiteGraph g;
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t i = 0; i < items; ++i) {
      if (rng.chance(density)) g.add_edge(user_label(u), item_label(i));
    }
  }
  return g;
}

struct FuzzSpec {
  std::size_t max_users = 50;
  std::size_t max_items = 80;
  std::size_t events = 200;
  double removal_rate = 0.25;
};

/// Mixed add/remove stream over label pools of the given size. New users and
/// items appear as their labels are first drawn; removals always target an
/// edge present at that point of the stream.
inline std::vector<EdgeEvent> random_events(const FuzzSpec& spec, Rng& rng) {
  std::vector<EdgeEvent> out;
  std::vector<std::pair<std::size_t, std::size_t>> live;
  std::vector<char> present(spec.max_users * spec.max_items, 0);
  Timestamp ts = 0;
  while (out.size() < spec.events) {
    if (!live.empty() && rng.chance(spec.removal_rate)) {
      const auto k = rng.below(live.size());
      const auto [u, i] = live[k];
      live[k] = live.back();
      live.pop_back();
      present[u * spec.max_items + i] = 0;
      out.push_back({user_label(u), item_label(i), ts++, EdgeOp::Remove});
      continue;
    }
    const auto u = rng.below(spec.max_users);
    const auto i = rng.below(spec.max_items);
    if (present[u * spec.max_items + i]) continue;
    present[u * spec.max_items + i] = 1;
    live.emplace_back(u, i);
    out.push_back({user_label(u), item_label(i), ts++, EdgeOp::Add});
  }
  return out;
}

/// Time-ordered add stream with community structure, heavy-tailed user
/// activity, item births spread over the stream and preferential attachment
/// within a community. Births are scheduled against accepted edges, so the
/// average item degree is 1 / new_item_rate.
struct SparseStreamSpec {
  std::size_t users = 600;
  std::size_t edges = 30000;
  std::size_t communities = 12;
  double new_item_rate = 1.0 / 3.8;
  double in_community = 0.85;
  double preferential = 0.7;
  double activity_exponent = 1.0;  // Zipf exponent of user activity
  std::uint64_t seed = 7;
};

inline std::vector<EdgeEvent> sparse_stream(const SparseStreamSpec& spec) {
  Rng rng(spec.seed);
  // Heavy-tailed activity: user u's weight ~ 1 / (rank + 1)^s.
  std::vector<double> cumulative(spec.users);
  double total = 0.0;
  for (std::size_t u = 0; u < spec.users; ++u) {
    total += 1.0 / std::pow(static_cast<double>(u + 1), spec.activity_exponent);
    cumulative[u] = total;
  }
  // Shuffle ranks so that activity is not correlated with community.
  std::vector<std::size_t> rank_to_user(spec.users);
  for (std::size_t u = 0; u < spec.users; ++u) rank_to_user[u] = u;
  for (std::size_t i = spec.users; i > 1; --i) std::swap(rank_to_user[i - 1], rank_to_user[rng.below(i)]);

  std::vector<std::size_t> user_comm(spec.users);
  for (auto& c : user_comm) c = rng.below(spec.communities);

  std::vector<std::vector<std::size_t>> items_of_comm(spec.communities);
  std::vector<std::vector<std::size_t>> endpoints_of_comm(spec.communities);  // one entry per edge
  std::vector<std::vector<std::size_t>> user_items(spec.users);
  std::size_t item_count = 0;

  std::vector<EdgeEvent> out;
  out.reserve(spec.edges);
  std::size_t attempts = 0;
  while (out.size() < spec.edges && attempts < spec.edges * 50) {
    ++attempts;
    const double r = rng.unit() * total;
    const auto rank = static_cast<std::size_t>(std::lower_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
    const std::size_t u = rank_to_user[std::min(rank, spec.users - 1)];
    const std::size_t c = rng.chance(spec.in_community) ? user_comm[u] : rng.below(spec.communities);

    std::size_t item;
    const bool birth_due = static_cast<double>(item_count) < spec.new_item_rate * static_cast<double>(out.size() + 1);
    if (items_of_comm[c].empty() || birth_due) {
      item = item_count++;
      items_of_comm[c].push_back(item);
    } else if (rng.chance(spec.preferential) && !endpoints_of_comm[c].empty()) {
      item = endpoints_of_comm[c][rng.below(endpoints_of_comm[c].size())];
    } else {
      item = items_of_comm[c][rng.below(items_of_comm[c].size())];
    }
    auto& mine = user_items[u];
    if (std::find(mine.begin(), mine.end(), item) != mine.end()) continue;
    mine.push_back(item);
    endpoints_of_comm[c].push_back(item);
    out.push_back({user_label(u), item_label(item), static_cast<Timestamp>(out.size()), EdgeOp::Add});
  }
  return out;
}

}  // namespace dynrec::synthetic

#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <absl/strings/string_view.h>

#include "dynrec/types.hpp"

namespace dynrec {

enum class EdgeOp : std::uint8_t { Add, Remove };

struct EdgeEvent {
  std::string user;
  std::string item;
  Timestamp timestamp = 0;
  EdgeOp op = EdgeOp::Add;

  bool operator==(const EdgeEvent&) const = default;
};

struct EdgeOutcome {
  UserId user;
  ItemId item;
  bool new_user = false;
  bool new_item = false;
  bool duplicate = false;
};

/// Bijective external label <-> dense index map. Indices are never reused.
template <class Id>
class IdRegistry {
 public:
  std::optional<Id> find(std::string_view label) const {
    auto it = index_.find(absl::string_view(label.data(), label.size()));
    if (it == index_.end()) return std::nullopt;
    return Id{it->second};
  }

  /// Returns the id for `label`, registering it if needed.
  std::pair<Id, bool> intern(std::string_view label) {
    auto [it, inserted] =
        index_.try_emplace(std::string(label), static_cast<std::uint32_t>(labels_.size()));
    if (inserted) labels_.emplace_back(label);
    return {Id{it->second}, inserted};
  }

  const std::string& label(Id id) const {
    if (id.value >= labels_.size()) throw UnknownIdError("unknown id " + std::to_string(id.value));
    return labels_[id.value];
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool operator==(const IdRegistry& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  absl::flat_hash_map<std::string, std::uint32_t> index_;
};

/// Dynamic bipartite user-item network with binary adjacency.
///
/// Both directions of the adjacency are kept as sorted index lists, so a
/// diffusion pass walks memory sequentially and iteration order is
/// deterministic. Nodes whose degree falls to zero stay registered.
///
/// Single writer; concurrent reads are fine between mutations.
class BipartiteGraph {
 public:
  std::pair<UserId, bool> intern_user(std::string_view label) {
    auto r = users_.intern(label);
    if (r.second) items_of_user_.emplace_back();
    return r;
  }

  std::pair<ItemId, bool> intern_item(std::string_view label) {
    auto r = items_.intern(label);
    if (r.second) users_of_item_.emplace_back();
    return r;
  }

  std::optional<UserId> find_user(std::string_view label) const { return users_.find(label); }
  std::optional<ItemId> find_item(std::string_view label) const { return items_.find(label); }

  /// Adds edge (user, item), registering unseen labels. A duplicate edge
  /// leaves the graph untouched and is reported through the outcome.
  EdgeOutcome add_edge(std::string_view user, std::string_view item, Timestamp ts = 0) {
    EdgeOutcome out;
    std::tie(out.user, out.new_user) = intern_user(user);
    std::tie(out.item, out.new_item) = intern_item(item);
    out.duplicate = !add_edge(out.user, out.item);
    if (!out.duplicate) latest_timestamp_ = std::max(latest_timestamp_, ts);
    return out;
  }

  /// Returns false (and changes nothing) if the edge already exists.
  bool add_edge(UserId user, ItemId item) {
    check(user);
    check(item);
    auto& items = items_of_user_[user.value];
    auto pos = std::lower_bound(items.begin(), items.end(), item);
    if (pos != items.end() && *pos == item) return false;
    items.insert(pos, item);
    auto& users = users_of_item_[item.value];
    users.insert(std::lower_bound(users.begin(), users.end(), user), user);
    ++edge_count_;
    return true;
  }

  void remove_edge(UserId user, ItemId item) {
    check(user);
    check(item);
    auto& items = items_of_user_[user.value];
    auto pos = std::lower_bound(items.begin(), items.end(), item);
    if (pos == items.end() || *pos != item) {
      throw MissingEdgeError("no edge (" + users_.label(user) + ", " + items_.label(item) + ")");
    }
    items.erase(pos);
    auto& users = users_of_item_[item.value];
    users.erase(std::lower_bound(users.begin(), users.end(), user));
    --edge_count_;
  }

  EdgeOutcome remove_edge(std::string_view user, std::string_view item) {
    auto u = users_.find(user);
    auto i = items_.find(item);
    if (!u || !i) {
      throw MissingEdgeError("no edge (" + std::string(user) + ", " + std::string(item) + ")");
    }
    remove_edge(*u, *i);
    return EdgeOutcome{*u, *i, false, false, false};
  }

  /// Applies an add or remove event.
  EdgeOutcome apply(const EdgeEvent& event) {
    if (event.op == EdgeOp::Add) return add_edge(event.user, event.item, event.timestamp);
    return remove_edge(event.user, event.item);
  }

  bool has_edge(UserId user, ItemId item) const {
    if (user.value >= items_of_user_.size() || item.value >= users_of_item_.size()) return false;
    const auto& items = items_of_user_[user.value];
    const auto& users = users_of_item_[item.value];
    if (items.size() <= users.size()) return std::binary_search(items.begin(), items.end(), item);
    return std::binary_search(users.begin(), users.end(), user);
  }

  std::span<const ItemId> items_of(UserId user) const {
    check(user);
    return items_of_user_[user.value];
  }

  std::span<const UserId> users_of(ItemId item) const {
    check(item);
    return users_of_item_[item.value];
  }

  std::size_t user_degree(UserId user) const { return items_of(user).size(); }
  std::size_t item_degree(ItemId item) const { return users_of(item).size(); }

  std::size_t user_count() const noexcept { return items_of_user_.size(); }
  std::size_t item_count() const noexcept { return users_of_item_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  Timestamp latest_timestamp() const noexcept { return latest_timestamp_; }

  const std::string& user_label(UserId user) const { return users_.label(user); }
  const std::string& item_label(ItemId item) const { return items_.label(item); }
  const IdRegistry<UserId>& users() const noexcept { return users_; }
  const IdRegistry<ItemId>& items() const noexcept { return items_; }

  /// Full scan of the dual adjacency and degree bookkeeping.
  /// Throws InconsistencyError describing the first violation.
  void audit() const {
    std::size_t from_users = 0;
    for (std::size_t u = 0; u < items_of_user_.size(); ++u) {
      const auto& items = items_of_user_[u];
      if (!std::is_sorted(items.begin(), items.end()) ||
          std::adjacent_find(items.begin(), items.end()) != items.end()) {
        throw InconsistencyError("item list of user " + users_.label(UserId{u}) + " not strictly sorted");
      }
      for (ItemId it : items) {
        if (it.value >= users_of_item_.size()) throw InconsistencyError("dangling item index");
        const auto& users = users_of_item_[it.value];
        if (!std::binary_search(users.begin(), users.end(), UserId{u})) {
          throw InconsistencyError("edge (" + users_.label(UserId{u}) + ", " + items_.label(it) +
                                   ") missing from item side");
        }
      }
      from_users += items.size();
    }
    std::size_t from_items = 0;
    for (const auto& users : users_of_item_) {
      if (!std::is_sorted(users.begin(), users.end()) ||
          std::adjacent_find(users.begin(), users.end()) != users.end()) {
        throw InconsistencyError("user list not strictly sorted");
      }
      from_items += users.size();
    }
    if (from_users != edge_count_ || from_items != edge_count_) {
      throw InconsistencyError("degree sums disagree with edge count");
    }
  }

  bool operator==(const BipartiteGraph& other) const {
    return users_ == other.users_ && items_ == other.items_ && edge_count_ == other.edge_count_ &&
           items_of_user_ == other.items_of_user_ && users_of_item_ == other.users_of_item_;
  }

  // Restores raw state; used by snapshot loading. Call audit() afterwards.
  static BipartiteGraph from_parts(const std::vector<std::string>& user_labels,
                                   const std::vector<std::string>& item_labels,
                                   const std::vector<std::vector<ItemId>>& items_of_user,
                                   Timestamp latest) {
    BipartiteGraph g;
    for (const auto& l : user_labels) g.intern_user(l);
    for (const auto& l : item_labels) g.intern_item(l);
    if (items_of_user.size() != g.user_count()) throw InconsistencyError("adjacency/user count mismatch");
    for (std::size_t u = 0; u < items_of_user.size(); ++u) {
      for (ItemId it : items_of_user[u]) {
        if (it.value >= g.item_count() || !g.add_edge(UserId{u}, it)) {
          throw InconsistencyError("invalid adjacency entry");
        }
      }
    }
    g.latest_timestamp_ = latest;
    return g;
  }

 private:
  void check(UserId user) const {
    if (user.value >= items_of_user_.size()) throw UnknownIdError("unknown user index " + std::to_string(user.value));
  }
  void check(ItemId item) const {
    if (item.value >= users_of_item_.size()) throw UnknownIdError("unknown item index " + std::to_string(item.value));
  }

  IdRegistry<UserId> users_;
  IdRegistry<ItemId> items_;
  std::vector<std::vector<ItemId>> items_of_user_;
  std::vector<std::vector<UserId>> users_of_item_;
  std::size_t edge_count_ = 0;
  Timestamp latest_timestamp_ = 0;
};

}  // namespace dynrec

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "dynrec/graph.hpp"
#include "dynrec/rng.hpp"
#include "support.hpp"

using namespace dynrec;
using dynrec::test::make_g4;
using dynrec::test::make_g5;

TEST(Graph, FirstEdgeRegistersBothEndpoints) {
  BipartiteGraph g;
  const auto out = g.add_edge("u1", "a", 10);
  EXPECT_TRUE(out.new_user);
  EXPECT_TRUE(out.new_item);
  EXPECT_FALSE(out.duplicate);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.user_degree(out.user), 1u);
  EXPECT_EQ(g.item_degree(out.item), 1u);
  EXPECT_EQ(g.latest_timestamp(), 10);
}

TEST(Graph, DuplicateAddIsReportedAndIgnored) {
  auto g = make_g4();
  const auto before = g;
  const auto out = g.add_edge("u1", "a");
  EXPECT_TRUE(out.duplicate);
  EXPECT_FALSE(out.new_user);
  EXPECT_EQ(g.edge_count(), 4u);
  EXPECT_EQ(g, before);
}

TEST(Graph, AddToExistingNodes) {
  auto g = make_g4();
  const auto out = g.add_edge("u2", "a");
  EXPECT_FALSE(out.new_user);
  EXPECT_FALSE(out.new_item);
  EXPECT_FALSE(out.duplicate);
  EXPECT_EQ(g.edge_count(), 5u);
  EXPECT_EQ(g.item_degree(out.item), 2u);
  EXPECT_EQ(g.user_degree(out.user), 3u);
}

TEST(Graph, RemoveIsInverseOfAdd) {
  auto g = make_g5();
  g.remove_edge("u2", "a");
  EXPECT_EQ(g, make_g4());
}

TEST(Graph, DegreeZeroItemStaysRegistered) {
  auto g = make_g4();
  g.remove_edge("u1", "a");
  const auto a = g.find_item("a");
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(g.item_degree(*a), 0u);
  EXPECT_EQ(g.item_count(), 3u);
  EXPECT_TRUE(g.users_of(*a).empty());
}

TEST(Graph, RemovingAbsentEdgeThrows) {
  auto g = make_g4();
  EXPECT_THROW(g.remove_edge("u1", "c"), MissingEdgeError);
  EXPECT_THROW(g.remove_edge("nobody", "c"), MissingEdgeError);
  EXPECT_EQ(g, make_g4());
}

TEST(Graph, NeighborLists) {
  const auto g = make_g4();
  const auto users_b = g.users_of(*g.find_item("b"));
  ASSERT_EQ(users_b.size(), 2u);
  EXPECT_EQ(g.user_label(users_b[0]), "u1");
  EXPECT_EQ(g.user_label(users_b[1]), "u2");
  const auto items_u2 = g.items_of(*g.find_user("u2"));
  ASSERT_EQ(items_u2.size(), 2u);
  EXPECT_EQ(g.item_label(items_u2[0]), "b");
  EXPECT_EQ(g.item_label(items_u2[1]), "c");
}

TEST(Graph, FreshItemHasNoNeighbors) {
  BipartiteGraph g;
  const auto [id, created] = g.intern_item("lonely");
  EXPECT_TRUE(created);
  EXPECT_TRUE(g.users_of(id).empty());
}

TEST(Graph, UnknownIdsThrow) {
  const auto g = make_g4();
  EXPECT_THROW(g.users_of(ItemId{7u}), UnknownIdError);
  EXPECT_THROW(g.items_of(UserId{7u}), UnknownIdError);
  EXPECT_THROW(g.item_label(ItemId{7u}), UnknownIdError);
}

TEST(Graph, AuditDetectsNothingOnValidGraph) { EXPECT_NO_THROW(make_g5().audit()); }

// Random add/remove sequences keep both adjacency directions and the degree
// sums consistent; checked against a plain std::set model.
TEST(GraphProperty, RandomSequencesMatchSetModel) {
  Rng rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    BipartiteGraph g;
    std::set<std::pair<std::string, std::string>> model;
    for (int step = 0; step < 300; ++step) {
      const auto u = "u" + std::to_string(rng.below(12));
      const auto i = "i" + std::to_string(rng.below(15));
      if (rng.chance(0.35) && model.count({u, i})) {
        g.remove_edge(u, i);
        model.erase({u, i});
      } else {
        const auto out = g.add_edge(u, i);
        EXPECT_EQ(out.duplicate, model.count({u, i}) == 1);
        model.insert({u, i});
      }
    }
    ASSERT_NO_THROW(g.audit());
    EXPECT_EQ(g.edge_count(), model.size());
    std::size_t user_sum = 0, item_sum = 0;
    for (std::size_t u = 0; u < g.user_count(); ++u) user_sum += g.user_degree(UserId{u});
    for (std::size_t i = 0; i < g.item_count(); ++i) item_sum += g.item_degree(ItemId{i});
    EXPECT_EQ(user_sum, model.size());
    EXPECT_EQ(item_sum, model.size());
    for (const auto& [u, i] : model) EXPECT_TRUE(g.has_edge(*g.find_user(u), *g.find_item(i)));
  }
}

TEST(GraphProperty, AddThenRemoveRestoresState) {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    BipartiteGraph g;
    for (int e = 0; e < 40; ++e) g.add_edge("u" + std::to_string(rng.below(8)), "i" + std::to_string(rng.below(10)));
    // Only pairs whose labels already exist, so registries are unchanged.
    const auto u = "u" + std::to_string(rng.below(8));
    const auto i = "i" + std::to_string(rng.below(10));
    if (!g.find_user(u) || !g.find_item(i) || g.has_edge(*g.find_user(u), *g.find_item(i))) continue;
    const auto before = g;
    g.add_edge(u, i);
    g.remove_edge(u, i);
    EXPECT_EQ(g, before);
  }
}

#include <gtest/gtest.h>

#include "dynrec/diffusion.hpp"
#include "dynrec/rng.hpp"
#include "dynrec/synthetic.hpp"
#include "support.hpp"

using namespace dynrec;
using dynrec::test::item;
using dynrec::test::make_g4;
using dynrec::test::make_g5;
using dynrec::test::user;

constexpr double kTol = 1e-12;

TEST(Diffusion, MdColumnsOnG4) {
  const auto g = make_g4();
  const auto col_a = md_from_item(g, item(g, "a"));
  EXPECT_EQ(col_a.entries.size(), 2u);
  EXPECT_NEAR(col_a.at(item(g, "a")), 0.5, kTol);
  EXPECT_NEAR(col_a.at(item(g, "b")), 0.5, kTol);

  const auto col_b = md_from_item(g, item(g, "b"));
  EXPECT_NEAR(col_b.at(item(g, "a")), 0.25, kTol);
  EXPECT_NEAR(col_b.at(item(g, "b")), 0.5, kTol);
  EXPECT_NEAR(col_b.at(item(g, "c")), 0.25, kTol);
  EXPECT_NEAR(col_b.sum(), 1.0, kTol);
}

TEST(Diffusion, SingleEdgeReturnsEverythingToSource) {
  BipartiteGraph g;
  g.add_edge("u1", "a");
  const auto col = md_from_item(g, item(g, "a"));
  ASSERT_EQ(col.entries.size(), 1u);
  EXPECT_EQ(col.entries[0].second, 1.0);
}

TEST(Diffusion, DegreeZeroSourceIsDegenerate) {
  BipartiteGraph g;
  const auto [id, _] = g.intern_item("x");
  EXPECT_TRUE(md_from_item(g, id).degenerate);
  EXPECT_TRUE(hc_from_item(g, id).degenerate);
  EXPECT_TRUE(md_from_item(g, id).entries.empty());
}

TEST(Diffusion, HcRowsOnFixtures) {
  const auto g4 = make_g4();
  const auto r = hc_from_item(g4, item(g4, "a"));
  EXPECT_EQ(r.entries.size(), 2u);
  EXPECT_NEAR(r.at(item(g4, "a")), 0.5, kTol);
  EXPECT_NEAR(r.at(item(g4, "b")), 0.25, kTol);

  const auto g5 = make_g5();
  const auto r5 = hc_from_item(g5, item(g5, "a"));
  EXPECT_NEAR(r5.at(item(g5, "a")), 5.0 / 12, kTol);
  EXPECT_NEAR(r5.at(item(g5, "b")), 5.0 / 12, kTol);
  EXPECT_NEAR(r5.at(item(g5, "c")), 1.0 / 3, kTol);
}

TEST(Diffusion, DenseMatrixOnG4) {
  const auto g = make_g4();
  const auto m = build_dense_md(g);
  const double expected[3][3] = {{0.5, 0.25, 0.0}, {0.5, 0.5, 0.5}, {0.0, 0.25, 0.5}};
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(m.at(r, c), expected[r][c], kTol) << r << "," << c;
  EXPECT_EQ(build_dense_hc(g), m.transposed());
}

TEST(Diffusion, G5ColumnsConserveMass) {
  const auto m = build_dense_md(make_g5());
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(m.column_sum(c), 1.0, kTol);
}

TEST(Diffusion, DenseCapEnforced) {
  const auto g = make_g4();
  EXPECT_THROW(build_dense_md(g, 2), SizeLimitError);
  EXPECT_NO_THROW(build_dense_md(g, 3));
}

TEST(Diffusion, ScoreUserOnG4) {
  const auto g = make_g4();
  const auto m = build_dense_md(g);
  const auto s1 = score_user(DenseColumns{m}, g, user(g, "u1"));
  EXPECT_NEAR(s1[item(g, "a")], 0.75, kTol);
  EXPECT_NEAR(s1[item(g, "b")], 1.0, kTol);
  EXPECT_NEAR(s1[item(g, "c")], 0.25, kTol);
  const auto s2 = score_user(DenseColumns{m}, g, user(g, "u2"));
  EXPECT_NEAR(s2[item(g, "a")], 0.25, kTol);
  EXPECT_NEAR(s2[item(g, "b")], 1.0, kTol);
  EXPECT_NEAR(s2[item(g, "c")], 0.75, kTol);
}

TEST(Diffusion, EmptyProfileScoresZero) {
  auto g = make_g4();
  const auto [u3, _] = g.intern_user("u3");
  const auto s = score_user(GraphMdColumns{g}, g, u3);
  EXPECT_TRUE(s.degenerate);
  for (double v : s.scores) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(mass_diffusion_scores(g, u3).degenerate);
}

TEST(Diffusion, UserDiffusionMatchesMatrixScoring) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = synthetic::random_graph(30, 40, 0.12, rng);
    const auto m = build_dense_md(g);
    for (std::size_t u = 0; u < g.user_count(); ++u) {
      const auto a = score_user(DenseColumns{m}, g, UserId{u});
      const auto b = mass_diffusion_scores(g, UserId{u});
      const auto c = score_user(DenseRows{m}, g, UserId{u});
      const auto d = heat_conduction_scores(g, UserId{u});
      for (std::size_t i = 0; i < g.item_count(); ++i) {
        EXPECT_NEAR(a.scores[i], b.scores[i], kTol);
        EXPECT_NEAR(c.scores[i], d.scores[i], kTol);
      }
    }
  }
}

TEST(Diffusion, TopKExcludesCollectedAndBreaksTiesById) {
  const auto g = make_g4();
  const auto u1 = user(g, "u1");
  const auto s = score_user(GraphMdColumns{g}, g, u1);
  const auto top = recommend_top_k(s, g.items_of(u1), 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(g.item_label(top[0]), "c");

  ScoreVector zeros{UserId{0u}, 0, std::vector<double>(3, 0.0), false};
  const auto tied = recommend_top_k(zeros, {}, 2);
  ASSERT_EQ(tied.size(), 2u);
  EXPECT_EQ(tied[0], ItemId{0u});
  EXPECT_EQ(tied[1], ItemId{1u});

  EXPECT_EQ(recommend_top_k(zeros, {}, 10).size(), 3u);
  EXPECT_THROW(recommend_top_k(zeros, {}, 0), std::invalid_argument);
}

TEST(Diffusion, HybridEndpointsAndMidpoint) {
  const auto g = make_g4();
  const auto m = build_dense_md(g);
  const auto u1 = user(g, "u1");
  const auto md = score_user(DenseColumns{m}, g, u1);
  const auto hc = score_user(DenseRows{m}, g, u1);
  EXPECT_EQ(hybrid_score(DenseColumns{m}, DenseRows{m}, g, u1, 1.0).scores, md.scores);
  EXPECT_EQ(hybrid_score(DenseColumns{m}, DenseRows{m}, g, u1, 0.0).scores, hc.scores);
  // HC scores for u1 on G4 are (1, 3/4, 1/2); midpoint with MD (3/4, 1, 1/4).
  const auto mid = hybrid_score(DenseColumns{m}, DenseRows{m}, g, u1, 0.5);
  EXPECT_NEAR(mid[item(g, "a")], 7.0 / 8, kTol);
  EXPECT_NEAR(mid[item(g, "b")], 7.0 / 8, kTol);
  EXPECT_NEAR(mid[item(g, "c")], 3.0 / 8, kTol);
  EXPECT_THROW(hybrid_score(DenseColumns{m}, DenseRows{m}, g, u1, 1.5), std::invalid_argument);
}

// Properties over random graphs (<= 50 users, <= 80 items).
TEST(DiffusionProperty, ColumnsMatchDenseAndDefinition) {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto users = 5 + rng.below(46);
    const auto items = 5 + rng.below(76);
    const auto g = synthetic::random_graph(users, items, 0.03 + 0.2 * rng.unit(), rng);
    const auto m = build_dense_md(g);
    const auto ref = dynrec::test::reference_matrix(g);
    EXPECT_LE(dynrec::test::max_abs_diff(m, ref), kTol);
    DiffusionWorkspace ws;
    for (std::size_t a = 0; a < g.item_count(); ++a) {
      const ItemId alpha{a};
      const auto col = md_from_item(g, alpha, ws);
      const auto row = hc_from_item(g, alpha, ws);
      if (g.item_degree(alpha) > 0) EXPECT_NEAR(col.sum(), 1.0, kTol);
      for (std::size_t b = 0; b < g.item_count(); ++b) {
        const ItemId beta{b};
        EXPECT_NEAR(col.at(beta), m.at(beta, alpha), kTol);
        EXPECT_GE(m.at(beta, alpha), 0.0);
        EXPECT_LE(m.at(beta, alpha), 1.0);
        // Reversibility of the two passes, bit for bit.
        EXPECT_EQ(row.at(beta), md_from_item(g, beta, ws).at(alpha));
      }
      // Locality: support only on co-rated items.
      for (const auto& [beta, v] : col.entries) {
        bool shared = false;
        for (UserId j : g.users_of(alpha))
          for (ItemId x : g.items_of(j)) shared |= (x == beta);
        EXPECT_TRUE(shared);
        EXPECT_GT(v, 0.0);
      }
    }
  }
}

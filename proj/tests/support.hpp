#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dynrec/diffusion.hpp"
#include "dynrec/graph.hpp"

namespace dynrec::test {

// G4: users {u1,u2}, items {a,b,c}, edges (u1,a) (u1,b) (u2,b) (u2,c).
inline BipartiteGraph make_g4() {
  BipartiteGraph g;
  g.add_edge("u1", "a");
  g.add_edge("u1", "b");
  g.add_edge("u2", "b");
  g.add_edge("u2", "c");
  return g;
}

// G5 = G4 + (u2,a).
inline BipartiteGraph make_g5() {
  auto g = make_g4();
  g.add_edge("u2", "a");
  return g;
}

inline ItemId item(const BipartiteGraph& g, const std::string& label) { return *g.find_item(label); }
inline UserId user(const BipartiteGraph& g, const std::string& label) { return *g.find_user(label); }

/// Propagation matrix straight from the definition, written without any
/// library code: a plain edge set, degree counts, and a triple loop.
/// Indexed by the graph's internal item order.
inline std::vector<std::vector<double>> reference_matrix(const BipartiteGraph& g) {
  const std::size_t n = g.item_count();
  std::set<std::pair<std::size_t, std::size_t>> edges;
  std::map<std::size_t, double> k_user, k_item;
  for (std::size_t u = 0; u < g.user_count(); ++u) {
    for (ItemId it : g.items_of(UserId{u})) {
      edges.emplace(u, it.value);
      k_user[u] += 1;
      k_item[it.value] += 1;
    }
  }
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (k_item[b] == 0) continue;
      long double s = 0;
      for (std::size_t u = 0; u < g.user_count(); ++u) {
        if (edges.count({u, a}) && edges.count({u, b})) s += 1.0L / k_user[u];
      }
      m[a][b] = static_cast<double>(s / k_item[b]);
    }
  }
  return m;
}

inline double max_abs_diff(const DensePropMatrix& m, const std::vector<std::vector<double>>& ref) {
  double worst = 0.0;
  for (std::size_t r = 0; r < ref.size(); ++r)
    for (std::size_t c = 0; c < ref.size(); ++c) worst = std::max(worst, std::abs(m.at(r, c) - ref[r][c]));
  return worst;
}

}  // namespace dynrec::test

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dynrec/adaptive.hpp"
#include "dynrec/oracle.hpp"
#include "dynrec/synthetic.hpp"

// Desk-scale self check: the exact incremental matrix against a full
// recompute, and the second-order store's residue against the update rules.

namespace dynrec::verify {

struct VerifySpec {
  std::size_t trials = 5;
  synthetic::FuzzSpec fuzz{};
  std::uint64_t seed = 42;
  double tolerance = kExactTolerance;
};

struct VerifySummary {
  std::size_t events = 0;
  double oracle_max_deviation = 0.0;
  double aas_max_error = 0.0;
  double aas_max_magnitude_mismatch = 0.0;  // |observed| vs 1/(k_beta k_i k_i')
  std::size_t aas_positions_outside_type4 = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

inline double max_abs_diff(const DensePropMatrix& a, const DensePropMatrix& b) {
  double worst = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < a.size(); ++c) worst = std::max(worst, std::abs(a.at(r, c) - b.at(r, c)));
  return worst;
}

/// Replays `spec.trials` random event streams. For every event: the oracle
/// is compared with a brute-force recompute, and an AAS store initialised
/// exactly on the pre-event graph is advanced by that single event and its
/// residue audited.
inline VerifySummary run_verify(const VerifySpec& spec) {
  VerifySummary out;
  Rng rng(spec.seed);
  for (std::size_t t = 0; t < spec.trials; ++t) {
    oracle::IncrementalOracle o;
    const auto events = synthetic::random_events(spec.fuzz, rng);
    for (const auto& ev : events) {
      BipartiteGraph g = o.graph();
      const std::size_t k_before = g.find_user(ev.user) ? g.user_degree(*g.find_user(ev.user)) : 0;
      SparseColumnStore store(Approximation::SecondOrder);
      bulk_initialize(store, g);

      o.apply(ev);
      ++out.events;
      const auto truth = oracle::recompute_bruteforce(o.graph());
      out.oracle_max_deviation = std::max(out.oracle_max_deviation, max_abs_diff(o.matrix(), truth));

      const auto outcome = apply_event(store, g, ev);
      const auto rep = error_report(store, truth, nullptr, spec.tolerance);
      out.aas_max_error = std::max(out.aas_max_error, rep.max_abs_error);
      const auto profile = g.items_of(outcome.user);
      const auto k_after = profile.size();
      auto in_profile = [&](ItemId x) {
        return x != outcome.item && std::binary_search(profile.begin(), profile.end(), x);
      };
      for (const auto& p : rep.positions) {
        if (p.row == p.col || !in_profile(p.row) || !in_profile(p.col)) {
          ++out.aas_positions_outside_type4;
          continue;
        }
        const double predicted = 1.0 / (static_cast<double>(g.item_degree(p.col)) * static_cast<double>(k_before) *
                                         static_cast<double>(k_after));
        out.aas_max_magnitude_mismatch =
            std::max(out.aas_max_magnitude_mismatch, std::abs(std::abs(p.error) - predicted));
      }
    }
  }
  if (out.oracle_max_deviation > spec.tolerance) out.failures.push_back("oracle deviates from brute-force recompute");
  if (out.aas_positions_outside_type4 > 0) out.failures.push_back("AAS error outside Type IV positions");
  if (out.aas_max_magnitude_mismatch > spec.tolerance) out.failures.push_back("AAS residue magnitude mismatch");
  return out;
}

}  // namespace dynrec::verify

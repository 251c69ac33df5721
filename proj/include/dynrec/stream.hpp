#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynrec/adaptive.hpp"
#include "dynrec/diffusion.hpp"
#include "dynrec/graph.hpp"
#include "dynrec/metrics.hpp"
#include "dynrec/rng.hpp"

namespace dynrec {

// ---------------------------------------------------------------------------
// Train/test split

struct SplitSpec {
  double test_fraction = 0.10;
  std::uint64_t seed = 42;
};

struct Split {
  std::vector<EdgeEvent> train;  // sorted by (timestamp, input order)
  std::vector<EdgeEvent> test;
};

/// max(1, round(fraction * n)) for n > 0.
inline std::size_t test_size_for(std::size_t n, double fraction) {
  if (n == 0) return 0;
  const auto rounded = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(rounded, 1, n);
}

/// Uniform random partition of add events into train and test.
inline Split split_edges(const std::vector<EdgeEvent>& events, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  for (const auto& e : events) {
    if (e.op != EdgeOp::Add) throw ConfigError("split_edges expects add events only");
  }
  const std::size_t n = events.size();
  const std::size_t n_test = test_size_for(n, spec.test_fraction);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  // Partial Fisher-Yates: the first n_test slots become the test set.
  for (std::size_t i = 0; i < n_test; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }
  std::vector<char> is_test(n, 0);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = 1;

  Split out;
  out.train.reserve(n - n_test);
  out.test.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? out.test : out.train).push_back(events[i]);
  std::stable_sort(out.train.begin(), out.train.end(),
                   [](const EdgeEvent& a, const EdgeEvent& b) { return a.timestamp < b.timestamp; });
  return out;
}

// ---------------------------------------------------------------------------
// Streaming evaluation

enum class Algorithm : std::uint8_t { Static, FirstOrder, SecondOrder, Random };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Static: return "static";
    case Algorithm::FirstOrder: return "aaf";
    case Algorithm::SecondOrder: return "aas";
    case Algorithm::Random: return "random";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& name) {
  if (name == "static") return Algorithm::Static;
  if (name == "aaf") return Algorithm::FirstOrder;
  if (name == "aas") return Algorithm::SecondOrder;
  if (name == "random") return Algorithm::Random;
  throw ConfigError("unknown algorithm '" + name + "'");
}

/// How the first `start_threshold` edges reach the adaptive stores.
enum class WarmStart : std::uint8_t {
  ExactInit,  // graph only, then one exact bulk load of every column
  Replay,     // adaptive updates from the empty graph
};

struct StreamConfig {
  std::vector<Algorithm> algorithms{Algorithm::Static, Algorithm::FirstOrder, Algorithm::SecondOrder};
  std::size_t checkpoint_interval = 5000;
  std::size_t start_threshold = 5000;
  std::vector<std::size_t> ks{100, 300, 500};
  WarmStart warm_start = WarmStart::ExactInit;
  std::uint64_t seed = 42;  // drives the random scorer
  std::optional<double> hybrid_lambda;
  std::size_t dense_cap = kDefaultDenseItemCap;
  bool measure_time = true;

  void validate() const {
    if (algorithms.empty()) throw ConfigError("no algorithms selected");
    if (checkpoint_interval == 0) throw ConfigError("checkpoint interval must be positive");
    if (start_threshold == 0) throw ConfigError("start threshold must be positive");
    if (ks.empty()) throw ConfigError("at least one K is required");
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (ks[i] == 0) throw ConfigError("K must be positive");
      if (i > 0 && ks[i] <= ks[i - 1]) throw ConfigError("Ks must be strictly ascending");
    }
    if (hybrid_lambda && !(*hybrid_lambda >= 0.0 && *hybrid_lambda <= 1.0)) {
      throw ConfigError("lambda must lie in [0, 1]");
    }
    if (dense_cap == 0) throw ConfigError("dense cap must be positive");
    for (std::size_t i = 0; i < algorithms.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (algorithms[i] == algorithms[j]) throw ConfigError("algorithm listed twice");
  }
};

struct AlgorithmMetrics {
  Algorithm algorithm = Algorithm::Static;
  double auc = 0.0;
  std::vector<double> precision;  // one per K
  std::vector<double> recall;
  std::size_t users_evaluated = 0;
  std::size_t users_excluded = 0;
  double us_per_event = 0.0;  // wall clock; excluded from same_metrics

  bool same_metrics(const AlgorithmMetrics& o) const {
    return algorithm == o.algorithm && auc == o.auc && precision == o.precision && recall == o.recall &&
           users_evaluated == o.users_evaluated && users_excluded == o.users_excluded;
  }
};

struct CheckpointReport {
  std::size_t edges_fed = 0;
  std::vector<AlgorithmMetrics> results;

  const AlgorithmMetrics& at(Algorithm a) const {
    for (const auto& r : results)
      if (r.algorithm == a) return r;
    throw std::out_of_range(std::string("no results for ") + to_string(a));
  }

  bool same_metrics(const CheckpointReport& o) const {
    if (edges_fed != o.edges_fed || results.size() != o.results.size()) return false;
    for (std::size_t i = 0; i < results.size(); ++i)
      if (!results[i].same_metrics(o.results[i])) return false;
    return true;
  }
};

inline bool same_metrics(const std::vector<CheckpointReport>& a, const std::vector<CheckpointReport>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].same_metrics(b[i])) return false;
  return true;
}

/// Everything needed to resume a stream mid-way.
struct EngineState {
  BipartiteGraph graph;
  std::vector<SparseColumnStore> stores;
  std::size_t position = 0;         // training events fed
  std::size_t next_checkpoint = 0;  // edges_fed of the next report
  bool warm_done = false;
};

/// Feeds a time-ordered training stream to every selected engine and
/// evaluates them at fixed intervals. All engines share one graph; the
/// adaptive ones each own a column store.
class StreamRunner {
 public:
  StreamRunner(StreamConfig cfg, const std::vector<EdgeEvent>& train, const std::vector<EdgeEvent>& test)
      : cfg_(std::move(cfg)), train_(&train) {
    cfg_.validate();
    for (Algorithm a : cfg_.algorithms) {
      if (a == Algorithm::FirstOrder) stores_.emplace_back(Approximation::FirstOrder);
      if (a == Algorithm::SecondOrder) stores_.emplace_back(Approximation::SecondOrder);
    }
    timers_.assign(stores_.size(), 0.0);
    next_checkpoint_ = cfg_.start_threshold;
    for (const auto& e : test) test_by_user_[e.user].push_back(e.item);
  }

  static StreamRunner resume(StreamConfig cfg, const std::vector<EdgeEvent>& train,
                             const std::vector<EdgeEvent>& test, EngineState state) {
    StreamRunner r(std::move(cfg), train, test);
    if (state.stores.size() != r.stores_.size()) throw InconsistencyError("snapshot store set does not match config");
    for (std::size_t i = 0; i < state.stores.size(); ++i) {
      if (state.stores[i].approximation() != r.stores_[i].approximation()) {
        throw InconsistencyError("snapshot store order does not match config");
      }
    }
    if (state.position > train.size()) throw InconsistencyError("snapshot position beyond training stream");
    state.graph.audit();
    r.graph_ = std::move(state.graph);
    r.stores_ = std::move(state.stores);
    r.position_ = state.position;
    r.next_checkpoint_ = state.next_checkpoint;
    r.warm_done_ = state.warm_done;
    return r;
  }

  EngineState state() const { return EngineState{graph_, stores_, position_, next_checkpoint_, warm_done_}; }

  const StreamConfig& config() const noexcept { return cfg_; }
  const BipartiteGraph& graph() const noexcept { return graph_; }
  std::size_t position() const noexcept { return position_; }
  std::size_t next_checkpoint() const noexcept { return next_checkpoint_; }
  bool done() const noexcept { return next_checkpoint_ > train_->size(); }

  const SparseColumnStore* store(Approximation a) const {
    for (const auto& s : stores_)
      if (s.approximation() == a) return &s;
    return nullptr;
  }

  /// Feeds events up to the next checkpoint and evaluates there.
  std::optional<CheckpointReport> advance() {
    if (done()) return std::nullopt;
    while (position_ < next_checkpoint_) feed_one();
    finish_warm_start_if_due();
    audit();
    auto report = evaluate();
    next_checkpoint_ += cfg_.checkpoint_interval;
    reset_timers();
    return report;
  }

  std::vector<CheckpointReport> run() {
    std::vector<CheckpointReport> out;
    while (auto r = advance()) out.push_back(std::move(*r));
    return out;
  }

  /// Feeds events up to `target` without evaluating. Checkpoints passed on the
  /// way are skipped; one landing exactly on `target` is still pending.
  void seek(std::size_t target) {
    target = std::min(target, train_->size());
    while (position_ < target) feed_one();
    finish_warm_start_if_due();
    while (next_checkpoint_ < position_) next_checkpoint_ += cfg_.checkpoint_interval;
  }

  /// Scores for one user under one algorithm at the current state.
  ScoreVector scores_for(Algorithm a, UserId user) const {
    switch (a) {
      case Algorithm::Static:
        if (cfg_.hybrid_lambda) {
          auto md = mass_diffusion_scores(graph_, user);
          const auto hc = heat_conduction_scores(graph_, user);
          const double l = *cfg_.hybrid_lambda;
          for (std::size_t i = 0; i < md.scores.size(); ++i) md.scores[i] = l * md.scores[i] + (1.0 - l) * hc.scores[i];
          return md;
        }
        return mass_diffusion_scores(graph_, user);
      case Algorithm::FirstOrder:
      case Algorithm::SecondOrder: {
        const auto& s = *store(a == Algorithm::FirstOrder ? Approximation::FirstOrder : Approximation::SecondOrder);
        if (cfg_.hybrid_lambda) {
          check_dense_cap(graph_, cfg_.dense_cap);
          return hybrid_score(s, TransposedStore{s}, graph_, user, *cfg_.hybrid_lambda);
        }
        return score(s, graph_, user);
      }
      case Algorithm::Random: {
        ScoreVector out{user, graph_.edge_count(), std::vector<double>(graph_.item_count()), false};
        const std::uint64_t key = mix64(cfg_.seed ^ mix64(position_)) ^ mix64(user.value);
        for (std::size_t i = 0; i < out.scores.size(); ++i) out.scores[i] = unit_from_hash(mix64(key + i));
        return out;
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  using Clock = std::chrono::steady_clock;

  void feed_one() {
    const EdgeEvent& ev = (*train_)[position_];
    const bool update_stores = warm_done_ || cfg_.warm_start == WarmStart::Replay;
    std::vector<ItemId> before;
    if (update_stores && ev.op == EdgeOp::Remove) {
      if (auto u = graph_.find_user(ev.user)) {
        const auto items = graph_.items_of(*u);
        before.assign(items.begin(), items.end());
      }
    }
    auto t0 = now();
    const auto outcome = graph_.apply(ev);
    graph_time_ += elapsed(t0);
    if (update_stores) {
      for (std::size_t s = 0; s < stores_.size(); ++s) {
        auto t = now();
        update_after_event(stores_[s], graph_, outcome, ev.op, before);
        timers_[s] += elapsed(t);
      }
    }
    ++position_;
    ++window_events_;
    finish_warm_start_if_due();
  }

  void finish_warm_start_if_due() {
    if (warm_done_ || position_ < cfg_.start_threshold) return;
    if (cfg_.warm_start == WarmStart::ExactInit) {
      for (std::size_t s = 0; s < stores_.size(); ++s) {
        auto t = now();
        bulk_initialize(stores_[s], graph_);
        timers_[s] += elapsed(t);
      }
    }
    warm_done_ = true;
  }

  void audit() const {
    graph_.audit();
    if (!warm_done_) return;
    for (const auto& s : stores_) {
      if (s.column_count() != graph_.item_count()) throw InconsistencyError("store column count differs from item count");
    }
  }

  CheckpointReport evaluate() const {
    // Eligible users and their sets do not depend on the algorithm.
    struct Candidate {
      UserId user;
      UserEvalSets sets;
    };
    std::vector<Candidate> users;
    for (const auto& [label, items] : test_by_user_) {
      const auto uid = graph_.find_user(label);
      if (!uid) continue;
      std::vector<ItemId> test;
      for (const auto& item : items)
        if (auto iid = graph_.find_item(item)) test.push_back(*iid);
      auto sets = make_eval_sets(graph_.item_count(), graph_.items_of(*uid), std::move(test));
      if (sets.collected.empty() || sets.test.empty() || sets.rest.empty()) continue;
      users.push_back({*uid, std::move(sets)});
    }
    std::sort(users.begin(), users.end(), [](const Candidate& a, const Candidate& b) { return a.user < b.user; });
    const std::size_t excluded = graph_.user_count() - users.size();

    CheckpointReport rep;
    rep.edges_fed = position_;
    const std::size_t max_k = cfg_.ks.back();
    for (Algorithm a : cfg_.algorithms) {
      AlgorithmMetrics m;
      m.algorithm = a;
      m.precision.assign(cfg_.ks.size(), 0.0);
      m.recall.assign(cfg_.ks.size(), 0.0);
      m.users_evaluated = users.size();
      m.users_excluded = excluded;
      for (const auto& c : users) {
        const auto sv = scores_for(a, c.user);
        m.auc += *auc_user(sv, c.sets);
        const auto ranked = recommend_top_k(sv, c.sets.collected, max_k);
        for (std::size_t k = 0; k < cfg_.ks.size(); ++k) {
          const auto pr = *precision_recall_user(ranked, c.sets, cfg_.ks[k]);
          m.precision[k] += pr.precision;
          m.recall[k] += pr.recall;
        }
      }
      if (!users.empty()) {
        const double n = static_cast<double>(users.size());
        m.auc /= n;
        for (auto& p : m.precision) p /= n;
        for (auto& r : m.recall) r /= n;
      }
      m.us_per_event = per_event_micros(a);
      rep.results.push_back(std::move(m));
    }
    return rep;
  }

  double per_event_micros(Algorithm a) const {
    if (!cfg_.measure_time || window_events_ == 0) return 0.0;
    double ns = graph_time_;
    if (a == Algorithm::FirstOrder || a == Algorithm::SecondOrder) {
      const auto want = a == Algorithm::FirstOrder ? Approximation::FirstOrder : Approximation::SecondOrder;
      for (std::size_t s = 0; s < stores_.size(); ++s)
        if (stores_[s].approximation() == want) ns += timers_[s];
    }
    return ns / 1000.0 / static_cast<double>(window_events_);
  }

  Clock::time_point now() const { return cfg_.measure_time ? Clock::now() : Clock::time_point{}; }
  double elapsed(Clock::time_point t0) const {
    if (!cfg_.measure_time) return 0.0;
    return std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
  }

  void reset_timers() {
    graph_time_ = 0.0;
    std::fill(timers_.begin(), timers_.end(), 0.0);
    window_events_ = 0;
  }

  StreamConfig cfg_;
  const std::vector<EdgeEvent>* train_;
  std::map<std::string, std::vector<std::string>> test_by_user_;
  BipartiteGraph graph_;
  std::vector<SparseColumnStore> stores_;
  std::size_t position_ = 0;
  std::size_t next_checkpoint_ = 0;
  bool warm_done_ = false;

  double graph_time_ = 0.0;
  std::vector<double> timers_;
  std::size_t window_events_ = 0;
};

inline std::vector<CheckpointReport> run_stream(const StreamConfig& cfg, const std::vector<EdgeEvent>& train,
                                                const std::vector<EdgeEvent>& test) {
  return StreamRunner(cfg, train, test).run();
}

}  // namespace dynrec

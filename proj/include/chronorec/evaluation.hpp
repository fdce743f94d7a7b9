#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "chronorec/corpus.hpp"
#include "chronorec/decoding.hpp"
#include "chronorec/prompting.hpp"
#include "chronorec/scoring.hpp"
#include "chronorec/trend.hpp"

namespace chronorec {

inline int recall_at_k(std::optional<int> rank, int k) {
  if (k < 1) throw UsageError("recall_at_k requires k >= 1");
  return rank.has_value() && *rank <= k ? 1 : 0;
}

// Single-relevant-item NDCG: 1 / log2(rank + 1) within the cutoff.
inline double ndcg_at_k(std::optional<int> rank, int k) {
  if (k < 1) throw UsageError("ndcg_at_k requires k >= 1");
  if (!rank.has_value() || *rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(*rank) + 1.0);
}

// Rank of the target in a final ranking; ties share the worse rank.
inline std::optional<int> rank_of_target(const RankedList& entries,
                                         const std::string& target) {
  const RankedEntry* hit = nullptr;
  for (const auto& e : entries) {
    if (e.item == target) {
      hit = &e;
      break;
    }
  }
  if (hit == nullptr) return std::nullopt;
  int rank = 0;
  for (const auto& e : entries) {
    if (e.final_score >= hit->final_score) ++rank;
  }
  return rank;
}

struct MetricsCell {
  std::size_t users = 0;
  std::map<int, double> recall;  // cutoff -> mean
  std::map<int, double> ndcg;

  bool operator==(const MetricsCell&) const = default;
};

struct MetricsReport {
  std::string split;
  std::string variant;
  double lambda = 0.0;
  bool exact = false;
  std::string config_fingerprint;
  MetricsCell overall;
  std::map<std::string, MetricsCell> groups;

  bool operator==(const MetricsReport&) const = default;
};

inline json report_to_json(const MetricsReport& r) {
  auto cell = [](const MetricsCell& c) {
    json recall = json::object();
    json ndcg = json::object();
    for (const auto& [k, v] : c.recall) recall[std::to_string(k)] = v;
    for (const auto& [k, v] : c.ndcg) ndcg[std::to_string(k)] = v;
    return json{{"users", c.users}, {"recall", recall}, {"ndcg", ndcg}};
  };
  json groups = json::object();
  for (const auto& [name, c] : r.groups) groups[name] = cell(c);
  return json{{"config_fingerprint", r.config_fingerprint},
              {"split", r.split},
              {"variant", r.variant},
              {"lambda", r.lambda},
              {"exact", r.exact},
              {"overall", cell(r.overall)},
              {"groups", groups}};
}

struct EvalSetup {
  const ScoringModel* model = nullptr;
  const IdTrie* trie = nullptr;
  const IdMap* ids = nullptr;
  const TransitionGraph* graph = nullptr;
  const SplitDataset* split = nullptr;
  std::string role = "test";  // or "valid"
  PromptOptions prompt;
  DecayParams graph_decay;
  double lambda = 0.0;
  int trend_window = 7;
  bool include_valid_in_trend = false;
  std::vector<int> cutoffs = {5, 10};
  int beam_width = 20;
  bool exact = false;
  std::optional<std::pair<std::int64_t, std::int64_t>> boundaries;
  std::string config_fingerprint;
  int threads = 1;
};

namespace detail {

template <typename Fn>
inline void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  int count = std::min<int>(threads, static_cast<int>(n));
  pool.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Full leave-one-out evaluation: per-user ranking (beam or exact), optional
// trend aggregation, rank of the held-out target on the final ordering,
// metrics averaged overall and per interval group.
inline MetricsReport evaluate(const EvalSetup& s) {
  if (s.model == nullptr || s.trie == nullptr || s.ids == nullptr ||
      s.graph == nullptr || s.split == nullptr) {
    throw UsageError("evaluate: missing inputs");
  }
  if (s.cutoffs.empty()) throw UsageError("evaluate: no cutoffs");
  int max_cutoff = *std::max_element(s.cutoffs.begin(), s.cutoffs.end());
  if (!s.exact && s.beam_width < max_cutoff) {
    throw UsageError("beam too small for k: B=" + std::to_string(s.beam_width) +
                     " < " + std::to_string(max_cutoff));
  }
  if (s.role != "test" && s.role != "valid") {
    throw UsageError("evaluate: role must be 'test' or 'valid'");
  }
  const std::vector<HeldOut>& heldouts =
      s.role == "test" ? s.split->test : s.split->valid;

  std::map<std::string, IntervalGroup> groups =
      interval_group(heldouts, s.boundaries);

  // Trend tables are shared per distinct recommendation day; validation
  // targets never feed their own trend window.
  std::map<std::int64_t, TrendTable> tables;
  if (s.lambda > 0) {
    std::vector<Interaction> events = flatten_train_events(
        *s.split, s.include_valid_in_trend && s.role == "test");
    std::set<std::int64_t> days;
    for (const auto& h : heldouts) days.insert(day_index(h.target_timestamp));
    for (std::int64_t d : days) {
      tables.emplace(d, build_trend_table(events, d, s.trend_window));
    }
  }
  static const TrendTable empty_table;

  struct UserResult {
    std::optional<int> rank;
  };
  std::vector<UserResult> results(heldouts.size());

  detail::parallel_for(heldouts.size(), s.threads, [&](std::size_t i) {
    const HeldOut& h = heldouts[i];
    PromptFeatures features =
        build_features(h.user, h.prefix_items, h.prefix_timestamps,
                       h.target_timestamp, *s.ids, *s.graph, s.graph_decay,
                       s.prompt);
    ScoringContext ctx{std::move(features)};
    std::vector<ScoredItem> ranking =
        s.exact ? full_rank(*s.model, ctx, *s.trie)
                : beam_search(*s.model, ctx, *s.trie, s.beam_width);
    const TrendTable& table =
        s.lambda > 0 ? tables.at(day_index(h.target_timestamp)) : empty_table;
    RankedList final_list = aggregate(ranking, table, s.lambda);
    results[i].rank = rank_of_target(final_list, h.target);
  });

  MetricsReport report;
  report.split = s.role;
  report.variant = variant_name(s.prompt.variant);
  report.lambda = s.lambda;
  report.exact = s.exact;
  report.config_fingerprint = s.config_fingerprint;

  struct Accumulator {
    std::size_t users = 0;
    std::map<int, double> recall_sum;
    std::map<int, double> ndcg_sum;
  };
  Accumulator overall;
  std::map<std::string, Accumulator> by_group;
  for (std::size_t i = 0; i < heldouts.size(); ++i) {
    const char* group = interval_group_name(groups.at(heldouts[i].user));
    for (Accumulator* acc : {&overall, &by_group[group]}) {
      acc->users += 1;
      for (int k : s.cutoffs) {
        acc->recall_sum[k] += recall_at_k(results[i].rank, k);
        acc->ndcg_sum[k] += ndcg_at_k(results[i].rank, k);
      }
    }
  }
  auto finish = [&](const Accumulator& acc) {
    MetricsCell cell;
    cell.users = acc.users;
    for (int k : s.cutoffs) {
      double n = acc.users > 0 ? static_cast<double>(acc.users) : 1.0;
      cell.recall[k] = (acc.recall_sum.count(k) ? acc.recall_sum.at(k) : 0.0) / n;
      cell.ndcg[k] = (acc.ndcg_sum.count(k) ? acc.ndcg_sum.at(k) : 0.0) / n;
    }
    return cell;
  };
  report.overall = finish(overall);
  for (const auto& [name, acc] : by_group) report.groups[name] = finish(acc);
  return report;
}

// One evaluation per prompt variant, all other inputs shared.
inline std::vector<std::pair<PromptVariant, MetricsReport>> ablate_variants(
    const EvalSetup& base, std::span<const PromptVariant> variants) {
  std::vector<std::pair<PromptVariant, MetricsReport>> rows;
  rows.reserve(variants.size());
  for (PromptVariant v : variants) {
    EvalSetup setup = base;
    setup.prompt.variant = v;
    rows.emplace_back(v, evaluate(setup));
  }
  return rows;
}

}  // namespace chronorec

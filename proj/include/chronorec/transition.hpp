#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "chronorec/corpus.hpp"
#include "chronorec/jsonl.hpp"
#include "chronorec/util.hpp"

namespace chronorec {

// Eq-style decay: w = max(exp(-|dt| / tau), c), intervals in days.
struct DecayParams {
  double tau = 128.0;
  double c = 0.9;

  void validate() const {
    if (!(tau > 0)) throw UsageError("decay tau must be > 0");
    if (!(c >= 0.0 && c <= 1.0)) throw UsageError("decay floor c must be in [0, 1]");
  }
};

inline double time_weight(double delta_days, const DecayParams& p) {
  return std::max(std::exp(-std::abs(delta_days) / p.tau), p.c);
}

// Directed multigraph over items: each within-user ordered pair in the
// training data contributes one occurrence carrying its day interval.
class TransitionGraph {
 public:
  using Row = std::map<std::string, std::vector<std::int64_t>>;

  void add_pair(const std::string& from, const std::string& to,
                std::int64_t interval_days) {
    adj_[from][to].push_back(interval_days);
    ++pair_count_;
  }

  const std::map<std::string, Row>& adjacency() const { return adj_; }

  const Row* row(const std::string& item) const {
    auto it = adj_.find(item);
    return it == adj_.end() ? nullptr : &it->second;
  }

  bool has_outgoing(const std::string& item) const {
    const Row* r = row(item);
    return r != nullptr && !r->empty();
  }

  std::size_t pair_count() const { return pair_count_; }

 private:
  std::map<std::string, Row> adj_;
  std::size_t pair_count_ = 0;
};

// All ordered pairs (positions t < t') from each training sequence, with
// interval = day-index difference. Self-pairs (revisits) are kept unless
// disabled.
inline TransitionGraph build_graph(const std::vector<UserSequence>& train_sequences,
                                   bool keep_self_transitions = true) {
  TransitionGraph g;
  for (const auto& seq : train_sequences) {
    std::size_t n = seq.items.size();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!keep_self_transitions && seq.items[a] == seq.items[b]) continue;
        std::int64_t interval =
            day_index(seq.timestamps[b]) - day_index(seq.timestamps[a]);
        g.add_pair(seq.items[a], seq.items[b], interval);
      }
    }
  }
  return g;
}

// p_{i,j}: weighted occurrence mass from i to j over the total outgoing
// mass of i. Zero when no i->j pairs exist; throws when i has no outgoing
// pairs at all.
inline double transition_prob(const TransitionGraph& g, const std::string& i,
                              const std::string& j, const DecayParams& p) {
  p.validate();
  const TransitionGraph::Row* row = g.row(i);
  if (row == nullptr || row->empty()) throw NoOutgoingTransitions(i);
  double total = 0.0;
  double num = 0.0;
  for (const auto& [target, intervals] : *row) {
    double sum = 0.0;
    for (std::int64_t dt : intervals) {
      sum += time_weight(static_cast<double>(dt), p);
    }
    total += sum;
    if (target == j) num = sum;
  }
  return num / total;
}

// Normalized rows for one parameter setting; rows are sorted by target id
// so iteration order is canonical.
class TransitionMatrix {
 public:
  using Row = std::vector<std::pair<std::string, double>>;

  TransitionMatrix() = default;

  TransitionMatrix(const TransitionGraph& g, const DecayParams& p) {
    p.validate();
    for (const auto& [source, row] : g.adjacency()) {
      if (row.empty()) continue;
      Row weighted;
      weighted.reserve(row.size());
      double total = 0.0;
      for (const auto& [target, intervals] : row) {
        double sum = 0.0;
        for (std::int64_t dt : intervals) {
          sum += time_weight(static_cast<double>(dt), p);
        }
        weighted.emplace_back(target, sum);
        total += sum;
      }
      for (auto& [target, w] : weighted) w /= total;
      rows_[source] = std::move(weighted);
    }
  }

  const Row* row(const std::string& item) const {
    auto it = rows_.find(item);
    return it == rows_.end() ? nullptr : &it->second;
  }

  double prob(const std::string& i, const std::string& j) const {
    const Row* r = row(i);
    if (r == nullptr) return 0.0;
    auto it = std::lower_bound(
        r->begin(), r->end(), j,
        [](const auto& entry, const std::string& key) { return entry.first < key; });
    return (it != r->end() && it->first == j) ? it->second : 0.0;
  }

 private:
  std::map<std::string, Row> rows_;
};

struct Neighbor {
  std::string item;
  double prob = 0.0;
};

// Top-k outgoing targets by transition probability, descending; ties break
// on key_fn (rendered-form lookup in the pipeline, identity by default).
// No outgoing pairs yields an empty list.
inline std::vector<Neighbor> top_k_neighbors(
    const TransitionGraph& g, const std::string& i, int k, const DecayParams& p,
    const std::function<std::string(const std::string&)>& key_fn = {}) {
  if (k < 1) throw UsageError("top_k_neighbors requires k >= 1");
  const TransitionGraph::Row* row = g.row(i);
  if (row == nullptr || row->empty()) return {};
  std::vector<Neighbor> all;
  all.reserve(row->size());
  double total = 0.0;
  for (const auto& [target, intervals] : *row) {
    double sum = 0.0;
    for (std::int64_t dt : intervals) {
      sum += time_weight(static_cast<double>(dt), p);
    }
    all.push_back({target, sum});
    total += sum;
  }
  for (auto& n : all) n.prob /= total;
  auto key = [&](const std::string& item) {
    return key_fn ? key_fn(item) : item;
  };
  std::sort(all.begin(), all.end(), [&](const Neighbor& a, const Neighbor& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return key(a.item) < key(b.item);
  });
  if (all.size() > static_cast<std::size_t>(k)) {
    all.resize(static_cast<std::size_t>(k));
  }
  return all;
}

// Graph artifact: intervals only; weights are recomputed on load so tau/c
// can change without a rebuild.
inline void save_graph(const std::filesystem::path& path,
                       const TransitionGraph& g, const std::string& fingerprint) {
  json doc;
  doc["fingerprint"] = fingerprint;
  json adjacency = json::array();
  for (const auto& [source, row] : g.adjacency()) {
    json out = json::array();
    for (const auto& [target, intervals] : row) {
      out.push_back(json{{"j", target}, {"intervals", intervals}});
    }
    adjacency.push_back(json{{"i", source}, {"out", std::move(out)}});
  }
  doc["adjacency"] = std::move(adjacency);
  write_json_file(path, doc);
}

inline TransitionGraph load_graph(const std::filesystem::path& path,
                                  std::string* fingerprint = nullptr) {
  json doc = read_json_file(path);
  if (fingerprint != nullptr) {
    *fingerprint = doc.value("fingerprint", std::string());
  }
  TransitionGraph g;
  for (const auto& entry : doc.at("adjacency")) {
    std::string source = entry.at("i").get<std::string>();
    for (const auto& edge : entry.at("out")) {
      std::string target = edge.at("j").get<std::string>();
      for (const auto& dt : edge.at("intervals")) {
        g.add_pair(source, target, dt.get<std::int64_t>());
      }
    }
  }
  return g;
}

}  // namespace chronorec

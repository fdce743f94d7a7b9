#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "chronorec/corpus.hpp"
#include "chronorec/identifiers.hpp"
#include "chronorec/prompting.hpp"
#include "chronorec/transition.hpp"
#include "chronorec/trie.hpp"

namespace chronorec {

struct ScoringConfig {
  double epsilon = 0.01;   // weight of the transition component
  int last_l = 2;          // recent items feeding the transition component
  double delta_pop = 1e-3;
  double delta_floor = 1e-9;
  DecayParams history_decay{128.0, 0.9};     // recency weighting of the history
  DecayParams transition_decay{128.0, 0.9};  // pair weighting inside the graph

  void validate() const {
    if (!(epsilon >= 0)) throw UsageError("epsilon must be >= 0");
    if (!(delta_floor > 0)) throw UsageError("delta_floor must be > 0");
    if (!(delta_pop >= 0)) throw UsageError("delta_pop must be >= 0");
    if (last_l < 1) throw UsageError("L must be >= 1");
    history_decay.validate();
    transition_decay.validate();
  }
};

// Structured model input, derived from a PromptPair's features. A model may
// consume the rendered text, the features, or both.
struct ScoringContext {
  PromptFeatures features;
};

inline ScoringContext make_context(const PromptFeatures& f) {
  return ScoringContext{f};
}

// The rendered text is a pure function of the features, so a text-consuming
// model recovers it with make_prompt_pair(ctx.features).
inline ScoringContext make_context(const PromptPair& pair) {
  return ScoringContext{pair.features};
}

// A scorer bound to one context. Bound scorers are read-only and cheap to
// query; each one is owned by a single caller, so concurrent users each
// bind their own.
class BoundScorer {
 public:
  virtual ~BoundScorer() = default;

  // log P(token | context, prefix) for every trie-allowed continuation of
  // the prefix, including the end marker. Probabilities over the returned
  // tokens sum to 1. Invalid prefixes throw.
  virtual std::vector<std::pair<std::string, double>> next_token_logprobs(
      std::span<const std::string> prefix) const = 0;
};

class ScoringModel {
 public:
  virtual ~ScoringModel() = default;
  virtual std::unique_ptr<BoundScorer> bind(const ScoringContext& ctx) const = 0;
};

// One-shot form of the contract.
inline std::vector<std::pair<std::string, double>> next_token_logprobs(
    const ScoringModel& model, const ScoringContext& ctx,
    std::span<const std::string> prefix) {
  return model.bind(ctx)->next_token_logprobs(prefix);
}

// Closed-form scorer standing in for the fine-tuned encoder-decoder. Item
// mass combines content similarity against the history (TF-IDF vectors over
// ID tokens, recency-weighted when the context exposes target-relative
// intervals), transition probability from the last L items, train
// popularity, and a floor keeping every ID reachable. Token distributions
// come from trie prefix sums over the masses, so beam scores telescope to
// ln m(item) - ln M(root).
class BuiltinScorer : public ScoringModel {
 public:
  static BuiltinScorer fit(const SplitDataset& train_split,
                           const TransitionGraph& graph, const IdMap& ids,
                           const std::vector<TfIdfVector>& vectors,
                           const ScoringConfig& config) {
    config.validate();
    if (train_split.train.empty()) {
      throw DataError("BuiltinScorer::fit: empty train split");
    }
    BuiltinScorer m;
    m.config_ = config;
    m.trie_ = build_trie(ids);

    std::unordered_map<std::string, const TfIdfVector*> vec_by_item;
    for (const auto& v : vectors) vec_by_item[v.item] = &v;

    for (const auto& [item, id] : ids) {
      std::size_t idx = m.items_.size();
      m.items_.push_back(item);
      m.index_[item] = idx;
      SparseVec vec;
      auto vit = vec_by_item.find(item);
      if (vit != vec_by_item.end()) {
        for (const auto& token : id.tokens) {
          auto wit = vit->second->weights.find(token);
          if (wit != vit->second->weights.end() && wit->second > 0) {
            vec.emplace_back(token, wit->second);
          }
        }
      }
      std::sort(vec.begin(), vec.end());
      double norm_sq = 0.0;
      for (const auto& [token, w] : vec) norm_sq += w * w;
      m.vectors_.push_back(std::move(vec));
      m.norms_.push_back(std::sqrt(norm_sq));
    }

    // Train popularity: event frequency over the training split.
    std::vector<double> counts(m.items_.size(), 0.0);
    double total = 0.0;
    for (const auto& seq : train_split.train) {
      for (const auto& item : seq.items) {
        total += 1.0;
        auto it = m.index_.find(item);
        if (it != m.index_.end()) counts[it->second] += 1.0;
      }
    }
    m.popularity_.resize(m.items_.size(), 0.0);
    if (total > 0) {
      for (std::size_t i = 0; i < counts.size(); ++i) {
        m.popularity_[i] = counts[i] / total;
      }
    }

    m.transitions_ = TransitionMatrix(graph, config.transition_decay);
    // Per-node item paths for prefix-sum accumulation: node indices visited
    // by each item's tokens plus its end edge.
    m.paths_.resize(m.items_.size());
    for (std::size_t i = 0; i < m.items_.size(); ++i) {
      const TextualId& id = ids.at(m.items_[i]);
      std::vector<int> path;
      int cur = m.trie_.root();
      for (const auto& token : id.tokens) {
        cur = m.trie_.node(cur).children.at(token);
        path.push_back(cur);
      }
      cur = m.trie_.node(cur).children.at(IdTrie::end_marker());
      path.push_back(cur);
      m.paths_[i] = std::move(path);
    }
    return m;
  }

  const IdTrie& trie() const { return trie_; }
  const std::vector<std::string>& catalog() const { return items_; }
  const ScoringConfig& config() const { return config_; }

  // m(j) for one item under the given context.
  double item_mass(const ScoringContext& ctx, const std::string& item) const {
    auto it = index_.find(item);
    if (it == index_.end()) {
      throw DataError("item_mass: unknown item '" + item + "'");
    }
    HistoryView view = make_history_view(ctx);
    return mass_of(view, it->second);
  }

  // m(j) for every catalog item, indexed like catalog().
  std::vector<double> mass_table(const ScoringContext& ctx) const {
    HistoryView view = make_history_view(ctx);
    std::vector<double> masses(items_.size());
    for (std::size_t j = 0; j < items_.size(); ++j) {
      masses[j] = content_score(view, j) + config_.delta_pop * popularity_[j] +
                  config_.delta_floor;
    }
    // Sparse transition rows: accumulate over the last-L items' targets.
    if (config_.epsilon > 0 && !view.last_l.empty()) {
      double scale = config_.epsilon / static_cast<double>(view.last_l.size());
      for (std::size_t a : view.last_l) {
        const TransitionMatrix::Row* row = transitions_.row(items_[a]);
        if (row == nullptr) continue;
        for (const auto& [target, p] : *row) {
          auto it = index_.find(target);
          if (it != index_.end()) masses[it->second] += scale * p;
        }
      }
    }
    return masses;
  }

  std::unique_ptr<BoundScorer> bind(const ScoringContext& ctx) const override {
    std::vector<double> masses = mass_table(ctx);
    std::vector<double> node_mass(trie_.node_count(), 0.0);
    for (std::size_t j = 0; j < masses.size(); ++j) {
      node_mass[static_cast<std::size_t>(trie_.root())] += masses[j];
      for (int node : paths_[j]) {
        node_mass[static_cast<std::size_t>(node)] += masses[j];
      }
    }
    return std::make_unique<Bound>(trie_, std::move(node_mass));
  }

 private:
  using SparseVec = std::vector<std::pair<std::string, double>>;

  struct HistoryView {
    std::vector<std::size_t> indices;  // catalog index per history item
    std::vector<double> weights;       // recency weight per history item
    std::vector<std::size_t> last_l;   // catalog indices of the last L items
  };

  class Bound : public BoundScorer {
   public:
    Bound(const IdTrie& trie, std::vector<double> node_mass)
        : trie_(trie), node_mass_(std::move(node_mass)) {}

    std::vector<std::pair<std::string, double>> next_token_logprobs(
        std::span<const std::string> prefix) const override {
      int node = trie_.walk(prefix);
      double here = node_mass_[static_cast<std::size_t>(node)];
      std::vector<std::pair<std::string, double>> out;
      const auto& children = trie_.node(node).children;
      out.reserve(children.size());
      for (const auto& [token, child] : children) {
        out.emplace_back(
            token, std::log(node_mass_[static_cast<std::size_t>(child)] / here));
      }
      return out;
    }

   private:
    const IdTrie& trie_;
    std::vector<double> node_mass_;
  };

  HistoryView make_history_view(const ScoringContext& ctx) const {
    const PromptFeatures& f = ctx.features;
    HistoryView view;
    bool decay = variant_has_target_relative(f.variant);
    for (std::size_t i = 0; i < f.items.size(); ++i) {
      auto it = index_.find(f.items[i]);
      if (it == index_.end()) {
        throw DataError("history item '" + f.items[i] + "' not in catalog");
      }
      view.indices.push_back(it->second);
      double w = 1.0;
      if (decay) {
        std::int64_t gap = f.inference_day - f.days[i];
        w = time_weight(static_cast<double>(gap), config_.history_decay);
      }
      view.weights.push_back(w);
    }
    std::size_t l = std::min(view.indices.size(),
                             static_cast<std::size_t>(config_.last_l));
    for (std::size_t n = 0; n < l; ++n) {
      view.last_l.push_back(view.indices[view.indices.size() - 1 - n]);
    }
    return view;
  }

  double cosine(std::size_t a, std::size_t b) const {
    if (norms_[a] == 0.0 || norms_[b] == 0.0) return 0.0;
    const SparseVec& va = vectors_[a];
    const SparseVec& vb = vectors_[b];
    double dot = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < va.size() && j < vb.size()) {
      int cmp = va[i].first.compare(vb[j].first);
      if (cmp == 0) {
        dot += va[i].second * vb[j].second;
        ++i;
        ++j;
      } else if (cmp < 0) {
        ++i;
      } else {
        ++j;
      }
    }
    return dot / (norms_[a] * norms_[b]);
  }

  double content_score(const HistoryView& view, std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < view.indices.size(); ++i) {
      s += view.weights[i] * cosine(view.indices[i], j);
    }
    return s;
  }

  double transition_score(const HistoryView& view, std::size_t j) const {
    if (view.last_l.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t a : view.last_l) {
      s += transitions_.prob(items_[a], items_[j]);
    }
    return s / static_cast<double>(view.last_l.size());
  }

  double mass_of(const HistoryView& view, std::size_t j) const {
    return content_score(view, j) + config_.epsilon * transition_score(view, j) +
           config_.delta_pop * popularity_[j] + config_.delta_floor;
  }

  ScoringConfig config_;
  IdTrie trie_;
  std::vector<std::string> items_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<SparseVec> vectors_;
  std::vector<double> norms_;
  std::vector<double> popularity_;
  std::vector<std::vector<int>> paths_;
  TransitionMatrix transitions_;
};

// Mean over examples of -sum_t log P(token_t | ctx, tokens_<t), token paths
// taken from the target's assigned ID (end marker included).
inline double teacher_forced_nll(
    const ScoringModel& model, const IdMap& ids,
    std::span<const std::pair<ScoringContext, std::string>> examples) {
  if (examples.empty()) throw DataError("teacher_forced_nll: no examples");
  double total = 0.0;
  for (const auto& [ctx, target] : examples) {
    auto it = ids.find(target);
    if (it == ids.end()) {
      throw DataError("teacher_forced_nll: target '" + target +
                      "' missing from ID map");
    }
    auto bound = model.bind(ctx);
    std::vector<std::string> prefix;
    double ll = 0.0;
    auto step = [&](const std::string& token) {
      auto logprobs = bound->next_token_logprobs(prefix);
      for (const auto& [t, lp] : logprobs) {
        if (t == token) {
          ll += lp;
          return;
        }
      }
      throw DataError("teacher_forced_nll: token '" + token +
                      "' not reachable for target '" + target + "'");
    };
    for (const auto& token : it->second.tokens) {
      step(token);
      prefix.push_back(token);
    }
    step(IdTrie::end_marker());
    total += -ll;
  }
  return total / static_cast<double>(examples.size());
}

}  // namespace chronorec

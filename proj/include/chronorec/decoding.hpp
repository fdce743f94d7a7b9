#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "chronorec/scoring.hpp"
#include "chronorec/trie.hpp"

namespace chronorec {

struct ScoredItem {
  std::string item;
  std::string rendered;
  double score = 0.0;  // cumulative token log-probability
};

namespace detail {

struct Hypothesis {
  int node = 0;
  std::vector<std::string> path;
  std::string rendered;
  double score = 0.0;
  bool complete = false;
  std::string item;
};

// Total order: score descending, rendered ascending, completed first. The
// rendered tiebreak makes runs reproducible; completed-first resolves a
// path against its own open form.
inline bool hyp_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.rendered != b.rendered) return a.rendered < b.rendered;
  return a.complete && !b.complete;
}

}  // namespace detail

// Width-B beam search over trie-allowed continuations. Completed hypotheses
// compete with open ones by cumulative log-probability at every pruning
// step; the result is up to B completed items, best first. No length
// normalization: the beam score is the raw sum of token log-probabilities.
inline std::vector<ScoredItem> beam_search(const ScoringModel& model,
                                           const ScoringContext& ctx,
                                           const IdTrie& trie, int beam_width) {
  if (beam_width < 1) throw UsageError("beam_search requires B >= 1");
  auto bound = model.bind(ctx);

  std::vector<detail::Hypothesis> open(1);
  open[0].node = trie.root();
  std::vector<detail::Hypothesis> completed;

  while (!open.empty()) {
    std::vector<detail::Hypothesis> pool = completed;
    for (const auto& hyp : open) {
      auto logprobs = bound->next_token_logprobs(hyp.path);
      const auto& children = trie.node(hyp.node).children;
      for (const auto& [token, lp] : logprobs) {
        auto child = children.find(token);
        if (child == children.end()) {
          throw DataError("scorer proposed token outside the trie: '" + token + "'");
        }
        detail::Hypothesis next;
        next.node = child->second;
        next.score = hyp.score + lp;
        if (token == IdTrie::end_marker()) {
          next.path = hyp.path;
          next.rendered = hyp.rendered;
          next.complete = true;
          next.item = trie.node(child->second).item;
        } else {
          next.path = hyp.path;
          next.path.push_back(token);
          next.rendered =
              hyp.rendered.empty() ? token : hyp.rendered + "-" + token;
        }
        pool.push_back(std::move(next));
      }
    }
    std::sort(pool.begin(), pool.end(), detail::hyp_before);
    if (pool.size() > static_cast<std::size_t>(beam_width)) {
      pool.resize(static_cast<std::size_t>(beam_width));
    }
    completed.clear();
    open.clear();
    for (auto& hyp : pool) {
      (hyp.complete ? completed : open).push_back(std::move(hyp));
    }
  }

  std::vector<ScoredItem> out;
  out.reserve(completed.size());
  for (const auto& hyp : completed) {
    out.push_back({hyp.item, hyp.rendered, hyp.score});
  }
  return out;
}

// Exact full ranking: every catalog item scored by its full-path token
// log-probabilities, descending, rendered-ID tiebreak. Visits each trie
// node once.
inline std::vector<ScoredItem> full_rank(const ScoringModel& model,
                                         const ScoringContext& ctx,
                                         const IdTrie& trie) {
  auto bound = model.bind(ctx);
  std::vector<ScoredItem> out;
  out.reserve(trie.size());

  struct Frame {
    int node;
    std::vector<std::string> path;
    std::string rendered;
    double score;
  };
  std::vector<Frame> stack;
  stack.push_back({trie.root(), {}, "", 0.0});
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    auto logprobs = bound->next_token_logprobs(frame.path);
    const auto& children = trie.node(frame.node).children;
    for (const auto& [token, lp] : logprobs) {
      auto child = children.find(token);
      if (child == children.end()) {
        throw DataError("scorer proposed token outside the trie: '" + token + "'");
      }
      if (token == IdTrie::end_marker()) {
        out.push_back({trie.node(child->second).item, frame.rendered,
                       frame.score + lp});
      } else {
        Frame next;
        next.node = child->second;
        next.path = frame.path;
        next.path.push_back(token);
        next.rendered =
            frame.rendered.empty() ? token : frame.rendered + "-" + token;
        next.score = frame.score + lp;
        stack.push_back(std::move(next));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.rendered < b.rendered;
  });
  return out;
}

}  // namespace chronorec

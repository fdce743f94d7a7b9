#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chronorec/error.hpp"
#include "chronorec/identifiers.hpp"

namespace chronorec {

// Prefix tree over ID tokens. Every complete ID ends with an explicit end
// marker edge, so no ID is a silent prefix of another; the node reached via
// the end edge stores the item id.
class IdTrie {
 public:
  struct Node {
    std::map<std::string, int> children;  // token (or end marker) -> node
    std::string item;                     // set only on end-marker nodes
  };

  static const std::string& end_marker() {
    static const std::string marker = "<end>";
    return marker;
  }

  IdTrie() { nodes_.emplace_back(); }

  int root() const { return 0; }

  const Node& node(int idx) const { return nodes_[static_cast<std::size_t>(idx)]; }

  std::size_t node_count() const { return nodes_.size(); }

  std::size_t size() const { return item_count_; }

  void insert(const std::vector<std::string>& tokens, const std::string& item) {
    int cur = 0;
    for (const auto& t : tokens) cur = child_or_create(cur, t);
    auto [it, inserted] =
        nodes_[static_cast<std::size_t>(cur)].children.emplace(end_marker(), 0);
    if (!inserted) {
      throw DataError("duplicate rendered ID: " + render_tokens(tokens));
    }
    nodes_.emplace_back();
    it->second = static_cast<int>(nodes_.size()) - 1;
    nodes_.back().item = item;
    ++item_count_;
  }

  // Node at the end of a token path from the root; nullopt if absent.
  std::optional<int> try_walk(std::span<const std::string> tokens) const {
    int cur = 0;
    for (const auto& t : tokens) {
      const auto& children = nodes_[static_cast<std::size_t>(cur)].children;
      auto it = children.find(t);
      if (it == children.end()) return std::nullopt;
      cur = it->second;
    }
    return cur;
  }

  int walk(std::span<const std::string> tokens) const {
    auto n = try_walk(tokens);
    if (!n) {
      std::vector<std::string> copy(tokens.begin(), tokens.end());
      throw DataError("invalid trie prefix: " + render_tokens(copy));
    }
    return *n;
  }

  // Item id for a complete token path (tokens followed by the end marker),
  // or nullptr when the path is not a complete ID.
  const std::string* lookup(std::span<const std::string> tokens) const {
    auto n = try_walk(tokens);
    if (!n) return nullptr;
    const auto& children = nodes_[static_cast<std::size_t>(*n)].children;
    auto it = children.find(end_marker());
    if (it == children.end()) return nullptr;
    return &nodes_[static_cast<std::size_t>(it->second)].item;
  }

  bool contains(const std::vector<std::string>& tokens) const {
    return lookup(tokens) != nullptr;
  }

  // All (tokens, item) pairs, in lexicographic token order.
  std::vector<std::pair<std::vector<std::string>, std::string>> enumerate() const {
    std::vector<std::pair<std::vector<std::string>, std::string>> out;
    std::vector<std::string> path;
    enumerate_from(0, path, out);
    return out;
  }

 private:
  int child_or_create(int parent, const std::string& token) {
    auto [it, inserted] =
        nodes_[static_cast<std::size_t>(parent)].children.emplace(token, 0);
    if (inserted) {
      nodes_.emplace_back();
      it->second = static_cast<int>(nodes_.size()) - 1;
    }
    return it->second;
  }

  void enumerate_from(
      int idx, std::vector<std::string>& path,
      std::vector<std::pair<std::vector<std::string>, std::string>>& out) const {
    for (const auto& [token, child] : nodes_[static_cast<std::size_t>(idx)].children) {
      if (token == end_marker()) {
        out.emplace_back(path, nodes_[static_cast<std::size_t>(child)].item);
      } else {
        path.push_back(token);
        enumerate_from(child, path, out);
        path.pop_back();
      }
    }
  }

  std::vector<Node> nodes_;
  std::size_t item_count_ = 0;
};

inline IdTrie build_trie(const IdMap& ids) {
  IdTrie trie;
  for (const auto& [item, id] : ids) trie.insert(id.tokens, item);
  return trie;
}

}  // namespace chronorec

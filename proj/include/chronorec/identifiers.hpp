#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "chronorec/corpus.hpp"
#include "chronorec/jsonl.hpp"
#include "chronorec/util.hpp"

namespace chronorec {

// Keyword-based textual ID. Tokens are lowercase, free of '-' and
// whitespace; rendered is tokens joined by '-' and unique per catalog.
struct TextualId {
  std::string item;
  std::vector<std::string> tokens;
  std::string rendered;
};

using IdMap = std::map<std::string, TextualId>;

struct TfIdfVector {
  std::string item;
  std::map<std::string, double> weights;
};

inline const std::set<std::string>& builtin_stopwords() {
  static const std::set<std::string> words = {
      "a",     "about", "after",  "all",   "an",    "and",   "any",   "are",
      "as",    "at",    "be",     "been",  "but",   "by",    "can",   "did",
      "do",    "does",  "for",    "from",  "had",   "has",   "have",  "he",
      "her",   "his",   "i",      "if",    "in",    "into",  "is",    "it",
      "its",   "just",  "me",     "more",  "most",  "my",    "no",    "not",
      "of",    "on",    "or",     "our",   "out",   "over",  "she",   "so",
      "some",  "than",  "that",   "the",   "their", "them",  "then",  "there",
      "they",  "this",  "to",     "too",   "under", "up",    "very",  "was",
      "we",    "were",  "will",   "with",  "within", "without", "you", "your"};
  return words;
}

// One word per line; '#' comments and blank lines ignored.
inline std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file: " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    words.insert(lower_ascii(line));
  }
  return words;
}

namespace detail {

inline std::vector<std::string> document_tokens(
    const ItemRecord& r, const std::set<std::string>& stopwords) {
  std::string text = r.title;
  auto add = [&](const std::string& field) {
    if (!field.empty()) {
      text.push_back(' ');
      text.append(field);
    }
  };
  add(r.brand);
  for (const auto& c : r.categories) add(c);
  add(r.description);
  add(r.city);
  std::vector<std::string> tokens = alnum_tokens(text);
  std::erase_if(tokens,
                [&](const std::string& t) { return stopwords.count(t) > 0; });
  return tokens;
}

}  // namespace detail

// tf-idf(t, d) = (count / |d|) * (ln((1 + |D|) / (1 + df(t))) + 1), computed
// over each item's concatenated metadata after lowercasing, alphanumeric
// tokenization, and stopword removal.
inline std::vector<TfIdfVector> compute_tf_idf(
    const std::vector<ItemRecord>& catalog,
    const std::set<std::string>& stopwords = builtin_stopwords()) {
  if (catalog.empty()) throw DataError("compute_tf_idf: empty catalog");

  std::vector<std::vector<std::string>> docs;
  docs.reserve(catalog.size());
  std::vector<std::string> empty_items;
  for (const auto& r : catalog) {
    docs.push_back(detail::document_tokens(r, stopwords));
    if (docs.back().empty()) empty_items.push_back(r.item);
  }
  if (!empty_items.empty()) {
    throw DataError("items with empty documents: " + join(empty_items, ", "));
  }

  std::unordered_map<std::string, std::int64_t> df;
  for (const auto& doc : docs) {
    std::set<std::string> distinct(doc.begin(), doc.end());
    for (const auto& t : distinct) ++df[t];
  }

  double n_docs = static_cast<double>(catalog.size());
  std::vector<TfIdfVector> out;
  out.reserve(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    TfIdfVector v;
    v.item = catalog[i].item;
    std::map<std::string, std::int64_t> counts;
    for (const auto& t : docs[i]) ++counts[t];
    double len = static_cast<double>(docs[i].size());
    for (const auto& [term, count] : counts) {
      double idf =
          std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[term]))) + 1.0;
      v.weights[term] = (static_cast<double>(count) / len) * idf;
    }
    out.push_back(std::move(v));
  }
  return out;
}

// Top n_keywords terms by score (ties to the lexicographically smaller
// term), in descending-score order. Rendered collisions extend with the
// next-highest terms one at a time; once terms run out, the smallest
// numeric suffix token that frees the ID is appended. Items are processed
// in sorted item-id order, so the result is deterministic and injective.
inline IdMap assign_textual_ids(const std::vector<TfIdfVector>& vectors,
                                int n_keywords) {
  if (n_keywords < 1) throw UsageError("assign_textual_ids: n_keywords >= 1");

  std::map<std::string, const TfIdfVector*> by_item;
  for (const auto& v : vectors) by_item[v.item] = &v;

  std::set<std::string> taken;
  IdMap out;
  for (const auto& [item, vec] : by_item) {
    std::vector<std::pair<std::string, double>> terms(vec->weights.begin(),
                                                      vec->weights.end());
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });

    std::size_t base = std::min(terms.size(), static_cast<std::size_t>(n_keywords));
    std::vector<std::string> tokens;
    tokens.reserve(base);
    for (std::size_t i = 0; i < base; ++i) tokens.push_back(terms[i].first);

    std::string rendered = join(tokens, "-");
    std::size_t next_term = base;
    while (taken.count(rendered) > 0 && next_term < terms.size()) {
      tokens.push_back(terms[next_term++].first);
      rendered = join(tokens, "-");
    }
    if (taken.count(rendered) > 0) {
      for (std::int64_t suffix = 2;; ++suffix) {
        std::vector<std::string> candidate = tokens;
        candidate.push_back(std::to_string(suffix));
        std::string r = join(candidate, "-");
        if (taken.count(r) == 0) {
          tokens = std::move(candidate);
          rendered = std::move(r);
          break;
        }
      }
    }
    taken.insert(rendered);
    out[item] = TextualId{item, std::move(tokens), std::move(rendered)};
  }
  return out;
}

// Inverse of the '-' join in TextualId::rendered.
inline std::vector<std::string> tokenize(const std::string& rendered) {
  if (rendered.empty()) throw DataError("tokenize: empty id");
  std::vector<std::string> tokens = split(rendered, '-');
  for (const auto& t : tokens) {
    if (t.empty()) {
      throw DataError("tokenize: empty token segment in '" + rendered + "'");
    }
  }
  return tokens;
}

inline std::string render_tokens(const std::vector<std::string>& tokens) {
  return join(tokens, "-");
}

inline constexpr const char* kTfIdfVariant = "smoothed-idf";

// ID map artifact: header record with the tf-idf variant and n_keywords,
// then one record per item.
inline void save_id_map(const std::filesystem::path& path, const IdMap& ids,
                        int n_keywords, const std::string& fingerprint) {
  JsonlWriter out(path);
  out.write(json{{"header", true},
                 {"tfidf_variant", kTfIdfVariant},
                 {"n_keywords", n_keywords},
                 {"fingerprint", fingerprint}});
  for (const auto& [item, id] : ids) {
    out.write(json{{"item", item}, {"tokens", id.tokens}});
  }
}

inline IdMap load_id_map(const std::filesystem::path& path,
                         std::string* fingerprint = nullptr) {
  IdMap ids;
  bool saw_header = false;
  for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
    std::string where = path.string() + ":" + std::to_string(line_no);
    if (j.contains("header")) {
      saw_header = true;
      std::string variant = j.value("tfidf_variant", std::string());
      if (variant != kTfIdfVariant) {
        throw DataError(where + ": unsupported tf-idf variant '" + variant + "'");
      }
      if (fingerprint != nullptr) {
        *fingerprint = j.value("fingerprint", std::string());
      }
      return;
    }
    std::string item = detail::require_string_field(j, "item", where);
    std::vector<std::string> tokens =
        j.at("tokens").get<std::vector<std::string>>();
    if (tokens.empty()) throw DataError(where + ": empty token list");
    for (const auto& t : tokens) {
      bool clean = !t.empty() && t.find('-') == std::string::npos &&
                   t.find(' ') == std::string::npos &&
                   t.find('\t') == std::string::npos && t != "<end>";
      if (!clean) throw DataError(where + ": invalid token '" + t + "'");
    }
    std::string rendered = render_tokens(tokens);
    if (!ids.emplace(item, TextualId{item, std::move(tokens), rendered}).second) {
      throw DataError(where + ": duplicate item '" + item + "'");
    }
  });
  if (!saw_header) {
    throw DependencyError(path.string() + ": missing header record");
  }
  return ids;
}

}  // namespace chronorec

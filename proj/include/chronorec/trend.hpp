#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "chronorec/corpus.hpp"
#include "chronorec/decoding.hpp"
#include "chronorec/jsonl.hpp"

namespace chronorec {

// Windowed interaction counts near the recommendation day. The window is
// the day indices [t_rec - N - 1, t_rec - 1] inclusive; the recommendation
// day itself is excluded.
struct TrendTable {
  std::int64_t t_rec = 0;  // day index
  int window = 7;          // N
  std::map<std::string, std::int64_t> counts;
  std::int64_t r_max = 0;
};

inline TrendTable build_trend_table(std::span<const Interaction> events,
                                    std::int64_t t_rec_day, int window_days) {
  if (window_days < 1) throw UsageError("trend window N must be >= 1");
  TrendTable t;
  t.t_rec = t_rec_day;
  t.window = window_days;
  std::int64_t lo = t_rec_day - window_days - 1;
  std::int64_t hi = t_rec_day - 1;
  for (const auto& e : events) {
    std::int64_t d = day_index(e.timestamp);
    if (d >= lo && d <= hi) ++t.counts[e.item];
  }
  for (const auto& [item, r] : t.counts) t.r_max = std::max(t.r_max, r);
  return t;
}

// s_trend(i) = ln(r_i / r_max + 1); zero when r_i = 0, and zero for every
// item when r_max = 0.
inline double trend_score(const TrendTable& t, const std::string& item) {
  if (t.r_max == 0) return 0.0;
  auto it = t.counts.find(item);
  if (it == t.counts.end() || it->second == 0) return 0.0;
  return std::log(static_cast<double>(it->second) /
                      static_cast<double>(t.r_max) +
                  1.0);
}

struct RankedEntry {
  std::string item;
  double base_score = 0.0;  // beam or upstream score
  double trend_score = 0.0;
  double final_score = 0.0;
  bool in_catalog = true;
};

using RankedList = std::vector<RankedEntry>;

namespace detail {

// s_final = s_base + lambda * s_trend, stably re-sorted descending so a
// lambda of zero reproduces the input ordering exactly.
inline RankedList rerank_impl(std::span<const std::pair<std::string, double>> ranked,
                              const TrendTable& table, double lambda,
                              const std::set<std::string>* catalog) {
  if (lambda < 0) throw UsageError("lambda must be >= 0");
  RankedList out;
  out.reserve(ranked.size());
  for (const auto& [item, score] : ranked) {
    RankedEntry e;
    e.item = item;
    e.base_score = score;
    e.in_catalog = catalog == nullptr || catalog->count(item) > 0;
    e.trend_score = e.in_catalog ? trend_score(table, item) : 0.0;
    e.final_score = e.base_score + lambda * e.trend_score;
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedEntry& a, const RankedEntry& b) {
                     return a.final_score > b.final_score;
                   });
  return out;
}

}  // namespace detail

inline RankedList aggregate(std::span<const std::pair<std::string, double>> ranked,
                            const TrendTable& table, double lambda) {
  return detail::rerank_impl(ranked, table, lambda, nullptr);
}

inline RankedList aggregate(std::span<const ScoredItem> ranked,
                            const TrendTable& table, double lambda) {
  std::vector<std::pair<std::string, double>> pairs;
  pairs.reserve(ranked.size());
  for (const auto& s : ranked) pairs.emplace_back(s.item, s.score);
  return detail::rerank_impl(pairs, table, lambda, nullptr);
}

// Same arithmetic over candidates produced elsewhere; items outside the
// catalog count as zero-trend and are flagged.
inline RankedList rerank_external(
    std::span<const std::pair<std::string, double>> candidates,
    const TrendTable& table, double lambda,
    const std::set<std::string>* catalog = nullptr) {
  return detail::rerank_impl(candidates, table, lambda, catalog);
}

inline void save_trend_table(const std::filesystem::path& path,
                             const TrendTable& t) {
  json counts = json::object();
  for (const auto& [item, r] : t.counts) counts[item] = r;
  write_json_file(path, json{{"t_rec", t.t_rec},
                             {"N", t.window},
                             {"counts", std::move(counts)}});
}

inline TrendTable load_trend_table(const std::filesystem::path& path) {
  json doc = read_json_file(path);
  TrendTable t;
  t.t_rec = doc.at("t_rec").get<std::int64_t>();
  t.window = doc.at("N").get<int>();
  for (const auto& [item, r] : doc.at("counts").items()) {
    t.counts[item] = r.get<std::int64_t>();
    t.r_max = std::max(t.r_max, t.counts[item]);
  }
  return t;
}

}  // namespace chronorec

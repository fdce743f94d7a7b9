#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "chronorec/jsonl.hpp"
#include "chronorec/util.hpp"

namespace chronorec {

// One (user, item, timestamp) event. Timestamps are epoch seconds UTC.
struct Interaction {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;
};

struct ItemRecord {
  std::string item;
  std::string title;
  std::string brand;
  std::vector<std::string> categories;
  std::string description;
  std::string city;
};

// Per-user chronological history; timestamps non-decreasing.
struct UserSequence {
  std::string user;
  std::vector<std::string> items;
  std::vector<std::int64_t> timestamps;
};

// One held-out example: the prefix seen at inference time plus the target.
struct HeldOut {
  std::string user;
  std::vector<std::string> prefix_items;
  std::vector<std::int64_t> prefix_timestamps;
  std::string target;
  std::int64_t target_timestamp = 0;
};

// Leave-one-out split. Users with fewer than three interactions keep their
// whole sequence in train and are excluded from valid/test.
struct SplitDataset {
  std::vector<UserSequence> train;
  std::vector<HeldOut> valid;
  std::vector<HeldOut> test;
};

namespace detail {

inline std::int64_t require_int_field(const json& j, const char* field,
                                      const std::string& where) {
  if (!j.contains(field) || !j[field].is_number_integer()) {
    throw DataError(where + ": missing or non-integer field '" + field + "'");
  }
  return j[field].get<std::int64_t>();
}

inline std::string require_string_field(const json& j, const char* field,
                                        const std::string& where) {
  if (!j.contains(field) || !j[field].is_string() ||
      j[field].get<std::string>().empty()) {
    throw DataError(where + ": missing or empty string field '" +
                    std::string(field) + "'");
  }
  return j[field].get<std::string>();
}

}  // namespace detail

// Events file: JSON Lines with fields user, item, timestamp.
inline std::vector<Interaction> load_events(const std::filesystem::path& path) {
  std::vector<Interaction> events;
  for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
    std::string where = path.string() + ":" + std::to_string(line_no);
    Interaction e;
    e.user = detail::require_string_field(j, "user", where);
    e.item = detail::require_string_field(j, "item", where);
    e.timestamp = detail::require_int_field(j, "timestamp", where);
    if (e.timestamp < 0) throw DataError(where + ": negative timestamp");
    events.push_back(std::move(e));
  });
  return events;
}

inline void save_events(const std::filesystem::path& path,
                        const std::vector<Interaction>& events) {
  JsonlWriter out(path);
  for (const auto& e : events) {
    out.write(json{{"user", e.user}, {"item", e.item}, {"timestamp", e.timestamp}});
  }
}

// Metadata file: JSON Lines with fields item, title, brand, categories,
// description, city. All text fields optional except item.
inline std::vector<ItemRecord> load_catalog(const std::filesystem::path& path) {
  std::vector<ItemRecord> catalog;
  std::set<std::string> seen;
  for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
    std::string where = path.string() + ":" + std::to_string(line_no);
    ItemRecord r;
    r.item = detail::require_string_field(j, "item", where);
    if (!seen.insert(r.item).second) {
      throw DataError(where + ": duplicate item '" + r.item + "'");
    }
    auto opt_string = [&](const char* field) -> std::string {
      if (!j.contains(field) || j[field].is_null()) return {};
      if (!j[field].is_string()) {
        throw DataError(where + ": field '" + std::string(field) +
                        "' must be a string");
      }
      return j[field].get<std::string>();
    };
    r.title = opt_string("title");
    r.brand = opt_string("brand");
    r.description = opt_string("description");
    r.city = opt_string("city");
    if (j.contains("categories") && !j["categories"].is_null()) {
      if (!j["categories"].is_array()) {
        throw DataError(where + ": field 'categories' must be an array");
      }
      for (const auto& c : j["categories"]) {
        if (!c.is_string()) {
          throw DataError(where + ": categories entries must be strings");
        }
        r.categories.push_back(c.get<std::string>());
      }
    }
    catalog.push_back(std::move(r));
  });
  return catalog;
}

inline void save_catalog(const std::filesystem::path& path,
                         const std::vector<ItemRecord>& catalog) {
  JsonlWriter out(path);
  for (const auto& r : catalog) {
    out.write(json{{"item", r.item},
                   {"title", r.title},
                   {"brand", r.brand},
                   {"categories", r.categories},
                   {"description", r.description},
                   {"city", r.city}});
  }
}

// Iteratively removes users and items with fewer than k interactions until
// every survivor has at least k. Input order is preserved.
inline std::vector<Interaction> k_core_filter(
    const std::vector<Interaction>& events, int k) {
  if (k < 1) throw UsageError("k_core_filter requires k >= 1");
  std::vector<char> alive(events.size(), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, int> user_count;
    std::unordered_map<std::string, int> item_count;
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (!alive[i]) continue;
      ++user_count[events[i].user];
      ++item_count[events[i].item];
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (!alive[i]) continue;
      if (user_count[events[i].user] < k || item_count[events[i].item] < k) {
        alive[i] = 0;
        changed = true;
      }
    }
  }
  std::vector<Interaction> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (alive[i]) out.push_back(events[i]);
  }
  return out;
}

// One sequence per user, ascending by timestamp, ties in input order.
// Sequences come out sorted by user id.
inline std::vector<UserSequence> build_sequences(
    const std::vector<Interaction>& events) {
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < events.size(); ++i) {
    by_user[events[i].user].push_back(i);
  }
  std::vector<UserSequence> out;
  out.reserve(by_user.size());
  for (auto& [user, idx] : by_user) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return events[a].timestamp < events[b].timestamp;
    });
    UserSequence seq;
    seq.user = user;
    seq.items.reserve(idx.size());
    seq.timestamps.reserve(idx.size());
    for (std::size_t i : idx) {
      seq.items.push_back(events[i].item);
      seq.timestamps.push_back(events[i].timestamp);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

// Last item held out for test, second-last for validation, remainder for
// train. Sequences shorter than three go to train whole.
inline SplitDataset leave_one_out_split(
    const std::vector<UserSequence>& sequences) {
  SplitDataset split;
  for (const auto& seq : sequences) {
    std::size_t n = seq.items.size();
    if (n < 3) {
      split.train.push_back(seq);
      continue;
    }
    UserSequence train;
    train.user = seq.user;
    train.items.assign(seq.items.begin(), seq.items.end() - 2);
    train.timestamps.assign(seq.timestamps.begin(), seq.timestamps.end() - 2);
    split.train.push_back(std::move(train));

    HeldOut valid;
    valid.user = seq.user;
    valid.prefix_items.assign(seq.items.begin(), seq.items.end() - 2);
    valid.prefix_timestamps.assign(seq.timestamps.begin(),
                                   seq.timestamps.end() - 2);
    valid.target = seq.items[n - 2];
    valid.target_timestamp = seq.timestamps[n - 2];
    split.valid.push_back(std::move(valid));

    HeldOut test;
    test.user = seq.user;
    test.prefix_items.assign(seq.items.begin(), seq.items.end() - 1);
    test.prefix_timestamps.assign(seq.timestamps.begin(),
                                  seq.timestamps.end() - 1);
    test.target = seq.items[n - 1];
    test.target_timestamp = seq.timestamps[n - 1];
    split.test.push_back(std::move(test));
  }
  return split;
}

enum class IntervalGroup { Short, Middle, Long };

inline const char* interval_group_name(IntervalGroup g) {
  switch (g) {
    case IntervalGroup::Short: return "Short";
    case IntervalGroup::Middle: return "Middle";
    case IntervalGroup::Long: return "Long";
  }
  return "?";
}

inline std::int64_t heldout_delta_days(const HeldOut& h) {
  if (h.prefix_timestamps.empty()) {
    throw DataError("held-out example for user '" + h.user +
                    "' has an empty prefix");
  }
  std::int64_t delta =
      day_index(h.target_timestamp) - day_index(h.prefix_timestamps.back());
  if (delta < 0) {
    throw DataError("user '" + h.user +
                    "': target precedes history (timestamp ordering violated)");
  }
  return delta;
}

// Groups held-out users by the day gap between their last history event and
// the target. Explicit boundaries (b1 < b2, inclusive on the left group) or
// tertiles over the observed gaps when absent.
inline std::map<std::string, IntervalGroup> interval_group(
    const std::vector<HeldOut>& heldouts,
    std::optional<std::pair<std::int64_t, std::int64_t>> boundaries = {}) {
  std::map<std::string, IntervalGroup> out;
  if (heldouts.empty()) return out;
  std::vector<std::int64_t> deltas;
  deltas.reserve(heldouts.size());
  for (const auto& h : heldouts) deltas.push_back(heldout_delta_days(h));

  std::int64_t b1 = 0;
  std::int64_t b2 = 0;
  if (boundaries) {
    b1 = boundaries->first;
    b2 = boundaries->second;
    if (b1 >= b2) throw UsageError("interval boundaries must satisfy b1 < b2");
  } else {
    std::vector<std::int64_t> sorted = deltas;
    std::sort(sorted.begin(), sorted.end());
    std::size_t n = sorted.size();
    std::size_t i1 = (n + 2) / 3;      // ceil(n/3)
    std::size_t i2 = (2 * n + 2) / 3;  // ceil(2n/3)
    b1 = sorted[i1 > 0 ? i1 - 1 : 0];
    b2 = sorted[i2 > 0 ? i2 - 1 : 0];
  }
  for (std::size_t i = 0; i < heldouts.size(); ++i) {
    std::int64_t d = deltas[i];
    IntervalGroup g = d <= b1 ? IntervalGroup::Short
                    : d <= b2 ? IntervalGroup::Middle
                              : IntervalGroup::Long;
    out[heldouts[i].user] = g;
  }
  return out;
}

inline std::map<std::string, IntervalGroup> interval_group(
    const SplitDataset& split,
    std::optional<std::pair<std::int64_t, std::int64_t>> boundaries = {}) {
  return interval_group(split.test, boundaries);
}

// Splits artifact: JSON Lines, one header record then one record per row
// with role in {train, valid, test}.
inline void save_splits(const std::filesystem::path& path,
                        const SplitDataset& split,
                        const std::string& fingerprint) {
  JsonlWriter out(path);
  out.write(json{{"role", "header"}, {"fingerprint", fingerprint}});
  for (const auto& seq : split.train) {
    out.write(json{{"role", "train"},
                   {"user", seq.user},
                   {"items", seq.items},
                   {"timestamps", seq.timestamps}});
  }
  auto write_heldout = [&](const char* role, const HeldOut& h) {
    out.write(json{{"role", role},
                   {"user", h.user},
                   {"items", h.prefix_items},
                   {"timestamps", h.prefix_timestamps},
                   {"target", h.target},
                   {"target_timestamp", h.target_timestamp}});
  };
  for (const auto& h : split.valid) write_heldout("valid", h);
  for (const auto& h : split.test) write_heldout("test", h);
}

inline SplitDataset load_splits(const std::filesystem::path& path,
                                std::string* fingerprint = nullptr) {
  SplitDataset split;
  bool saw_header = false;
  for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
    std::string where = path.string() + ":" + std::to_string(line_no);
    std::string role = detail::require_string_field(j, "role", where);
    if (role == "header") {
      saw_header = true;
      if (fingerprint != nullptr) {
        *fingerprint = j.value("fingerprint", std::string());
      }
      return;
    }
    std::vector<std::string> items = j.at("items").get<std::vector<std::string>>();
    std::vector<std::int64_t> ts =
        j.at("timestamps").get<std::vector<std::int64_t>>();
    if (items.size() != ts.size()) {
      throw DataError(where + ": items/timestamps length mismatch");
    }
    std::string user = detail::require_string_field(j, "user", where);
    if (role == "train") {
      split.train.push_back({user, std::move(items), std::move(ts)});
    } else if (role == "valid" || role == "test") {
      HeldOut h;
      h.user = user;
      h.prefix_items = std::move(items);
      h.prefix_timestamps = std::move(ts);
      h.target = detail::require_string_field(j, "target", where);
      h.target_timestamp = detail::require_int_field(j, "target_timestamp", where);
      (role == "valid" ? split.valid : split.test).push_back(std::move(h));
    } else {
      throw DataError(where + ": unknown role '" + role + "'");
    }
  });
  if (!saw_header) {
    throw DependencyError(path.string() + ": missing header record");
  }
  return split;
}

// All train interactions, flattened; optionally the validation targets too.
inline std::vector<Interaction> flatten_train_events(
    const SplitDataset& split, bool include_valid_targets = false) {
  std::vector<Interaction> events;
  for (const auto& seq : split.train) {
    for (std::size_t i = 0; i < seq.items.size(); ++i) {
      events.push_back({seq.user, seq.items[i], seq.timestamps[i]});
    }
  }
  if (include_valid_targets) {
    for (const auto& h : split.valid) {
      events.push_back({h.user, h.target, h.target_timestamp});
    }
  }
  return events;
}

}  // namespace chronorec

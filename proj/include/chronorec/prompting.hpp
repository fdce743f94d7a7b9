#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "chronorec/identifiers.hpp"
#include "chronorec/transition.hpp"
#include "chronorec/util.hpp"

namespace chronorec {

// The six user-level temporal context forms.
enum class PromptVariant {
  none,
  absolute,
  relative,
  target_relative,
  relative_absolute,
  target_relative_absolute,
};

inline const char* variant_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::none: return "none";
    case PromptVariant::absolute: return "absolute";
    case PromptVariant::relative: return "relative";
    case PromptVariant::target_relative: return "target_relative";
    case PromptVariant::relative_absolute: return "relative_absolute";
    case PromptVariant::target_relative_absolute: return "target_relative_absolute";
  }
  return "?";
}

inline PromptVariant parse_variant(const std::string& name) {
  for (PromptVariant v :
       {PromptVariant::none, PromptVariant::absolute, PromptVariant::relative,
        PromptVariant::target_relative, PromptVariant::relative_absolute,
        PromptVariant::target_relative_absolute}) {
    if (name == variant_name(v)) return v;
  }
  throw UsageError("unknown prompt variant '" + name + "'");
}

// True when the variant carries intervals relative to the inference time,
// the signal the builtin scorer uses for history recency weighting.
inline bool variant_has_target_relative(PromptVariant v) {
  return v == PromptVariant::target_relative ||
         v == PromptVariant::target_relative_absolute;
}

// ISO calendar date of a day index relative to the Unix epoch.
inline std::string format_date(std::int64_t day_idx) {
  if (day_idx < 0) throw DataError("format_date: negative day index");
  std::chrono::year_month_day ymd{
      std::chrono::sys_days{std::chrono::days{day_idx}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

// "same day" for zero, otherwise largest-unit-first with zero components
// omitted. Fixed units: year = 365 days, month = 30 days.
inline std::string format_interval(std::int64_t days) {
  if (days < 0) throw DataError("format_interval: negative interval");
  if (days == 0) return "same day";
  std::int64_t years = days / 365;
  std::int64_t rem = days % 365;
  std::int64_t months = rem / 30;
  std::int64_t rest = rem % 30;
  std::vector<std::string> parts;
  if (years > 0) parts.push_back(std::to_string(years) + " years");
  if (months > 0) parts.push_back(std::to_string(months) + " months");
  if (rest > 0) parts.push_back(std::to_string(rest) + " days");
  return join(parts, ", ");
}

struct NeighborLine {
  std::string item;
  std::string rendered;
  std::vector<std::string> neighbor_ids;  // rendered, descending probability
};

// Structured view behind both rendered contexts. items/days are
// chronological and already truncated to the sequence-length cap;
// transition_lines are most-recent-first.
struct PromptFeatures {
  std::string user;
  std::vector<std::string> items;
  std::vector<std::string> rendered;
  std::vector<std::int64_t> days;
  std::int64_t inference_day = 0;
  PromptVariant variant = PromptVariant::target_relative_absolute;
  bool most_recent_first = true;
  std::vector<NeighborLine> transition_lines;
};

struct PromptPair {
  std::string c_u;
  std::string c_v;
  PromptFeatures features;
};

struct PromptOptions {
  PromptVariant variant = PromptVariant::target_relative_absolute;
  int max_seq_len = 20;
  int last_l = 2;
  int top_k = 3;
  bool most_recent_first = true;
};

// Assembles the structured features for one user: truncates the history to
// the most recent max_seq_len items, resolves rendered IDs, and attaches
// top-k neighbor sets for the last L items.
inline PromptFeatures build_features(
    const std::string& user, std::span<const std::string> items,
    std::span<const std::int64_t> timestamps, std::int64_t inference_timestamp,
    const IdMap& ids, const TransitionGraph& graph, const DecayParams& decay,
    const PromptOptions& opt) {
  if (items.size() != timestamps.size()) {
    throw DataError("build_features: items/timestamps length mismatch");
  }
  if (opt.max_seq_len < 1) throw UsageError("max_seq_len must be >= 1");

  PromptFeatures f;
  f.user = user;
  f.variant = opt.variant;
  f.most_recent_first = opt.most_recent_first;
  f.inference_day = day_index(inference_timestamp);

  std::size_t keep = std::min(items.size(), static_cast<std::size_t>(opt.max_seq_len));
  std::size_t start = items.size() - keep;
  auto rendered_of = [&](const std::string& item) -> const std::string& {
    auto it = ids.find(item);
    if (it == ids.end()) {
      throw DataError("item '" + item + "' has no assigned textual ID");
    }
    return it->second.rendered;
  };
  for (std::size_t i = start; i < items.size(); ++i) {
    f.items.push_back(items[i]);
    f.rendered.push_back(rendered_of(items[i]));
    f.days.push_back(day_index(timestamps[i]));
  }

  std::size_t lines = std::min(f.items.size(), static_cast<std::size_t>(opt.last_l));
  for (std::size_t n = 0; n < lines; ++n) {
    std::size_t idx = f.items.size() - 1 - n;  // most recent first
    NeighborLine line;
    line.item = f.items[idx];
    line.rendered = f.rendered[idx];
    auto neighbors = top_k_neighbors(
        graph, line.item, opt.top_k, decay,
        [&](const std::string& item) { return rendered_of(item); });
    for (const auto& n2 : neighbors) {
      line.neighbor_ids.push_back(rendered_of(n2.item));
    }
    f.transition_lines.push_back(std::move(line));
  }
  return f;
}

// Exact text of the user-level context for the chosen variant.
inline std::string render_user_context(const PromptFeatures& f) {
  if (f.items.empty()) throw DataError("render_user_context: empty history");
  std::size_t n = f.items.size();

  auto gap_to_next = [&](std::size_t i) { return f.days[i + 1] - f.days[i]; };
  auto target_gap = [&](std::size_t i) {
    std::int64_t gap = f.inference_day - f.days[i];
    if (gap < 0) {
      throw DataError("render_user_context: inference day precedes history");
    }
    return gap;
  };

  std::vector<std::string> parts(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string annotation;
    switch (f.variant) {
      case PromptVariant::none:
        break;
      case PromptVariant::absolute:
        annotation = " (" + format_date(f.days[i]) + ")";
        break;
      case PromptVariant::relative:
        if (i + 1 < n) {
          annotation = " (after " + format_interval(gap_to_next(i)) + ")";
        }
        break;
      case PromptVariant::target_relative:
        annotation = " (" + format_interval(target_gap(i)) + " ago)";
        break;
      case PromptVariant::relative_absolute:
        if (i + 1 < n) {
          annotation = " (" + format_date(f.days[i]) + ", after " +
                       format_interval(gap_to_next(i)) + ")";
        } else {
          annotation = " (" + format_date(f.days[i]) + ")";
        }
        break;
      case PromptVariant::target_relative_absolute:
        annotation = " (" + format_date(f.days[i]) + ", " +
                     format_interval(target_gap(i)) + " ago)";
        break;
    }
    parts[i] = f.rendered[i] + annotation;
  }
  if (f.most_recent_first) {
    std::reverse(parts.begin(), parts.end());
  }

  std::string text;
  if (f.variant == PromptVariant::target_relative_absolute) {
    text = "The current date is " + format_date(f.inference_day) + ". ";
  }
  text += "What would the user purchase after " + join(parts, ", ") + " ?";
  return text;
}

// Item-level transition context: one line per recent item, most recent
// first. An empty neighbor set still renders its line.
inline std::string render_transition_context(const PromptFeatures& f) {
  std::vector<std::string> lines;
  lines.reserve(f.transition_lines.size());
  for (const auto& line : f.transition_lines) {
    lines.push_back("After " + line.rendered + ", users often buy: " +
                    join(line.neighbor_ids, " ") + ".");
  }
  return join(lines, "\n");
}

inline PromptPair make_prompt_pair(const PromptFeatures& f) {
  return PromptPair{render_user_context(f), render_transition_context(f), f};
}

}  // namespace chronorec

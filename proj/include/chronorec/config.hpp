#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "chronorec/error.hpp"
#include "chronorec/jsonl.hpp"
#include "chronorec/prompting.hpp"
#include "chronorec/transition.hpp"
#include "chronorec/util.hpp"

namespace chronorec {

// Tuning grids the defaults were drawn from. Values outside them are legal
// only with allow_out_of_grid, so accidental drift from the studied ranges
// is loud.
namespace grids {
inline constexpr double kEpsilon[] = {1e-3, 1e-2, 1e-1, 1.0};
inline constexpr int kTopK[] = {1, 3, 5, 10};
inline constexpr int kLastL[] = {1, 2, 3, 4, 5, 7};
inline constexpr int kTrendWindow[] = {7, 30, 180, 360};
inline constexpr double kTauMin = 128.0, kTauMax = 2048.0;
inline constexpr double kCMin = 0.8, kCMax = 1.0;
inline constexpr double kLambdaMin = 0.0, kLambdaMax = 1.0;
}  // namespace grids

struct EngineConfig {
  // Inputs and artifact locations.
  std::string events = "events.jsonl";
  std::string metadata = "metadata.jsonl";
  std::string artifacts = "artifacts";
  std::string stopwords;  // optional stopword file

  // Transition graph decay.
  double tau = 128.0;
  double c = 0.9;
  // History-side decay for the builtin scorer.
  double user_tau = 128.0;
  double user_c = 0.9;

  double epsilon = 0.01;  // transition-context weight
  double lambda = 0.1;    // trend weight
  int top_k = 3;          // neighbors per item in the transition context
  int last_l = 2;         // L: recent items used for transitions
  int trend_window = 7;   // N
  int beam_width = 20;    // B
  int n_keywords = 5;
  int max_seq_len = 20;
  int k_core = 5;
  double delta_pop = 1e-3;
  double delta_floor = 1e-9;

  std::string variant = "target_relative_absolute";
  std::string boundaries = "tertile";  // or "b1,b2" in days
  std::string cutoffs = "5,10";
  std::uint64_t seed = 42;

  bool chronological = false;        // prompt history order (default reverse)
  bool include_valid_trend = false;  // count validation events in trend windows
  bool exact = false;                // full ranking instead of beam search
  bool self_transitions = true;
  bool allow_out_of_grid = false;
  int threads = 1;

  // gen-synthetic shape.
  int syn_users = 2000;
  int syn_items = 300;
  int syn_clusters = 10;

  PromptVariant variant_enum() const { return parse_variant(variant); }

  DecayParams graph_decay() const { return {tau, c}; }
  DecayParams history_decay() const { return {user_tau, user_c}; }

  std::optional<std::pair<std::int64_t, std::int64_t>> boundaries_opt() const {
    if (boundaries == "tertile") return std::nullopt;
    auto parts = split(boundaries, ',');
    if (parts.size() != 2) {
      throw UsageError("boundaries must be 'tertile' or 'b1,b2' in days");
    }
    try {
      std::int64_t b1 = std::stoll(parts[0]);
      std::int64_t b2 = std::stoll(parts[1]);
      if (b1 >= b2) throw UsageError("boundaries must satisfy b1 < b2");
      return std::make_pair(b1, b2);
    } catch (const std::invalid_argument&) {
      throw UsageError("boundaries must be 'tertile' or 'b1,b2' in days");
    }
  }

  std::vector<int> cutoff_list() const {
    std::vector<int> out;
    for (const auto& part : split(cutoffs, ',')) {
      try {
        out.push_back(std::stoi(part));
      } catch (const std::invalid_argument&) {
        throw UsageError("cutoffs must be a comma-separated integer list");
      }
      if (out.back() < 1) throw UsageError("cutoffs must be >= 1");
    }
    if (out.empty()) throw UsageError("cutoffs must be non-empty");
    return out;
  }

  void apply(const std::string& key, const std::string& value);
  void validate() const;
  std::string canonical() const;

  static EngineConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path.string());
    EngineConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
        if (blank) continue;
        throw UsageError(path.string() + ":" + std::to_string(line_no) +
                         ": expected 'key = value'");
      }
      auto trim = [](std::string s) {
        std::size_t b = s.find_first_not_of(" \t\r");
        std::size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
  }
};

namespace detail {

inline std::string canon_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw UsageError("config key '" + key + "': expected a boolean, got '" +
                   value + "'");
}

template <typename T, std::size_t N>
inline bool in_grid(T value, const T (&grid)[N], double tol = 0.0) {
  for (const T& g : grid) {
    if (tol > 0 ? std::abs(static_cast<double>(value) - static_cast<double>(g)) <= tol
                : value == g) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline void EngineConfig::apply(const std::string& key, const std::string& value) {
  auto as_double = [&] {
    try {
      return std::stod(value);
    } catch (const std::invalid_argument&) {
      throw UsageError("config key '" + key + "': expected a number");
    }
  };
  auto as_int = [&] {
    try {
      return std::stoi(value);
    } catch (const std::invalid_argument&) {
      throw UsageError("config key '" + key + "': expected an integer");
    }
  };
  if (key == "events") events = value;
  else if (key == "metadata") metadata = value;
  else if (key == "artifacts") artifacts = value;
  else if (key == "stopwords") stopwords = value;
  else if (key == "tau") tau = as_double();
  else if (key == "c") c = as_double();
  else if (key == "user_tau") user_tau = as_double();
  else if (key == "user_c") user_c = as_double();
  else if (key == "epsilon") epsilon = as_double();
  else if (key == "lambda") lambda = as_double();
  else if (key == "top_k") top_k = as_int();
  else if (key == "last_l") last_l = as_int();
  else if (key == "trend_window") trend_window = as_int();
  else if (key == "beam_width") beam_width = as_int();
  else if (key == "n_keywords") n_keywords = as_int();
  else if (key == "max_seq_len") max_seq_len = as_int();
  else if (key == "k_core") k_core = as_int();
  else if (key == "delta_pop") delta_pop = as_double();
  else if (key == "delta_floor") delta_floor = as_double();
  else if (key == "variant") variant = value;
  else if (key == "boundaries") boundaries = value;
  else if (key == "cutoffs") cutoffs = value;
  else if (key == "seed") seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "chronological") chronological = detail::parse_bool(value, key);
  else if (key == "include_valid_trend") include_valid_trend = detail::parse_bool(value, key);
  else if (key == "exact") exact = detail::parse_bool(value, key);
  else if (key == "self_transitions") self_transitions = detail::parse_bool(value, key);
  else if (key == "allow_out_of_grid") allow_out_of_grid = detail::parse_bool(value, key);
  else if (key == "threads") threads = as_int();
  else if (key == "syn_users") syn_users = as_int();
  else if (key == "syn_items") syn_items = as_int();
  else if (key == "syn_clusters") syn_clusters = as_int();
  else throw UsageError("unknown config key '" + key + "'");
}

inline void EngineConfig::validate() const {
  // Hard invariants first.
  if (!(tau > 0) || !(user_tau > 0)) throw UsageError("tau must be > 0");
  if (c < 0 || c > 1 || user_c < 0 || user_c > 1) {
    throw UsageError("decay floor c must be in [0, 1]");
  }
  if (epsilon < 0) throw UsageError("epsilon must be >= 0");
  if (lambda < 0) throw UsageError("lambda must be >= 0");
  if (!(delta_floor > 0)) throw UsageError("delta_floor must be > 0");
  if (delta_pop < 0) throw UsageError("delta_pop must be >= 0");
  if (max_seq_len < 1) throw UsageError("max_seq_len must be >= 1");
  if (n_keywords < 1) throw UsageError("n_keywords must be >= 1");
  if (k_core < 1) throw UsageError("k_core must be >= 1");
  if (beam_width < 1) throw UsageError("beam_width must be >= 1");
  if (trend_window < 1) throw UsageError("trend_window must be >= 1");
  if (top_k < 1) throw UsageError("top_k must be >= 1");
  if (last_l < 1) throw UsageError("last_l must be >= 1");
  if (threads < 1) throw UsageError("threads must be >= 1");
  parse_variant(variant);
  boundaries_opt();
  cutoff_list();

  if (allow_out_of_grid) return;
  auto out_of_grid = [](const std::string& key) -> void {
    throw UsageError("hyperparameter '" + key +
                     "' is outside the tuning grid; set allow_out_of_grid "
                     "(--allow-out-of-grid) to override");
  };
  if (!detail::in_grid(epsilon, grids::kEpsilon, 1e-12)) out_of_grid("epsilon");
  if (!detail::in_grid(top_k, grids::kTopK)) out_of_grid("top_k");
  if (!detail::in_grid(last_l, grids::kLastL)) out_of_grid("last_l");
  if (!detail::in_grid(trend_window, grids::kTrendWindow)) out_of_grid("trend_window");
  if (tau < grids::kTauMin || tau > grids::kTauMax) out_of_grid("tau");
  if (user_tau < grids::kTauMin || user_tau > grids::kTauMax) out_of_grid("user_tau");
  if (c < grids::kCMin || c > grids::kCMax) out_of_grid("c");
  if (user_c < grids::kCMin || user_c > grids::kCMax) out_of_grid("user_c");
  if (lambda < grids::kLambdaMin || lambda > grids::kLambdaMax) out_of_grid("lambda");
}

// Canonical form of every result-affecting setting. Paths are excluded
// (their content is hashed separately) and so is the thread count.
inline std::string EngineConfig::canonical() const {
  std::string s;
  auto add = [&](const char* key, const std::string& value) {
    s += key;
    s += '=';
    s += value;
    s += '\n';
  };
  add("tau", detail::canon_double(tau));
  add("c", detail::canon_double(c));
  add("user_tau", detail::canon_double(user_tau));
  add("user_c", detail::canon_double(user_c));
  add("epsilon", detail::canon_double(epsilon));
  add("lambda", detail::canon_double(lambda));
  add("top_k", std::to_string(top_k));
  add("last_l", std::to_string(last_l));
  add("trend_window", std::to_string(trend_window));
  add("beam_width", std::to_string(beam_width));
  add("n_keywords", std::to_string(n_keywords));
  add("max_seq_len", std::to_string(max_seq_len));
  add("k_core", std::to_string(k_core));
  add("delta_pop", detail::canon_double(delta_pop));
  add("delta_floor", detail::canon_double(delta_floor));
  add("variant", variant);
  add("boundaries", boundaries);
  add("cutoffs", cutoffs);
  add("seed", std::to_string(seed));
  add("chronological", chronological ? "true" : "false");
  add("include_valid_trend", include_valid_trend ? "true" : "false");
  add("exact", exact ? "true" : "false");
  add("self_transitions", self_transitions ? "true" : "false");
  add("syn_users", std::to_string(syn_users));
  add("syn_items", std::to_string(syn_items));
  add("syn_clusters", std::to_string(syn_clusters));
  return s;
}

// Pipeline fingerprint: canonical config plus the content of the raw
// inputs. Everything downstream embeds it, so artifacts from different
// configurations or datasets cannot be mixed silently.
inline std::string compute_fingerprint(const EngineConfig& cfg) {
  std::uint64_t h = fnv1a64(cfg.canonical());
  h = fnv1a64(read_file_bytes(cfg.events), h);
  h = fnv1a64(read_file_bytes(cfg.metadata), h);
  if (!cfg.stopwords.empty()) {
    h = fnv1a64(read_file_bytes(cfg.stopwords), h);
  }
  return hex64(h);
}

}  // namespace chronorec

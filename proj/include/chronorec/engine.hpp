#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chronorec/config.hpp"
#include "chronorec/corpus.hpp"
#include "chronorec/decoding.hpp"
#include "chronorec/evaluation.hpp"
#include "chronorec/identifiers.hpp"
#include "chronorec/prompting.hpp"
#include "chronorec/scoring.hpp"
#include "chronorec/synthetic.hpp"
#include "chronorec/transition.hpp"
#include "chronorec/trend.hpp"
#include "chronorec/trie.hpp"

namespace chronorec::engine {

namespace fs = std::filesystem;

struct ArtifactPaths {
  fs::path dir;

  explicit ArtifactPaths(const EngineConfig& cfg) : dir(cfg.artifacts) {}

  fs::path splits() const { return dir / "splits.jsonl"; }
  fs::path ids() const { return dir / "ids.jsonl"; }
  fs::path graph() const { return dir / "graph.json"; }
  fs::path model() const { return dir / "model.json"; }
  fs::path report() const { return dir / "report.json"; }
  fs::path recommendations() const { return dir / "recommendations.jsonl"; }
  fs::path prompts() const { return dir / "prompts.jsonl"; }
  fs::path ablation() const { return dir / "ablation.json"; }
  fs::path ablation_csv() const { return dir / "ablation.csv"; }
  fs::path reranked() const { return dir / "reranked.jsonl"; }
  fs::path trend_table() const { return dir / "trend_table.json"; }
};

inline PromptOptions prompt_options(const EngineConfig& cfg) {
  PromptOptions opt;
  opt.variant = cfg.variant_enum();
  opt.max_seq_len = cfg.max_seq_len;
  opt.last_l = cfg.last_l;
  opt.top_k = cfg.top_k;
  opt.most_recent_first = !cfg.chronological;
  return opt;
}

inline ScoringConfig scoring_config(const EngineConfig& cfg) {
  ScoringConfig s;
  s.epsilon = cfg.epsilon;
  s.last_l = cfg.last_l;
  s.delta_pop = cfg.delta_pop;
  s.delta_floor = cfg.delta_floor;
  s.history_decay = cfg.history_decay();
  s.transition_decay = cfg.graph_decay();
  return s;
}

namespace detail {

inline void require_artifact(const fs::path& path, const char* producer) {
  if (!fs::exists(path)) {
    throw DependencyError("artifact " + path.string() + " not found; run `" +
                          std::string(producer) + "` first");
  }
}

inline void check_fingerprint(const std::string& found,
                              const std::string& expected,
                              const fs::path& path, bool force) {
  if (force || found == expected) return;
  throw DependencyError(
      "fingerprint mismatch for " + path.string() + " (artifact " + found +
      ", config " + expected + "); rebuild the pipeline or pass --force");
}

inline std::string file_checksum(const fs::path& path) {
  return hex64(fnv1a64(read_file_bytes(path)));
}

inline std::set<std::string> split_items(const SplitDataset& split) {
  std::set<std::string> items;
  for (const auto& seq : split.train) {
    items.insert(seq.items.begin(), seq.items.end());
  }
  for (const auto* part : {&split.valid, &split.test}) {
    for (const auto& h : *part) {
      items.insert(h.prefix_items.begin(), h.prefix_items.end());
      items.insert(h.target);
    }
  }
  return items;
}

}  // namespace detail

// Loads the metadata records for exactly the items surviving preprocessing.
inline std::vector<ItemRecord> catalog_for_split(const EngineConfig& cfg,
                                                 const SplitDataset& split) {
  std::set<std::string> wanted = detail::split_items(split);
  std::vector<ItemRecord> catalog;
  for (auto& r : load_catalog(cfg.metadata)) {
    if (wanted.count(r.item)) catalog.push_back(std::move(r));
  }
  if (catalog.size() != wanted.size()) {
    std::set<std::string> have;
    for (const auto& r : catalog) have.insert(r.item);
    std::string missing;
    for (const auto& item : wanted) {
      if (!have.count(item)) missing += (missing.empty() ? "" : ", ") + item;
    }
    throw DataError("items missing from metadata: " + missing);
  }
  return catalog;
}

inline SplitDataset load_splits_checked(const EngineConfig& cfg,
                                        const std::string& expected,
                                        bool force) {
  ArtifactPaths paths(cfg);
  detail::require_artifact(paths.splits(), "preprocess");
  std::string fp;
  SplitDataset split = load_splits(paths.splits(), &fp);
  detail::check_fingerprint(fp, expected, paths.splits(), force);
  return split;
}

inline IdMap load_ids_checked(const EngineConfig& cfg,
                              const std::string& expected, bool force) {
  ArtifactPaths paths(cfg);
  detail::require_artifact(paths.ids(), "assign-ids");
  std::string fp;
  IdMap ids = load_id_map(paths.ids(), &fp);
  detail::check_fingerprint(fp, expected, paths.ids(), force);
  return ids;
}

inline TransitionGraph load_graph_checked(const EngineConfig& cfg,
                                          const std::string& expected,
                                          bool force) {
  ArtifactPaths paths(cfg);
  detail::require_artifact(paths.graph(), "build-graph");
  std::string fp;
  TransitionGraph graph = load_graph(paths.graph(), &fp);
  detail::check_fingerprint(fp, expected, paths.graph(), force);
  return graph;
}

inline std::set<std::string> load_stopword_set(const EngineConfig& cfg) {
  if (cfg.stopwords.empty()) return builtin_stopwords();
  return load_stopwords(cfg.stopwords);
}

// ---- commands -----------------------------------------------------------

inline void run_gen_synthetic(const EngineConfig& cfg) {
  write_synthetic(cfg);
}

struct PreprocessStats {
  std::size_t raw_events = 0;
  std::size_t kept_events = 0;
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t eligible_users = 0;  // with valid/test targets
};

inline PreprocessStats run_preprocess(const EngineConfig& cfg) {
  ArtifactPaths paths(cfg);
  fs::create_directories(paths.dir);
  std::string fingerprint = compute_fingerprint(cfg);

  PreprocessStats stats;
  std::vector<Interaction> raw = load_events(cfg.events);
  stats.raw_events = raw.size();
  std::vector<Interaction> kept = k_core_filter(raw, cfg.k_core);
  stats.kept_events = kept.size();
  if (kept.empty()) throw DataError("no events survive k-core filtering");
  std::vector<UserSequence> sequences = build_sequences(kept);
  stats.users = sequences.size();
  SplitDataset split = leave_one_out_split(sequences);
  stats.items = detail::split_items(split).size();
  stats.eligible_users = split.test.size();
  save_splits(paths.splits(), split, fingerprint);
  return stats;
}

inline void run_assign_ids(const EngineConfig& cfg, bool force = false) {
  ArtifactPaths paths(cfg);
  std::string fingerprint = compute_fingerprint(cfg);
  SplitDataset split = load_splits_checked(cfg, fingerprint, force);
  std::vector<ItemRecord> catalog = catalog_for_split(cfg, split);
  auto vectors = compute_tf_idf(catalog, load_stopword_set(cfg));
  IdMap ids = assign_textual_ids(vectors, cfg.n_keywords);
  save_id_map(paths.ids(), ids, cfg.n_keywords, fingerprint);
}

inline void run_build_graph(const EngineConfig& cfg, bool force = false) {
  ArtifactPaths paths(cfg);
  std::string fingerprint = compute_fingerprint(cfg);
  SplitDataset split = load_splits_checked(cfg, fingerprint, force);
  TransitionGraph graph = build_graph(split.train, cfg.self_transitions);
  save_graph(paths.graph(), graph, fingerprint);
}

// Everything downstream commands need, rebuilt from the artifacts.
struct Pipeline {
  std::string fingerprint;
  SplitDataset split;
  IdMap ids;
  TransitionGraph graph;
  IdTrie trie;
  BuiltinScorer scorer;
};

inline Pipeline load_pipeline(const EngineConfig& cfg, bool force = false) {
  Pipeline p;
  p.fingerprint = compute_fingerprint(cfg);
  p.split = load_splits_checked(cfg, p.fingerprint, force);
  p.ids = load_ids_checked(cfg, p.fingerprint, force);
  p.graph = load_graph_checked(cfg, p.fingerprint, force);
  std::vector<ItemRecord> catalog = catalog_for_split(cfg, p.split);
  std::erase_if(catalog, [&](const ItemRecord& r) { return !p.ids.count(r.item); });
  auto vectors = compute_tf_idf(catalog, load_stopword_set(cfg));
  p.scorer = BuiltinScorer::fit(p.split, p.graph, p.ids, vectors,
                                scoring_config(cfg));
  p.trie = build_trie(p.ids);
  return p;
}

inline std::vector<std::pair<ScoringContext, std::string>> heldout_contexts(
    const EngineConfig& cfg, const Pipeline& p,
    const std::vector<HeldOut>& heldouts) {
  std::vector<std::pair<ScoringContext, std::string>> out;
  out.reserve(heldouts.size());
  PromptOptions opt = prompt_options(cfg);
  for (const auto& h : heldouts) {
    PromptFeatures f =
        build_features(h.user, h.prefix_items, h.prefix_timestamps,
                       h.target_timestamp, p.ids, p.graph, cfg.graph_decay(), opt);
    out.emplace_back(ScoringContext{std::move(f)}, h.target);
  }
  return out;
}

// Fits the scorer, records the artifact checksums it was derived from, and
// reports teacher-forced NLL on the validation split.
inline double run_train(const EngineConfig& cfg, bool force = false) {
  ArtifactPaths paths(cfg);
  Pipeline p = load_pipeline(cfg, force);
  double nll = 0.0;
  if (!p.split.valid.empty()) {
    auto examples = heldout_contexts(cfg, p, p.split.valid);
    nll = teacher_forced_nll(p.scorer, p.ids, examples);
  }
  json doc{{"fingerprint", p.fingerprint},
           {"splits_checksum", detail::file_checksum(paths.splits())},
           {"ids_checksum", detail::file_checksum(paths.ids())},
           {"graph_checksum", detail::file_checksum(paths.graph())},
           {"valid_nll", nll}};
  write_json_file(paths.model(), doc);
  return nll;
}

// Model artifact gate: the scorer is rebuilt from source artifacts, so the
// header must match both the config fingerprint and the artifact files.
inline void check_model(const EngineConfig& cfg, const std::string& fingerprint,
                        bool force = false) {
  ArtifactPaths paths(cfg);
  detail::require_artifact(paths.model(), "train");
  json doc = read_json_file(paths.model());
  detail::check_fingerprint(doc.value("fingerprint", std::string()), fingerprint,
                            paths.model(), force);
  if (force) return;
  for (const auto& [key, artifact] :
       std::initializer_list<std::pair<const char*, fs::path>>{
           {"splits_checksum", paths.splits()},
           {"ids_checksum", paths.ids()},
           {"graph_checksum", paths.graph()}}) {
    if (doc.value(key, std::string()) != detail::file_checksum(artifact)) {
      throw DependencyError("model artifact is stale against " +
                            artifact.string() + "; run `train` again");
    }
  }
}

inline EvalSetup eval_setup(const EngineConfig& cfg, const Pipeline& p,
                            const std::string& role) {
  EvalSetup s;
  s.model = &p.scorer;
  s.trie = &p.trie;
  s.ids = &p.ids;
  s.graph = &p.graph;
  s.split = &p.split;
  s.role = role;
  s.prompt = prompt_options(cfg);
  s.graph_decay = cfg.graph_decay();
  s.lambda = cfg.lambda;
  s.trend_window = cfg.trend_window;
  s.include_valid_in_trend = cfg.include_valid_trend;
  s.cutoffs = cfg.cutoff_list();
  s.beam_width = cfg.beam_width;
  s.exact = cfg.exact;
  s.boundaries = cfg.boundaries_opt();
  s.config_fingerprint = p.fingerprint;
  s.threads = cfg.threads;
  return s;
}

inline MetricsReport run_evaluate(const EngineConfig& cfg,
                                  const std::string& role = "test",
                                  bool force = false) {
  ArtifactPaths paths(cfg);
  Pipeline p = load_pipeline(cfg, force);
  check_model(cfg, p.fingerprint, force);
  MetricsReport report = evaluate(eval_setup(cfg, p, role));
  write_json_file(paths.report(), report_to_json(report));
  return report;
}

inline void run_recommend(const EngineConfig& cfg, const std::string& role,
                          std::optional<std::int64_t> inference_day,
                          const fs::path& out_path, bool force = false) {
  Pipeline p = load_pipeline(cfg, force);
  check_model(cfg, p.fingerprint, force);
  const std::vector<HeldOut>& heldouts =
      role == "valid" ? p.split.valid : p.split.test;
  PromptOptions opt = prompt_options(cfg);
  JsonlWriter out(out_path);
  out.write(json{{"header", true}, {"fingerprint", p.fingerprint}});
  for (const auto& h : heldouts) {
    std::int64_t ts = inference_day ? *inference_day * kSecondsPerDay
                                    : h.target_timestamp;
    PromptFeatures f = build_features(h.user, h.prefix_items,
                                      h.prefix_timestamps, ts, p.ids, p.graph,
                                      cfg.graph_decay(), opt);
    auto ranked = beam_search(p.scorer, ScoringContext{std::move(f)}, p.trie,
                              cfg.beam_width);
    json entries = json::array();
    for (const auto& r : ranked) {
      entries.push_back(json{{"item", r.item}, {"beam_score", r.score}});
    }
    out.write(json{{"user", h.user}, {"ranked", std::move(entries)}});
  }
}

// Prompt export for external trainers: per-position training examples plus
// single-target records for the held-out splits.
inline std::size_t run_render_prompts(const EngineConfig& cfg,
                                      const std::string& role,
                                      const fs::path& out_path,
                                      bool force = false) {
  std::string fingerprint = compute_fingerprint(cfg);
  SplitDataset split = load_splits_checked(cfg, fingerprint, force);
  IdMap ids = load_ids_checked(cfg, fingerprint, force);
  TransitionGraph graph = load_graph_checked(cfg, fingerprint, force);
  PromptOptions opt = prompt_options(cfg);

  JsonlWriter out(out_path);
  out.write(json{{"header", true}, {"fingerprint", fingerprint}, {"role", role}});
  std::size_t count = 0;
  auto write_example = [&](const std::string& user,
                           std::span<const std::string> items,
                           std::span<const std::int64_t> ts,
                           std::int64_t target_ts, const std::string& target) {
    PromptFeatures f = build_features(user, items, ts, target_ts, ids, graph,
                                      cfg.graph_decay(), opt);
    PromptPair pair = make_prompt_pair(f);
    auto it = ids.find(target);
    if (it == ids.end()) {
      throw DataError("target item '" + target + "' has no assigned ID");
    }
    out.write(json{{"user", user},
                   {"c_u", pair.c_u},
                   {"c_v", pair.c_v},
                   {"target", it->second.rendered}});
    ++count;
  };

  if (role == "train") {
    for (const auto& seq : split.train) {
      for (std::size_t t = 1; t < seq.items.size(); ++t) {
        write_example(seq.user,
                      std::span(seq.items.data(), t),
                      std::span(seq.timestamps.data(), t),
                      seq.timestamps[t], seq.items[t]);
      }
    }
  } else if (role == "valid" || role == "test") {
    for (const auto& h : (role == "valid" ? split.valid : split.test)) {
      write_example(h.user, h.prefix_items, h.prefix_timestamps,
                    h.target_timestamp, h.target);
    }
  } else {
    throw UsageError("render-prompts role must be train, valid, or test");
  }
  return count;
}

inline void run_rerank(const EngineConfig& cfg, const fs::path& candidates_path,
                       const fs::path& out_path,
                       std::optional<std::int64_t> t_rec,
                       std::optional<fs::path> trend_table_path,
                       bool force = false) {
  std::string fingerprint = compute_fingerprint(cfg);
  SplitDataset split = load_splits_checked(cfg, fingerprint, force);
  IdMap ids = load_ids_checked(cfg, fingerprint, force);
  std::set<std::string> catalog;
  for (const auto& [item, id] : ids) catalog.insert(item);

  TrendTable table;
  if (trend_table_path) {
    table = load_trend_table(*trend_table_path);
  } else if (t_rec) {
    auto events = flatten_train_events(split, cfg.include_valid_trend);
    table = build_trend_table(events, *t_rec, cfg.trend_window);
    save_trend_table(ArtifactPaths(cfg).trend_table(), table);
  } else {
    throw UsageError("rerank needs --t-rec or --trend-table");
  }

  JsonlWriter out(out_path);
  for_each_jsonl(candidates_path, [&](std::size_t line_no, const json& j) {
    if (j.contains("header")) return;
    std::string where = candidates_path.string() + ":" + std::to_string(line_no);
    if (!j.contains("user") || !j.contains("ranked")) {
      throw DataError(where + ": expected fields 'user' and 'ranked'");
    }
    std::vector<std::pair<std::string, double>> candidates;
    for (const auto& entry : j.at("ranked")) {
      double score = entry.contains("score")
                         ? entry.at("score").get<double>()
                         : entry.at("beam_score").get<double>();
      candidates.emplace_back(entry.at("item").get<std::string>(), score);
    }
    RankedList reranked = rerank_external(candidates, table, cfg.lambda, &catalog);
    json entries = json::array();
    for (const auto& e : reranked) {
      json record{{"item", e.item},
                  {"score", e.base_score},
                  {"trend_score", e.trend_score},
                  {"final_score", e.final_score}};
      if (!e.in_catalog) record["in_catalog"] = false;
      entries.push_back(std::move(record));
    }
    out.write(json{{"user", j.at("user")}, {"ranked", std::move(entries)}});
  });
}

inline std::vector<std::pair<PromptVariant, MetricsReport>> run_ablate(
    const EngineConfig& cfg, const std::vector<PromptVariant>& variants,
    const std::string& role = "test", bool force = false) {
  ArtifactPaths paths(cfg);
  Pipeline p = load_pipeline(cfg, force);
  check_model(cfg, p.fingerprint, force);
  EvalSetup base = eval_setup(cfg, p, role);
  auto rows = ablate_variants(base, variants);

  json doc{{"config_fingerprint", p.fingerprint}, {"rows", json::array()}};
  for (const auto& [variant, report] : rows) {
    json row = report_to_json(report);
    row["variant"] = variant_name(variant);
    doc["rows"].push_back(std::move(row));
  }
  write_json_file(paths.ablation(), doc);

  std::ofstream csv(paths.ablation_csv());
  if (!csv) throw DataError("cannot write " + paths.ablation_csv().string());
  std::vector<int> cutoffs = cfg.cutoff_list();
  csv << "variant,users";
  for (int k : cutoffs) csv << ",recall@" << k << ",ndcg@" << k;
  csv << "\n";
  for (const auto& [variant, report] : rows) {
    csv << variant_name(variant) << "," << report.overall.users;
    char buf[40];
    for (int k : cutoffs) {
      std::snprintf(buf, sizeof(buf), ",%.6f", report.overall.recall.at(k));
      csv << buf;
      std::snprintf(buf, sizeof(buf), ",%.6f", report.overall.ndcg.at(k));
      csv << buf;
    }
    csv << "\n";
  }
  return rows;
}

}  // namespace chronorec::engine

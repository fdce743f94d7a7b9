// chronorec: time-aware generative recommendation pipeline.
//
// Subcommands cover the whole flow: gen-synthetic -> preprocess ->
// assign-ids -> build-graph -> train -> recommend/evaluate/rerank/ablate,
// plus render-prompts for exporting contexts to external trainers.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chronorec/chronorec.hpp"

namespace {

using chronorec::EngineConfig;

// --config is applied before flag parsing so explicit flags win.
EngineConfig preload_config(int argc, char** argv) {
  for (int i = 1; i < argc - 1; ++i) {
    std::string arg = argv[i];
    if (arg == "--config") {
      return EngineConfig::from_file(argv[i + 1]);
    }
  }
  return EngineConfig{};
}

void add_config_options(CLI::App& app, EngineConfig& cfg,
                        std::string& config_path) {
  app.add_option("--config", config_path,
                 "config file (key = value lines; flags win)");
  app.add_option("--events", cfg.events, "events JSONL path");
  app.add_option("--metadata", cfg.metadata, "item metadata JSONL path");
  app.add_option("--artifacts", cfg.artifacts, "artifact directory");
  app.add_option("--stopwords", cfg.stopwords, "stopword file (one per line)");
  app.add_option("--tau", cfg.tau, "transition decay tau (days)");
  app.add_option("--c", cfg.c, "transition decay floor");
  app.add_option("--user-tau", cfg.user_tau, "history decay tau (days)");
  app.add_option("--user-c", cfg.user_c, "history decay floor");
  app.add_option("--epsilon", cfg.epsilon, "transition-context weight");
  app.add_option("--lambda", cfg.lambda, "trend weight");
  app.add_option("--top-k", cfg.top_k, "neighbors per transition line");
  app.add_option("--last-l", cfg.last_l, "recent items with transition lines");
  app.add_option("--trend-window", cfg.trend_window, "trend window N (days)");
  app.add_option("--beam-width", cfg.beam_width, "beam width B");
  app.add_option("--n-keywords", cfg.n_keywords, "keywords per item ID");
  app.add_option("--max-seq-len", cfg.max_seq_len, "history length cap");
  app.add_option("--k-core", cfg.k_core, "k-core filtering threshold");
  app.add_option("--delta-pop", cfg.delta_pop, "popularity term weight");
  app.add_option("--delta-floor", cfg.delta_floor, "mass floor");
  app.add_option("--variant", cfg.variant,
                 "prompt variant: none|absolute|relative|target_relative|"
                 "relative_absolute|target_relative_absolute");
  app.add_option("--boundaries", cfg.boundaries,
                 "interval groups: 'tertile' or 'b1,b2' days");
  app.add_option("--cutoffs", cfg.cutoffs, "metric cutoffs, e.g. 5,10");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_flag("--chronological", cfg.chronological,
               "render history oldest first");
  app.add_flag("--include-valid-trend", cfg.include_valid_trend,
               "count validation events in trend windows");
  app.add_flag("--exact", cfg.exact, "full ranking instead of beam search");
  app.add_flag("!--no-self-transitions", cfg.self_transitions,
               "drop self-transition pairs");
  app.add_flag("--allow-out-of-grid", cfg.allow_out_of_grid,
               "permit hyperparameters outside the tuning grids");
  app.add_option("--threads", cfg.threads, "worker threads");
  app.add_option("--syn-users", cfg.syn_users, "gen-synthetic: users");
  app.add_option("--syn-items", cfg.syn_items, "gen-synthetic: items");
  app.add_option("--syn-clusters", cfg.syn_clusters, "gen-synthetic: clusters");
}

void print_report(const chronorec::MetricsReport& report) {
  auto line = [](const std::string& name, const chronorec::MetricsCell& cell) {
    std::printf("%-8s users=%zu", name.c_str(), cell.users);
    for (const auto& [k, v] : cell.recall) std::printf("  R@%d=%.6f", k, v);
    for (const auto& [k, v] : cell.ndcg) std::printf("  N@%d=%.6f", k, v);
    std::printf("\n");
  };
  line("overall", report.overall);
  for (const auto& [name, cell] : report.groups) line(name, cell);
}

}  // namespace

int main(int argc, char** argv) {
  EngineConfig cfg;
  try {
    cfg = preload_config(argc, argv);
  } catch (const chronorec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  }

  CLI::App app{"time-aware generative recommendation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  add_config_options(app, cfg, config_path);
  bool force = false;
  app.add_flag("--force", force, "ignore fingerprint mismatches");

  auto* gen = app.add_subcommand("gen-synthetic",
                                 "write a seeded temporal-shift dataset");
  auto* preprocess =
      app.add_subcommand("preprocess", "k-core filter, sequences, splits");
  auto* assign = app.add_subcommand("assign-ids", "TF-IDF keyword item IDs");
  auto* graph = app.add_subcommand("build-graph", "item transition graph");
  auto* prompts = app.add_subcommand("render-prompts",
                                     "export temporal contexts as JSONL");
  std::string prompts_role = "train";
  prompts->add_option("--role", prompts_role, "train|valid|test");
  std::string prompts_out;
  prompts->add_option("--out", prompts_out, "output path");

  auto* train = app.add_subcommand("train", "fit the builtin scorer");
  auto* recommend =
      app.add_subcommand("recommend", "beam-search recommendations");
  std::string rec_role = "test";
  recommend->add_option("--role", rec_role, "test|valid");
  std::string rec_out;
  recommend->add_option("--out", rec_out, "output path");
  std::optional<std::int64_t> rec_day;
  recommend->add_option("--inference-day", rec_day,
                        "override the recommendation day index");

  auto* evaluate = app.add_subcommand("evaluate", "leave-one-out metrics");
  std::string eval_role = "test";
  evaluate->add_option("--role", eval_role, "test|valid");

  auto* rerank = app.add_subcommand("rerank", "trend-rerank a candidate file");
  std::string candidates;
  rerank->add_option("--candidates", candidates, "candidates JSONL")->required();
  std::string rerank_out;
  rerank->add_option("--out", rerank_out, "output path");
  std::optional<std::int64_t> t_rec;
  rerank->add_option("--t-rec", t_rec, "recommendation day index");
  std::string trend_table_path;
  rerank->add_option("--trend-table", trend_table_path,
                     "precomputed trend table JSON");

  auto* ablate = app.add_subcommand("ablate", "metrics per prompt variant");
  std::string ablate_variants = "all";
  ablate->add_option("--variants", ablate_variants,
                     "comma-separated variant list, or 'all'");
  std::string ablate_role = "test";
  ablate->add_option("--role", ablate_role, "test|valid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // non-zero parse problems are usage errors
  }

  namespace engine = chronorec::engine;
  try {
    cfg.validate();
    chronorec::engine::ArtifactPaths paths(cfg);
    if (gen->parsed()) {
      engine::run_gen_synthetic(cfg);
      std::printf("wrote %s and %s\n", cfg.events.c_str(), cfg.metadata.c_str());
    } else if (preprocess->parsed()) {
      auto stats = engine::run_preprocess(cfg);
      std::printf("events %zu -> %zu after %d-core; users=%zu items=%zu "
                  "eligible=%zu\n",
                  stats.raw_events, stats.kept_events, cfg.k_core, stats.users,
                  stats.items, stats.eligible_users);
      std::printf("wrote %s\n", paths.splits().c_str());
    } else if (assign->parsed()) {
      engine::run_assign_ids(cfg, force);
      std::printf("wrote %s\n", paths.ids().c_str());
    } else if (graph->parsed()) {
      engine::run_build_graph(cfg, force);
      std::printf("wrote %s\n", paths.graph().c_str());
    } else if (prompts->parsed()) {
      auto out = prompts_out.empty() ? paths.prompts()
                                     : std::filesystem::path(prompts_out);
      std::size_t n = engine::run_render_prompts(cfg, prompts_role, out, force);
      std::printf("wrote %zu prompts to %s\n", n, out.c_str());
    } else if (train->parsed()) {
      double nll = engine::run_train(cfg, force);
      std::printf("validation teacher-forced NLL: %.6f\n", nll);
      std::printf("wrote %s\n", paths.model().c_str());
    } else if (recommend->parsed()) {
      auto out = rec_out.empty() ? paths.recommendations()
                                 : std::filesystem::path(rec_out);
      engine::run_recommend(cfg, rec_role, rec_day, out, force);
      std::printf("wrote %s\n", out.c_str());
    } else if (evaluate->parsed()) {
      auto report = engine::run_evaluate(cfg, eval_role, force);
      print_report(report);
      std::printf("wrote %s\n", paths.report().c_str());
    } else if (rerank->parsed()) {
      auto out = rerank_out.empty() ? paths.reranked()
                                    : std::filesystem::path(rerank_out);
      std::optional<std::filesystem::path> table_path;
      if (!trend_table_path.empty()) table_path = trend_table_path;
      engine::run_rerank(cfg, candidates, out, t_rec, table_path, force);
      std::printf("wrote %s\n", out.c_str());
    } else if (ablate->parsed()) {
      std::vector<chronorec::PromptVariant> variants;
      if (ablate_variants == "all") {
        variants = {chronorec::PromptVariant::none,
                    chronorec::PromptVariant::absolute,
                    chronorec::PromptVariant::relative,
                    chronorec::PromptVariant::target_relative,
                    chronorec::PromptVariant::relative_absolute,
                    chronorec::PromptVariant::target_relative_absolute};
      } else {
        for (const auto& name : chronorec::split(ablate_variants, ',')) {
          variants.push_back(chronorec::parse_variant(name));
        }
      }
      auto rows = engine::run_ablate(cfg, variants, ablate_role, force);
      for (const auto& [variant, report] : rows) {
        std::printf("-- %s\n", chronorec::variant_name(variant));
        print_report(report);
      }
      std::printf("wrote %s and %s\n", paths.ablation().c_str(),
                  paths.ablation_csv().c_str());
    }
  } catch (const chronorec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

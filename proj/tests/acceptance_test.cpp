// Acceptance suite: one test per shipped guarantee, each printing a
// PASS/FAIL line with its runtime. Tolerances are pinned in code.

#include <chrono>
#include <cmath>
#include <cstdio>

#include <gtest/gtest.h>

#include "chronorec/chronorec.hpp"
#include "testutil.hpp"

using namespace chronorec;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

void report(int criterion, const char* what, const Stopwatch& watch) {
  std::printf("[criterion %2d] %s: %s (%.2fs)\n", criterion,
              ::testing::Test::HasFailure() ? "FAIL" : "PASS", what,
              watch.seconds());
  std::fflush(stdout);
}

// Emitted-ID validity tracking across every decoding run in this binary.
std::size_t g_emitted_ids = 0;
std::size_t g_invalid_ids = 0;

void track_outputs(const std::vector<ScoredItem>& out, const IdMap& ids) {
  for (const auto& s : out) {
    ++g_emitted_ids;
    auto it = ids.find(s.item);
    if (it == ids.end() || it->second.rendered != s.rendered) ++g_invalid_ids;
  }
}

TextualId make_id(const std::string& item, std::vector<std::string> tokens) {
  std::string rendered = render_tokens(tokens);
  return TextualId{item, std::move(tokens), rendered};
}

// Random catalog with a fitted builtin scorer.
struct RandomPipeline {
  IdMap ids;
  IdTrie trie;
  std::unique_ptr<BuiltinScorer> model;

  RandomPipeline(std::uint64_t seed, int n_items) {
    Rng rng(seed);
    std::vector<TfIdfVector> vectors;
    for (int i = 0; i < n_items; ++i) {
      std::string item = "item" + std::to_string(i);
      std::vector<std::string> tokens;
      int len = static_cast<int>(rng.uniform_int(1, 4));
      for (int t = 0; t < len; ++t) {
        tokens.push_back("w" + std::to_string(rng.uniform_int(0, 11)));
      }
      tokens.push_back("u" + std::to_string(i));
      ids[item] = make_id(item, tokens);
      std::map<std::string, double> weights;
      for (const auto& t : tokens) weights[t] = 0.05 + rng.uniform_real();
      vectors.push_back({item, std::move(weights)});
    }
    TransitionGraph graph;
    for (int e = 0; e < n_items * 4; ++e) {
      graph.add_pair("item" + std::to_string(rng.uniform_int(0, n_items - 1)),
                     "item" + std::to_string(rng.uniform_int(0, n_items - 1)),
                     rng.uniform_int(0, 300));
    }
    SplitDataset split;
    for (int u = 0; u < 8; ++u) {
      UserSequence seq;
      seq.user = "u" + std::to_string(u);
      std::int64_t day = 0;
      for (int i = 0; i < 6; ++i) {
        seq.items.push_back("item" + std::to_string(rng.uniform_int(0, n_items - 1)));
        day += rng.uniform_int(1, 15);
        seq.timestamps.push_back(day * kSecondsPerDay);
      }
      split.train.push_back(std::move(seq));
    }
    ScoringConfig cfg;
    cfg.epsilon = 0.1;
    cfg.history_decay = {128.0, 0.0};
    model = std::make_unique<BuiltinScorer>(
        BuiltinScorer::fit(split, graph, ids, vectors, cfg));
    trie = build_trie(ids);
  }

  ScoringContext random_context(Rng& rng) const {
    PromptFeatures f;
    f.user = "u";
    std::int64_t day = 0;
    int n = static_cast<int>(rng.uniform_int(1, 10));
    for (int i = 0; i < n; ++i) {
      auto it = ids.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(rng.uniform_int(
                           0, static_cast<std::int64_t>(ids.size()) - 1)));
      f.items.push_back(it->first);
      f.rendered.push_back(it->second.rendered);
      day += rng.uniform_int(0, 40);
      f.days.push_back(day);
    }
    f.inference_day = day + rng.uniform_int(0, 90);
    f.variant = PromptVariant::target_relative_absolute;
    return ScoringContext{std::move(f)};
  }
};

// 1. Decay weight bounds and monotonicity over the tuning grids.
TEST(Acceptance, Criterion01_TimeWeightBounds) {
  Stopwatch watch;
  Rng rng(101);
  for (int i = 0; i < 100000; ++i) {
    double tau = 128.0 * std::pow(2.0, rng.uniform_real() * 4.0);  // [2^7, 2^11]
    double c = 0.8 + 0.2 * rng.uniform_real();
    DecayParams p{tau, c};
    double dt = rng.uniform_real() * 4000.0;
    double w = time_weight(dt, p);
    ASSERT_GE(w, c);
    ASSERT_LE(w, 1.0);
    ASSERT_DOUBLE_EQ(time_weight(0.0, p), 1.0);
    double w2 = time_weight(dt + rng.uniform_real() * 50.0, p);
    ASSERT_GE(w, w2);
  }
  EXPECT_LT(watch.seconds(), 1.0);
  report(1, "decay weight bounds, w(0)=1, monotone decrease", watch);
}

// 2. Transition rows are stochastic; c = 1 degenerates to count ratios.
TEST(Acceptance, Criterion02_RowStochastic) {
  Stopwatch watch;
  Rng rng(202);
  for (int round = 0; round < 3; ++round) {
    int n_items = static_cast<int>(rng.uniform_int(50, 500));
    int n_pairs = static_cast<int>(rng.uniform_int(2000, 10000));
    TransitionGraph g;
    for (int e = 0; e < n_pairs; ++e) {
      g.add_pair("i" + std::to_string(rng.uniform_int(0, n_items - 1)),
                 "i" + std::to_string(rng.uniform_int(0, n_items - 1)),
                 rng.uniform_int(0, 2048));
    }
    DecayParams p{std::pow(2.0, static_cast<double>(rng.uniform_int(7, 11))),
                  0.8 + 0.2 * rng.uniform_real()};
    for (const auto& [source, row] : g.adjacency()) {
      double sum = 0.0;
      for (const auto& [target, intervals] : row) {
        sum += transition_prob(g, source, target, p);
      }
      ASSERT_NEAR(sum, 1.0, 1e-9);
    }
    // c = 1: every weight is exactly 1, probabilities are count ratios.
    DecayParams counts{128.0, 1.0};
    for (const auto& [source, row] : g.adjacency()) {
      double total = 0.0;
      for (const auto& [target, intervals] : row) {
        total += static_cast<double>(intervals.size());
      }
      for (const auto& [target, intervals] : row) {
        ASSERT_EQ(transition_prob(g, source, target, counts),
                  static_cast<double>(intervals.size()) / total);
      }
    }
  }
  EXPECT_LT(watch.seconds(), 5.0);
  report(2, "row-stochastic rows; c=1 equals raw count ratios", watch);
}

// 3. Wide beam equals the exhaustive full-path oracle.
TEST(Acceptance, Criterion03_BeamOracleEquivalence) {
  Stopwatch watch;
  RandomPipeline pipe(303, 50);
  Rng rng(31);
  for (int user = 0; user < 100; ++user) {
    auto ctx = pipe.random_context(rng);
    auto beam = beam_search(*pipe.model, ctx, pipe.trie, 50);
    track_outputs(beam, pipe.ids);
    auto oracle = testutil::exhaustive_item_scores(*pipe.model, ctx, pipe.ids);
    std::sort(oracle.begin(), oracle.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return pipe.ids.at(a.first).rendered < pipe.ids.at(b.first).rendered;
    });
    ASSERT_EQ(beam.size(), oracle.size());
    for (std::size_t i = 0; i < beam.size(); ++i) {
      ASSERT_EQ(beam[i].item, oracle[i].first);
      ASSERT_NEAR(beam[i].score, oracle[i].second, 1e-9);
    }
  }
  EXPECT_LT(watch.seconds(), 10.0);
  report(3, "beam B=50 equals exhaustive oracle on 100 users", watch);
}

// 4. Beam scores telescope to ln m(item) - ln M(root).
TEST(Acceptance, Criterion04_Telescoping) {
  Stopwatch watch;
  RandomPipeline pipe(404, 60);
  Rng rng(41);
  int checked = 0;
  while (checked < 1000) {
    auto ctx = pipe.random_context(rng);
    auto bound = pipe.model->bind(ctx);
    auto masses = pipe.model->mass_table(ctx);
    double root = 0.0;
    for (double m : masses) root += m;
    for (int draw = 0; draw < 20 && checked < 1000; ++draw, ++checked) {
      auto it = pipe.ids.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(rng.uniform_int(
                           0, static_cast<std::int64_t>(pipe.ids.size()) - 1)));
      std::vector<std::string> prefix;
      double sum = 0.0;
      auto add = [&](const std::string& token) {
        for (const auto& [t, lp] : bound->next_token_logprobs(prefix)) {
          if (t == token) {
            sum += lp;
            return true;
          }
        }
        return false;
      };
      for (const auto& token : it->second.tokens) {
        ASSERT_TRUE(add(token));
        prefix.push_back(token);
      }
      ASSERT_TRUE(add(IdTrie::end_marker()));
      double expect =
          std::log(pipe.model->item_mass(ctx, it->first)) - std::log(root);
      ASSERT_NEAR(sum, expect, 1e-9);
    }
  }
  EXPECT_LT(watch.seconds(), 10.0);
  report(4, "1000 path sums telescope to ln m - ln M(root)", watch);
}

// 5. Every ID emitted by decoding is a catalog member.
TEST(Acceptance, Criterion05_TrieValidity) {
  Stopwatch watch;
  Rng rng(505);
  for (int round = 0; round < 20; ++round) {
    RandomPipeline pipe(9000 + static_cast<std::uint64_t>(round),
                        static_cast<int>(rng.uniform_int(3, 80)));
    for (int q = 0; q < 10; ++q) {
      auto ctx = pipe.random_context(rng);
      int width = static_cast<int>(rng.uniform_int(1, 60));
      track_outputs(beam_search(*pipe.model, ctx, pipe.trie, width), pipe.ids);
      track_outputs(full_rank(*pipe.model, ctx, pipe.trie), pipe.ids);
    }
  }
  ASSERT_GT(g_emitted_ids, 10000u);
  ASSERT_EQ(g_invalid_ids, 0u);
  report(5, "all emitted IDs are catalog members (zero invalid)", watch);
}

// 6. Trend scores bounded; lambda=0 is the identity; strict-max-trend rank
// is monotone in lambda; window boundaries match.
TEST(Acceptance, Criterion06_TrendRerank) {
  Stopwatch watch;
  Rng rng(606);

  // Window boundary checks.
  {
    std::vector<Interaction> events;
    for (std::int64_t d = 80; d <= 101; ++d) {
      events.push_back({"u", "d" + std::to_string(d), d * kSecondsPerDay});
    }
    auto table = build_trend_table(events, 100, 7);
    ASSERT_EQ(table.counts.count("d100"), 0u);  // recommendation day excluded
    ASSERT_EQ(table.counts.count("d99"), 1u);   // t-1 included
    ASSERT_EQ(table.counts.count("d92"), 1u);   // t-N-1 included
    ASSERT_EQ(table.counts.count("d91"), 0u);   // below the window
  }

  for (int round = 0; round < 100; ++round) {
    TrendTable table;
    std::vector<std::pair<std::string, double>> candidates;
    int n = static_cast<int>(rng.uniform_int(2, 30));
    for (int i = 0; i < n; ++i) {
      std::string item = "i" + std::to_string(i);
      table.counts[item] = rng.uniform_int(0, 40);
      candidates.emplace_back(item, -10.0 * rng.uniform_real());
    }
    std::string star = "i" + std::to_string(rng.uniform_int(0, n - 1));
    table.counts[star] = 41;  // strict max trend
    for (const auto& [item, r] : table.counts) {
      table.r_max = std::max(table.r_max, r);
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });

    for (const auto& [item, r] : table.counts) {
      double s = trend_score(table, item);
      ASSERT_GE(s, 0.0);
      ASSERT_LE(s, std::log(2.0) + 1e-12);
    }

    auto identity = aggregate(candidates, table, 0.0);
    for (std::size_t i = 0; i < identity.size(); ++i) {
      ASSERT_EQ(identity[i].item, candidates[i].first);
      ASSERT_EQ(identity[i].final_score, identity[i].base_score);
    }

    int prev_rank = n + 1;
    for (int step = 0; step <= 10; ++step) {
      auto out = aggregate(candidates, table, 0.1 * step);
      int rank = 0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].item == star) {
          rank = static_cast<int>(i) + 1;
          break;
        }
      }
      ASSERT_LE(rank, prev_rank);
      prev_rank = rank;
    }
  }
  report(6, "trend bounds, lambda=0 identity, monotone max-trend rank, window",
         watch);
}

// 7. Metric oracles and the N <= R dominance.
TEST(Acceptance, Criterion07_MetricOracles) {
  Stopwatch watch;
  ASSERT_DOUBLE_EQ(ndcg_at_k(3, 5), 0.5);

  // Four users with target ranks 1, 2, 6, absent at cutoff 5.
  std::vector<std::optional<int>> ranks = {1, 2, 6, std::nullopt};
  double recall = 0.0;
  double ndcg = 0.0;
  for (auto r : ranks) {
    recall += recall_at_k(r, 5);
    ndcg += ndcg_at_k(r, 5);
  }
  recall /= 4.0;
  ndcg /= 4.0;
  double ndcg_oracle = (1.0 + 1.0 / std::log2(3.0) + 0.0 + 0.0) / 4.0;
  ASSERT_DOUBLE_EQ(recall, 0.5);
  ASSERT_NEAR(ndcg, ndcg_oracle, 1e-6);

  Rng rng(707);
  for (int i = 0; i < 10000; ++i) {
    std::optional<int> rank;
    if (rng.chance(0.9)) rank = static_cast<int>(rng.uniform_int(1, 50));
    int k = static_cast<int>(rng.uniform_int(1, 20));
    ASSERT_LE(ndcg_at_k(rank, k), recall_at_k(rank, k));
  }
  report(7, "ndcg(3,5)=0.5; worked example; N@k <= R@k on 10^4 draws", watch);
}

// 8. Synthetic temporal-shift behavior: the target-relative-absolute
// variant beats the timestamp-blind prompt, and trend reranking with the
// validation-swept lambda beats lambda = 0, both on R@5.
TEST(Acceptance, Criterion08_SyntheticBehavior) {
  Stopwatch watch;
  testutil::TempDir dir;
  EngineConfig cfg;
  cfg.events = (dir.path() / "events.jsonl").string();
  cfg.metadata = (dir.path() / "metadata.jsonl").string();
  cfg.artifacts = (dir.path() / "artifacts").string();
  cfg.syn_users = 2000;
  cfg.syn_items = 300;
  cfg.syn_clusters = 10;
  cfg.seed = 42;
  cfg.c = 0.0;       // decay floor released so recency can dominate
  cfg.user_c = 0.0;
  cfg.epsilon = 1.0;
  cfg.beam_width = 40;
  cfg.allow_out_of_grid = true;
  cfg.threads = 4;

  engine::run_gen_synthetic(cfg);
  engine::run_preprocess(cfg);
  engine::run_assign_ids(cfg);
  engine::run_build_graph(cfg);
  engine::run_train(cfg);
  engine::Pipeline pipe = engine::load_pipeline(cfg);

  // Variant comparison at lambda = 0.
  EvalSetup base = engine::eval_setup(cfg, pipe, "test");
  base.lambda = 0.0;
  std::vector<PromptVariant> variants = {
      PromptVariant::none, PromptVariant::target_relative_absolute};
  auto rows = ablate_variants(base, variants);
  double r5_none = rows[0].second.overall.recall.at(5);
  double r5_tra = rows[1].second.overall.recall.at(5);
  std::printf("    variant R@5: none=%.4f target_relative_absolute=%.4f\n",
              r5_none, r5_tra);
  ASSERT_GT(r5_tra, r5_none);

  // Lambda sweep on validation NDCG@10, then the test margin.
  EvalSetup valid_setup = engine::eval_setup(cfg, pipe, "valid");
  double best_lambda = 0.0;
  double best_n10 = -1.0;
  for (int step = 0; step <= 10; ++step) {
    valid_setup.lambda = 0.1 * step;
    auto report_row = evaluate(valid_setup);
    double n10 = report_row.overall.ndcg.at(10);
    if (n10 > best_n10 + 1e-12) {
      best_n10 = n10;
      best_lambda = valid_setup.lambda;
    }
  }
  std::printf("    validation sweep picked lambda=%.1f (N@10=%.4f)\n",
              best_lambda, best_n10);
  ASSERT_GT(best_lambda, 0.0);

  EvalSetup test_setup = engine::eval_setup(cfg, pipe, "test");
  test_setup.lambda = 0.0;
  double r5_raw = evaluate(test_setup).overall.recall.at(5);
  test_setup.lambda = best_lambda;
  double r5_trend = evaluate(test_setup).overall.recall.at(5);
  std::printf("    trend R@5: lambda=0 %.4f -> lambda=%.1f %.4f\n", r5_raw,
              best_lambda, r5_trend);
  ASSERT_GT(r5_trend, r5_raw);

  // Decoded IDs from the full pipeline stay inside the catalog.
  Rng rng(808);
  for (int i = 0; i < 50; ++i) {
    const HeldOut& h = pipe.split.test[static_cast<std::size_t>(rng.uniform_int(
        0, static_cast<std::int64_t>(pipe.split.test.size()) - 1))];
    PromptFeatures f = build_features(
        h.user, h.prefix_items, h.prefix_timestamps, h.target_timestamp,
        pipe.ids, pipe.graph, cfg.graph_decay(), engine::prompt_options(cfg));
    track_outputs(
        beam_search(pipe.scorer, ScoringContext{std::move(f)}, pipe.trie, 40),
        pipe.ids);
  }
  ASSERT_EQ(g_invalid_ids, 0u);

  EXPECT_LT(watch.seconds(), 120.0);
  report(8, "synthetic shift: variant margin and trend margin positive", watch);
}

// 9. Preprocessing: k-core fixpoint, leave-one-out rule, TF-IDF oracle.
TEST(Acceptance, Criterion09_Preprocessing) {
  Stopwatch watch;

  // k-core fixpoint on event streams shaped like the review datasets.
  Rng rng(909);
  for (int round = 0; round < 10; ++round) {
    std::vector<Interaction> events;
    int n = static_cast<int>(rng.uniform_int(50, 800));
    for (int e = 0; e < n; ++e) {
      events.push_back({"A" + std::to_string(rng.uniform_int(0, 40)),
                        "B00" + std::to_string(rng.uniform_int(0, 50)),
                        rng.uniform_int(0, 1500000000)});
    }
    auto kept = k_core_filter(events, 5);
    std::map<std::string, int> users;
    std::map<std::string, int> items;
    for (const auto& e : kept) {
      ++users[e.user];
      ++items[e.item];
    }
    for (const auto& [u, c] : users) ASSERT_GE(c, 5);
    for (const auto& [i, c] : items) ASSERT_GE(c, 5);
    auto twice = k_core_filter(kept, 5);
    ASSERT_EQ(twice.size(), kept.size());
  }

  // Leave-one-out on a hand-built sequence.
  UserSequence seq{"u1", {"a", "b", "c", "d"}, {10, 20, 30, 40}};
  auto split = leave_one_out_split({seq});
  ASSERT_EQ(split.train[0].items, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(split.valid[0].target, "c");
  ASSERT_EQ(split.valid[0].prefix_items, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(split.test[0].target, "d");
  ASSERT_EQ(split.test[0].prefix_items,
            (std::vector<std::string>{"a", "b", "c"}));

  // TF-IDF against a brute-force oracle.
  Rng rng2(910);
  std::vector<std::string> lexicon;
  for (int i = 0; i < 25; ++i) lexicon.push_back("tok" + std::to_string(i));
  for (int round = 0; round < 15; ++round) {
    int n_items = static_cast<int>(rng2.uniform_int(1, 15));
    std::vector<ItemRecord> catalog;
    std::map<std::string, std::vector<std::string>> docs;
    for (int i = 0; i < n_items; ++i) {
      int len = static_cast<int>(rng2.uniform_int(1, 18));
      std::vector<std::string> tokens;
      for (int t = 0; t < len; ++t) tokens.push_back(rng2.pick(lexicon));
      ItemRecord r;
      r.item = "it" + std::to_string(i);
      r.title = join(tokens, " ");
      catalog.push_back(r);
      docs[r.item] = tokens;
    }
    auto vectors = compute_tf_idf(catalog);
    double n_docs = static_cast<double>(docs.size());
    for (const auto& v : vectors) {
      const auto& tokens = docs.at(v.item);
      for (const auto& [term, weight] : v.weights) {
        double count = 0;
        for (const auto& t : tokens) {
          if (t == term) ++count;
        }
        double df = 0;
        for (const auto& [other, other_tokens] : docs) {
          for (const auto& t : other_tokens) {
            if (t == term) {
              ++df;
              break;
            }
          }
        }
        double oracle = (count / static_cast<double>(tokens.size())) *
                        (std::log((1.0 + n_docs) / (1.0 + df)) + 1.0);
        ASSERT_NEAR(weight, oracle, 1e-9);
      }
    }
  }
  report(9, "5-core fixpoint; leave-one-out rule; TF-IDF oracle", watch);
}

// 10. Two identical pipeline runs produce byte-identical artifacts.
TEST(Acceptance, Criterion10_Determinism) {
  Stopwatch watch;
  auto run_pipeline = [](const std::filesystem::path& root) {
    EngineConfig cfg;
    cfg.events = (root / "events.jsonl").string();
    cfg.metadata = (root / "metadata.jsonl").string();
    cfg.artifacts = (root / "artifacts").string();
    cfg.syn_users = 600;
    cfg.syn_items = 120;
    cfg.syn_clusters = 6;
    cfg.seed = 4242;
    cfg.c = 0.0;
    cfg.user_c = 0.0;
    cfg.epsilon = 1.0;
    cfg.beam_width = 40;
    cfg.allow_out_of_grid = true;
    engine::run_gen_synthetic(cfg);
    engine::run_preprocess(cfg);
    engine::run_assign_ids(cfg);
    engine::run_build_graph(cfg);
    engine::run_train(cfg);
    engine::run_evaluate(cfg);
    engine::ArtifactPaths paths(cfg);
    return std::vector<std::string>{
        read_file_bytes(cfg.events),     read_file_bytes(cfg.metadata),
        read_file_bytes(paths.splits()), read_file_bytes(paths.ids()),
        read_file_bytes(paths.graph()),  read_file_bytes(paths.model()),
        read_file_bytes(paths.report())};
  };
  testutil::TempDir dir1;
  testutil::TempDir dir2;
  auto bytes1 = run_pipeline(dir1.path());
  auto bytes2 = run_pipeline(dir2.path());
  ASSERT_EQ(bytes1.size(), bytes2.size());
  for (std::size_t i = 0; i < bytes1.size(); ++i) {
    ASSERT_EQ(bytes1[i], bytes2[i]) << "artifact index " << i;
  }
  report(10, "byte-identical artifacts across two identical runs", watch);
}

}  // namespace

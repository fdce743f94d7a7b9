#include "chronorec/decoding.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "chronorec/identifiers.hpp"
#include "chronorec/util.hpp"
#include "testutil.hpp"

using namespace chronorec;

namespace {

TextualId id_of(const std::string& item, std::vector<std::string> tokens) {
  std::string rendered = render_tokens(tokens);
  return TextualId{item, std::move(tokens), rendered};
}

// Random catalog + fitted builtin scorer for oracle comparisons.
struct RandomPipeline {
  IdMap ids;
  IdTrie trie;
  std::unique_ptr<BuiltinScorer> model;

  explicit RandomPipeline(std::uint64_t seed, int n_items) {
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
      ids[item] = id_of(item, tokens);
      std::map<std::string, double> weights;
      for (const auto& t : tokens) weights[t] = 0.05 + rng.uniform_real();
      vectors.push_back({item, std::move(weights)});
    }
    TransitionGraph graph;
    for (int e = 0; e < n_items * 3; ++e) {
      graph.add_pair("item" + std::to_string(rng.uniform_int(0, n_items - 1)),
                     "item" + std::to_string(rng.uniform_int(0, n_items - 1)),
                     rng.uniform_int(0, 200));
    }
    SplitDataset split;
    for (int u = 0; u < 6; ++u) {
      UserSequence seq;
      seq.user = "u" + std::to_string(u);
      std::int64_t day = 0;
      for (int i = 0; i < 6; ++i) {
        seq.items.push_back("item" + std::to_string(rng.uniform_int(0, n_items - 1)));
        day += rng.uniform_int(1, 20);
        seq.timestamps.push_back(day * kSecondsPerDay);
      }
      split.train.push_back(std::move(seq));
    }
    ScoringConfig cfg;
    cfg.epsilon = 0.05;
    cfg.history_decay = {128.0, 0.0};
    model = std::make_unique<BuiltinScorer>(
        BuiltinScorer::fit(split, graph, ids, vectors, cfg));
    trie = build_trie(ids);
  }

  ScoringContext random_context(Rng& rng) const {
    PromptFeatures f;
    f.user = "u";
    std::int64_t day = 0;
    int n = static_cast<int>(rng.uniform_int(1, 8));
    for (int i = 0; i < n; ++i) {
      std::size_t pick = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(ids.size()) - 1));
      auto it = ids.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(pick));
      f.items.push_back(it->first);
      f.rendered.push_back(it->second.rendered);
      day += rng.uniform_int(0, 30);
      f.days.push_back(day);
    }
    f.inference_day = day + rng.uniform_int(0, 60);
    f.variant = PromptVariant::target_relative_absolute;
    return ScoringContext{std::move(f)};
  }
};

TEST(BeamSearch, PathScoreIsTokenSum) {
  IdMap ids;
  ids["i1"] = id_of("i1", {"a", "b"});
  auto trie = build_trie(ids);
  testutil::MockScorer::Table table;
  table[""] = {{"a", -0.5}};
  table["a"] = {{"b", -1.0}};
  table["a-b"] = {{IdTrie::end_marker(), 0.0}};
  testutil::MockScorer mock(std::move(table));
  auto out = beam_search(mock, ScoringContext{}, trie, 4);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].item, "i1");
  EXPECT_DOUBLE_EQ(out[0].score, -1.5);
}

TEST(BeamSearch, MockTableRanking) {
  IdMap ids;
  ids["x"] = id_of("x", {"a"});
  ids["y"] = id_of("y", {"b"});
  ids["z"] = id_of("z", {"c"});
  auto trie = build_trie(ids);
  testutil::MockScorer::Table table;
  table[""] = {{"a", std::log(0.2)}, {"b", std::log(0.5)}, {"c", std::log(0.3)}};
  table["a"] = {{IdTrie::end_marker(), 0.0}};
  table["b"] = {{IdTrie::end_marker(), 0.0}};
  table["c"] = {{IdTrie::end_marker(), 0.0}};
  testutil::MockScorer mock(std::move(table));

  auto top2 = beam_search(mock, ScoringContext{}, trie, 2);
  ASSERT_EQ(top2.size(), 2u);
  EXPECT_EQ(top2[0].item, "y");
  EXPECT_EQ(top2[1].item, "z");

  auto ranked = full_rank(mock, ScoringContext{}, trie);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].item, "y");
  EXPECT_EQ(ranked[2].item, "x");
}

TEST(BeamSearch, SingleItemCatalogScoresZero) {
  IdMap ids;
  ids["only"] = id_of("only", {"x", "y"});
  auto trie = build_trie(ids);
  std::vector<TfIdfVector> vectors = {{"only", {{"x", 1.0}, {"y", 1.0}}}};
  TransitionGraph graph;
  SplitDataset split;
  split.train.push_back({"u", {"only"}, {0}});
  auto model = BuiltinScorer::fit(split, graph, ids, vectors, ScoringConfig{});
  PromptFeatures f;
  f.items = {"only"};
  f.rendered = {"x-y"};
  f.days = {0};
  f.inference_day = 3;
  auto out = beam_search(model, ScoringContext{f}, trie, 5);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].item, "only");
  EXPECT_NEAR(out[0].score, 0.0, 1e-12);
}

TEST(BeamSearch, WideBeamMatchesExhaustiveOracle) {
  RandomPipeline pipe(5551, 50);
  Rng rng(777);
  for (int round = 0; round < 10; ++round) {
    auto ctx = pipe.random_context(rng);
    auto beam = beam_search(*pipe.model, ctx, pipe.trie, 50);
    auto oracle = testutil::exhaustive_item_scores(*pipe.model, ctx, pipe.ids);
    std::sort(oracle.begin(), oracle.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return pipe.ids.at(a.first).rendered < pipe.ids.at(b.first).rendered;
    });
    ASSERT_EQ(beam.size(), oracle.size());
    for (std::size_t i = 0; i < beam.size(); ++i) {
      EXPECT_EQ(beam[i].item, oracle[i].first) << "rank " << i;
      EXPECT_NEAR(beam[i].score, oracle[i].second, 1e-9);
    }
  }
}

TEST(FullRank, AgreesWithBeamAtFullWidth) {
  RandomPipeline pipe(919, 30);
  Rng rng(11);
  for (int round = 0; round < 5; ++round) {
    auto ctx = pipe.random_context(rng);
    auto beam = beam_search(*pipe.model, ctx, pipe.trie, 30);
    auto exact = full_rank(*pipe.model, ctx, pipe.trie);
    ASSERT_EQ(beam.size(), exact.size());
    for (std::size_t i = 0; i < beam.size(); ++i) {
      EXPECT_EQ(beam[i].item, exact[i].item);
      EXPECT_NEAR(beam[i].score, exact[i].score, 1e-12);
    }
  }
}

TEST(FullRank, TopOneIsArgmaxMass) {
  RandomPipeline pipe(2024, 25);
  Rng rng(31);
  for (int round = 0; round < 5; ++round) {
    auto ctx = pipe.random_context(rng);
    auto exact = full_rank(*pipe.model, ctx, pipe.trie);
    std::string best;
    double best_mass = -1.0;
    for (const auto& [item, id] : pipe.ids) {
      double m = pipe.model->item_mass(ctx, item);
      if (m > best_mass) {
        best_mass = m;
        best = item;
      }
    }
    EXPECT_EQ(exact[0].item, best);
  }
}

TEST(FullRank, CatalogOrderInvariance) {
  // Same catalog fed to fit() in a different vector order ranks identically.
  Rng rng(606);
  IdMap ids;
  std::vector<TfIdfVector> vectors;
  for (int i = 0; i < 15; ++i) {
    std::string item = "item" + std::to_string(i);
    std::vector<std::string> tokens = {"w" + std::to_string(rng.uniform_int(0, 5)),
                                       "u" + std::to_string(i)};
    ids[item] = id_of(item, tokens);
    vectors.push_back({item,
                       {{tokens[0], 0.5 + rng.uniform_real()},
                        {tokens[1], 0.5 + rng.uniform_real()}}});
  }
  TransitionGraph graph;
  SplitDataset split;
  split.train.push_back({"u", {"item0", "item1"}, {0, kSecondsPerDay}});
  auto model1 = BuiltinScorer::fit(split, graph, ids, vectors, ScoringConfig{});
  std::reverse(vectors.begin(), vectors.end());
  auto model2 = BuiltinScorer::fit(split, graph, ids, vectors, ScoringConfig{});
  auto trie = build_trie(ids);
  PromptFeatures f;
  f.items = {"item0"};
  f.rendered = {ids.at("item0").rendered};
  f.days = {0};
  f.inference_day = 2;
  auto r1 = full_rank(model1, ScoringContext{f}, trie);
  auto r2 = full_rank(model2, ScoringContext{f}, trie);
  ASSERT_EQ(r1.size(), r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    EXPECT_EQ(r1[i].item, r2[i].item);
    EXPECT_DOUBLE_EQ(r1[i].score, r2[i].score);
  }
}

TEST(BeamSearch, MonotoneWidening) {
  RandomPipeline pipe(404, 40);
  Rng rng(51);
  for (int round = 0; round < 8; ++round) {
    auto ctx = pipe.random_context(rng);
    double prev_best = -HUGE_VAL;
    for (int width = 1; width <= 12; ++width) {
      auto out = beam_search(*pipe.model, ctx, pipe.trie, width);
      ASSERT_FALSE(out.empty());
      EXPECT_GE(out[0].score, prev_best - 1e-12)
          << "width " << width << " worse than " << width - 1;
      prev_best = out[0].score;
    }
  }
}

TEST(BeamSearch, OutputsAreCatalogMembersAndSorted) {
  RandomPipeline pipe(7007, 35);
  Rng rng(61);
  for (int round = 0; round < 10; ++round) {
    auto ctx = pipe.random_context(rng);
    int width = static_cast<int>(rng.uniform_int(1, 35));
    auto out = beam_search(*pipe.model, ctx, pipe.trie, width);
    EXPECT_LE(out.size(), static_cast<std::size_t>(width));
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_TRUE(pipe.ids.count(out[i].item)) << out[i].item;
      EXPECT_EQ(pipe.ids.at(out[i].item).rendered, out[i].rendered);
      if (i > 0) EXPECT_LE(out[i].score, out[i - 1].score + 1e-12);
    }
  }
}

TEST(BeamSearch, InvalidWidthThrows) {
  RandomPipeline pipe(1, 5);
  Rng rng(2);
  auto ctx = pipe.random_context(rng);
  EXPECT_THROW(beam_search(*pipe.model, ctx, pipe.trie, 0), UsageError);
}

}  // namespace

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "chronorec/config.hpp"
#include "chronorec/corpus.hpp"
#include "chronorec/util.hpp"

namespace chronorec {

// Synthetic temporal-shift dataset. Items form clusters sharing two
// high-weight vocabulary words; users follow time-conditioned rules: short
// gaps stay in the current cluster, one long gap shifts the cluster
// forward. A crowd of repeat buyers concentrates transitions on three hub
// items per cluster, and a purchase wave on two trending items per cluster
// runs through the final days before the evaluation horizon.
//
// Roles live in staggered age bands so each role's trend window sees the
// intended signal (ages are days before the horizon):
//   wave    4..9      repeat buyers of one trending item; the trend signal
//   trend   0..4      targets; single-cluster history at 15..60
//   normal 25..110    hub-heavy crowd revisiting a favorite item
//   drift  62..104    recent block in the shifted cluster; old block 350+
struct SyntheticDataset {
  std::vector<Interaction> events;
  std::vector<ItemRecord> catalog;
};

namespace synth_detail {

inline const std::vector<std::string>& syllables() {
  static const std::vector<std::string> syl = {
      "ba", "do", "fi", "gu", "ka", "lo", "mi", "nu",
      "pe", "ra", "so", "tu", "ve", "wo", "za", "chi"};
  return syl;
}

inline std::string word(int n) {
  const auto& syl = syllables();
  std::string out;
  out += syl[static_cast<std::size_t>(n % 16)];
  out += syl[static_cast<std::size_t>((n / 16) % 16)];
  out += syl[static_cast<std::size_t>((n / 256) % 16)];
  return out;
}

// Round-robin pick with even coverage, so k-core filtering never starves
// an item.
class Rotor {
 public:
  explicit Rotor(int size) : size_(size) {}
  int next() {
    int v = pos_;
    pos_ = (pos_ + 1) % size_;
    return v;
  }

 private:
  int size_ = 1;
  int pos_ = 0;
};

}  // namespace synth_detail

inline SyntheticDataset gen_synthetic(const EngineConfig& cfg) {
  const int n_users = cfg.syn_users;
  const int n_clusters = cfg.syn_clusters;
  if (n_clusters < 2) throw UsageError("gen-synthetic needs >= 2 clusters");
  if (cfg.syn_items % n_clusters != 0) {
    throw UsageError("syn_items must be divisible by syn_clusters");
  }
  const int per_cluster = cfg.syn_items / n_clusters;
  if (per_cluster < 9) {
    throw UsageError("gen-synthetic needs >= 9 items per cluster");
  }
  if (cfg.syn_items > 1500) {
    throw UsageError("gen-synthetic supports at most 1500 items");
  }
  // 3 hubs + 2 trending per cluster; the plain remainder is split into a
  // pool for current purchases and a legacy pool for drift users' old
  // blocks, so old blocks cannot pollute the transition rows of items the
  // recent contexts end on.
  const int n_plain = per_cluster - 5;
  const int n_recent = std::max(2, n_plain / 2);
  const int n_legacy = n_plain - n_recent;

  const int n_wave = 6 * n_clusters;  // 3 users per trending item
  const int n_drift = static_cast<int>(0.55 * n_users);
  const int n_normal = static_cast<int>(0.25 * n_users);
  const int n_trend = n_users - n_drift - n_normal - n_wave;
  if (n_trend < n_clusters) {
    throw UsageError("gen-synthetic needs more users for this cluster count");
  }

  const std::int64_t t_end = 16252;  // evaluation horizon (day index)

  SyntheticDataset out;
  Rng rng(cfg.seed);

  auto item_id = [&](int cluster, int j) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "it%04d", cluster * per_cluster + j);
    return std::string(buf);
  };
  auto hub = [&](int cluster, int j) { return item_id(cluster, j); };          // j in 0..2
  auto trending = [&](int cluster, int j) { return item_id(cluster, 3 + j); }; // j in 0..1
  auto plain = [&](int cluster, int j) { return item_id(cluster, 5 + j); };    // j in 0..n_plain-1

  // Catalog: two shared cluster words dominate each document, two unique
  // words identify the item, one globally shared word adds mild overlap.
  for (int c = 0; c < n_clusters; ++c) {
    std::string wa = synth_detail::word(2 * c);
    std::string wb = synth_detail::word(2 * c + 1);
    for (int j = 0; j < per_cluster; ++j) {
      int g = c * per_cluster + j;
      std::string u1 = synth_detail::word(512 + 2 * g);
      std::string u2 = synth_detail::word(512 + 2 * g + 1);
      ItemRecord r;
      r.item = item_id(c, j);
      r.title = wa + " " + wb + " " + u1;
      r.categories = {wa};
      r.description = wa + " " + wa + " " + wa + " " + wb + " " + wb + " " +
                      u1 + " " + u2 + " goods";
      out.catalog.push_back(std::move(r));
    }
  }

  std::vector<synth_detail::Rotor> recent_rotor(
      static_cast<std::size_t>(n_clusters), synth_detail::Rotor(n_recent));
  std::vector<synth_detail::Rotor> legacy_rotor(
      static_cast<std::size_t>(n_clusters), synth_detail::Rotor(n_legacy));
  auto next_recent = [&](int cluster) {
    return plain(cluster, recent_rotor[static_cast<std::size_t>(cluster)].next());
  };
  auto next_legacy = [&](int cluster) {
    return plain(cluster,
                 n_recent + legacy_rotor[static_cast<std::size_t>(cluster)].next());
  };
  // Hub picks follow a fixed 3:2:1 pattern, so hub transitions concentrate
  // on hub 0 while every hub keeps enough events to survive k-core.
  static const int hub_pattern[6] = {0, 1, 0, 2, 0, 1};
  std::vector<synth_detail::Rotor> hub_rotor(
      static_cast<std::size_t>(n_clusters), synth_detail::Rotor(6));
  auto next_hub = [&](int cluster) {
    return hub(cluster,
               hub_pattern[hub_rotor[static_cast<std::size_t>(cluster)].next()]);
  };

  auto emit = [&](const std::string& user, const std::string& item,
                  std::int64_t age_days, int position) {
    std::int64_t ts = (t_end - age_days) * kSecondsPerDay + 40000 + position;
    out.events.push_back({user, item, ts});
  };

  int user_index = 0;
  auto user_name = [&](const char* role) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "u%05d_%s", user_index++, role);
    return std::string(buf);
  };

  // Drift users: majority of history in an old cluster far in the past,
  // then a long gap and a short recent block in the shifted cluster; the
  // target is a hub of the new cluster after a short final gap.
  for (int u = 0; u < n_drift; ++u) {
    int h = u % n_clusters;
    int g = (h + 1) % n_clusters;
    std::string user = user_name("drift");
    int n_old = static_cast<int>(rng.uniform_int(5, 8));
    std::vector<std::int64_t> old_ages(static_cast<std::size_t>(n_old));
    std::int64_t age = 350 + rng.uniform_int(0, 40);
    for (int i = n_old - 1; i >= 0; --i) {
      old_ages[static_cast<std::size_t>(i)] = age;
      age += rng.uniform_int(12, 35);
    }
    std::int64_t target_age = 62 + rng.uniform_int(0, 33);
    std::int64_t r1_age = target_age + rng.uniform_int(3, 4);
    std::int64_t r0_age = r1_age + rng.uniform_int(3, 5);
    int pos = 0;
    for (std::int64_t a : old_ages) emit(user, next_legacy(h), a, pos++);
    emit(user, next_recent(g), r0_age, pos++);  // train tail
    emit(user, next_recent(g), r1_age, pos++);  // valid
    std::string target = rng.chance(0.7) ? hub(g, 0) : hub(g, 1);
    emit(user, target, target_age, pos++);     // test
  }

  // Normal users: one cluster, alternating favorite/plain and hub buys.
  // The favorite item recurs in the history and is both held-out targets,
  // so these users are insensitive to the prompt variant and to mild
  // trend reranking.
  for (int u = 0; u < n_normal; ++u) {
    int h = u % n_clusters;
    std::string user = user_name("normal");
    int n_hist = static_cast<int>(rng.uniform_int(5, 7));
    std::string favorite = next_recent(h);
    std::vector<std::string> items;
    for (int i = 0; i < n_hist; ++i) {
      if (i % 2 == 1) {
        items.push_back(next_hub(h));
      } else if (i <= 4) {
        items.push_back(favorite);
      } else {
        items.push_back(next_recent(h));
      }
    }
    std::vector<std::int64_t> ages(items.size() + 2);
    std::int64_t age = 25 + rng.uniform_int(0, 5);  // test
    ages[items.size() + 1] = age;
    age += rng.uniform_int(3, 5);                   // valid
    ages[items.size()] = age;
    for (std::size_t i = items.size(); i-- > 0;) {
      age += rng.uniform_int(4, 10);
      ages[i] = age;
    }
    int pos = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      emit(user, items[i], ages[i], pos++);
    }
    emit(user, favorite, ages[items.size()], pos++);      // valid
    emit(user, favorite, ages[items.size() + 1], pos++);  // test
  }

  // Trend users: single-cluster history well before the wave, alternating
  // through hubs like the crowd; both held-out targets are the cluster's
  // trending items, bought during the wave.
  for (int u = 0; u < n_trend; ++u) {
    int h = u % n_clusters;
    std::string user = user_name("trend");
    int n_hist = static_cast<int>(rng.uniform_int(5, 7));
    std::vector<std::int64_t> ages(static_cast<std::size_t>(n_hist));
    std::int64_t age = 15 + rng.uniform_int(0, 5);
    for (int i = n_hist - 1; i >= 0; --i) {
      ages[static_cast<std::size_t>(i)] = age;
      age += rng.uniform_int(4, 8);
    }
    int pos = 0;
    for (int i = 0; i < n_hist; ++i) {
      emit(user, i % 2 == 1 ? next_hub(h) : next_recent(h),
           ages[static_cast<std::size_t>(i)], pos++);
    }
    emit(user, trending(h, 0), rng.uniform_int(3, 4), pos++);  // valid
    emit(user, trending(h, 1), rng.uniform_int(0, 1), pos++);  // test
  }

  // Wave users: the trend signal itself, one trending item each, all
  // purchases inside the final window.
  for (int w = 0; w < n_wave; ++w) {
    int idx = w / 3;
    int cluster = idx / 2;
    std::string item = trending(cluster, idx % 2);
    std::string user = user_name("wave");
    int pos = 0;
    for (std::int64_t a : {9, 8, 7, 6, 5, 4}) emit(user, item, a, pos++);
  }

  return out;
}

inline void write_synthetic(const EngineConfig& cfg) {
  SyntheticDataset data = gen_synthetic(cfg);
  save_events(cfg.events, data.events);
  save_catalog(cfg.metadata, data.catalog);
}

}  // namespace chronorec

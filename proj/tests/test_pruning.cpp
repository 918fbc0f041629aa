#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "vcprune/model_config.hpp"
#include "vcprune/prune_config.hpp"

using namespace vcprune;

namespace {

ModelConfig toy_config(int layers = 2, int heads = 4, int grid = 3) {
  ModelConfig mc;
  mc.n_layers = layers;
  mc.n_heads = heads;
  mc.d_model = heads * 4;
  mc.d_ffn = 16;
  mc.layout = TokenLayout{grid, grid, 4};
  return mc;
}

}  // namespace

TEST_CASE("no_prune covers the whole grid") {
  ModelConfig mc = toy_config();
  mc.layout = TokenLayout{24, 24, 4};
  const PruneConfig p = no_prune(mc);
  CHECK(p.radius >= 23.0 * std::sqrt(2.0));
  CHECK(p.last_visual_layer == mc.n_layers);
  CHECK(p.ffn_keep_ratio == 1.0);
  for (const auto &set : p.kept_heads) CHECK(static_cast<int>(set.size()) == mc.n_heads);
  CHECK_FALSE(p.dropped_block.has_value());
  CHECK_NOTHROW(validate_prune(p, mc));
}

TEST_CASE("heads_by_threshold keeps everything at alpha zero") {
  HeadActivity activity{{{0.5, 0.0, 1.5}, {0.2, 0.3, 0.4}}};
  const auto sel = heads_by_threshold(activity, 0.0);
  CHECK(sel.kept[0] == std::vector<int>{0, 1, 2});
  CHECK(sel.kept[1] == std::vector<int>{0, 1, 2});
  CHECK(sel.fallback_layers.empty());
}

TEST_CASE("heads_by_threshold falls back to the best head and flags the layer") {
  HeadActivity activity{{{0.5, 0.9, 0.1}, {0.2, 0.2, 0.2}}};
  const auto sel = heads_by_threshold(activity, 10.0);
  CHECK(sel.kept[0] == std::vector<int>{1});
  CHECK(sel.kept[1] == std::vector<int>{0});  // tie -> lowest index
  CHECK(sel.fallback_layers == std::vector<int>{0, 1});
}

TEST_CASE("heads_by_threshold direct comparison") {
  HeadActivity activity{{{0.1, 2.0, 0.5}}};
  const auto sel = heads_by_threshold(activity, 0.4);
  CHECK(sel.kept[0] == std::vector<int>{1, 2});
}

TEST_CASE("heads_by_count keeps top-k with low-index tie break") {
  HeadActivity activity{{{0.3, 0.9, 0.9}}};
  CHECK(heads_by_count(activity, 1)[0] == std::vector<int>{1});
  CHECK(heads_by_count(activity, 3)[0] == std::vector<int>{0, 1, 2});
  HeadActivity sorted{{{5.0, 1.0, 3.0, 2.0}}};
  CHECK(heads_by_count(sorted, 2)[0] == std::vector<int>{0, 2});
  CHECK_THROWS_AS(heads_by_count(activity, 0), std::invalid_argument);
  CHECK_THROWS_AS(heads_by_count(activity, 4), std::invalid_argument);
}

TEST_CASE("threshold and count selections agree between order statistics") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_heads = 2 + static_cast<int>(rng() % 7);
    const int n_layers = 1 + static_cast<int>(rng() % 3);
    HeadActivity activity;
    for (int l = 0; l < n_layers; ++l) {
      std::vector<double> rho;
      for (int h = 0; h < n_heads; ++h) rho.push_back(dist(rng));
      std::sort(rho.begin(), rho.end());  // then shuffle for distinctness per index
      std::shuffle(rho.begin(), rho.end(), rng);
      activity.rho.push_back(rho);
    }
    const int k = 1 + static_cast<int>(rng() % n_heads);
    if (k == n_heads) continue;
    // alpha strictly between every layer's k-th and (k+1)-th largest rho
    double lo = 0.0, hi = 1e18;
    for (const auto &rho : activity.rho) {
      auto sorted = rho;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      lo = std::max(lo, sorted[k]);
      hi = std::min(hi, sorted[k - 1]);
    }
    if (!(lo < hi)) continue;  // duplicate order statistics; property not applicable
    const double alpha = (lo + hi) / 2.0;
    CHECK(heads_by_threshold(activity, alpha).kept == heads_by_count(activity, k));
  }
}

TEST_CASE("ffn_neuron_subset is deterministic and sized by the keep ratio") {
  CHECK(ffn_neuron_subset(8, 1.0, 3).size() == 8);
  CHECK(ffn_neuron_subset(8, 1.0, 3) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
  const auto a = ffn_neuron_subset(100, 0.35, 42);
  const auto b = ffn_neuron_subset(100, 0.35, 42);
  CHECK(a == b);
  CHECK(a.size() == 35);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(ffn_neuron_subset(11008, 0.5, 9).size() == 5504);
  CHECK(ffn_subset_size(10, 0.01) == 1);  // never empty
  CHECK_THROWS_AS(ffn_neuron_subset(8, 0.0, 1), std::invalid_argument);
}

TEST_CASE("suffix_drop arithmetic") {
  ModelConfig mc = toy_config(40);
  CHECK(suffix_drop(mc, no_prune(mc), 0).last_visual_layer == 40);
  CHECK(suffix_drop(mc, no_prune(mc), 20).last_visual_layer == 20);
  ModelConfig mc32 = toy_config(32);
  CHECK(suffix_drop(mc32, no_prune(mc32), 16).last_visual_layer == 16);
  CHECK_THROWS_AS(suffix_drop(mc, no_prune(mc), 41), std::invalid_argument);
  CHECK_THROWS_AS(suffix_drop(mc, no_prune(mc), -1), std::invalid_argument);
}

TEST_CASE("block_drop marks the range text-only and composes by union") {
  ModelConfig mc = toy_config(40);
  const PruneConfig p = block_drop(mc, no_prune(mc), 20, 25);
  for (int l = 0; l < 40; ++l)
    CHECK(p.layer_computes_visual(l) == (l < 20 || l >= 25));

  // (0, L) skips exactly the same layers as suffix_drop(L)
  const PruneConfig whole = block_drop(mc, no_prune(mc), 0, 40);
  const PruneConfig suffix = suffix_drop(mc, no_prune(mc), 40);
  for (int l = 0; l < 40; ++l)
    CHECK(whole.layer_computes_visual(l) == suffix.layer_computes_visual(l));

  // union with last_visual_layer
  const PruneConfig both = block_drop(mc, suffix_drop(mc, no_prune(mc), 10), 5, 8);
  for (int l = 0; l < 40; ++l)
    CHECK(both.layer_computes_visual(l) == (l < 30 && !(l >= 5 && l < 8)));

  CHECK_THROWS_AS(block_drop(mc, no_prune(mc), 5, 5), std::invalid_argument);
  CHECK_THROWS_AS(block_drop(mc, no_prune(mc), -1, 3), std::invalid_argument);
  CHECK_THROWS_AS(block_drop(mc, no_prune(mc), 30, 41), std::invalid_argument);
}

TEST_CASE("validate_prune rejects malformed configs") {
  const ModelConfig mc = toy_config();
  PruneConfig p = no_prune(mc);
  p.radius = -1.0;
  CHECK_THROWS_AS(validate_prune(p, mc), std::invalid_argument);
  p = no_prune(mc);
  p.kept_heads[0].clear();
  CHECK_THROWS_AS(validate_prune(p, mc), std::invalid_argument);
  p = no_prune(mc);
  p.kept_heads[1] = {0, 0};
  CHECK_THROWS_AS(validate_prune(p, mc), std::invalid_argument);
  p = no_prune(mc);
  p.kept_heads[1] = {mc.n_heads};
  CHECK_THROWS_AS(validate_prune(p, mc), std::invalid_argument);
  p = no_prune(mc);
  p.ffn_keep_ratio = 0.0;
  CHECK_THROWS_AS(validate_prune(p, mc), std::invalid_argument);
  p = no_prune(mc);
  p.ffn_keep_ratio = 1.5;
  CHECK_THROWS_AS(validate_prune(p, mc), std::invalid_argument);
  p = no_prune(mc);
  p.last_visual_layer = mc.n_layers + 1;
  CHECK_THROWS_AS(validate_prune(p, mc), std::invalid_argument);
  p = no_prune(mc);
  p.dropped_block = std::make_pair(1, 1);
  CHECK_THROWS_AS(validate_prune(p, mc), std::invalid_argument);
}

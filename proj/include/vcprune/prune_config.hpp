#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vcprune/model_config.hpp"
#include "vcprune/rng.hpp"

namespace vcprune {

/// The four pruning knobs. kept_heads holds one sorted index set per layer;
/// layers with index >= last_visual_layer, as well as layers inside
/// dropped_block, skip all visual computation (the two compose by union).
struct PruneConfig {
  DistanceMetric metric = DistanceMetric::kEuclidean2d;
  double radius = 0.0;
  std::vector<std::vector<int>> kept_heads;
  double ffn_keep_ratio = 1.0;
  std::uint64_t ffn_neuron_seed = 0;
  int last_visual_layer = 0;
  std::optional<std::pair<int, int>> dropped_block;  // [start, end)

  bool layer_computes_visual(int layer) const {
    if (layer >= last_visual_layer) return false;
    if (dropped_block && layer >= dropped_block->first && layer < dropped_block->second)
      return false;
    return true;
  }
};

inline void validate_prune(const PruneConfig &p, int n_layers, int n_heads) {
  if (!(p.radius >= 0.0)) throw std::invalid_argument("PruneConfig: radius must be >= 0");
  if (static_cast<int>(p.kept_heads.size()) != n_layers)
    throw std::invalid_argument("PruneConfig: kept_heads must list one set per layer");
  for (int l = 0; l < n_layers; ++l) {
    const auto &set = p.kept_heads[l];
    if (set.empty())
      throw std::invalid_argument("PruneConfig: empty head set at layer " + std::to_string(l));
    int prev = -1;
    for (int h : set) {
      if (h < 0 || h >= n_heads)
        throw std::invalid_argument("PruneConfig: head index " + std::to_string(h) +
                                    " out of range at layer " + std::to_string(l));
      if (h <= prev)
        throw std::invalid_argument("PruneConfig: head set not sorted/unique at layer " +
                                    std::to_string(l));
      prev = h;
    }
  }
  if (!(p.ffn_keep_ratio > 0.0) || p.ffn_keep_ratio > 1.0)
    throw std::invalid_argument("PruneConfig: ffn_keep_ratio must be in (0, 1]");
  if (p.last_visual_layer < 0 || p.last_visual_layer > n_layers)
    throw std::invalid_argument("PruneConfig: last_visual_layer out of range");
  if (p.dropped_block) {
    const auto [s, e] = *p.dropped_block;
    if (!(0 <= s && s < e && e <= n_layers))
      throw std::invalid_argument("PruneConfig: dropped_block range invalid");
  }
}

inline void validate_prune(const PruneConfig &p, const ModelConfig &mc) {
  validate_prune(p, mc.n_layers, mc.n_heads);
}

inline std::vector<int> all_heads(int n_heads) {
  std::vector<int> v(n_heads);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

/// Baseline identity config: full window, all heads, whole FFN, every layer
/// computes visual tokens. forward() and the cost model treat it exactly as
/// the unpruned model.
inline PruneConfig no_prune(const ModelConfig &mc) {
  PruneConfig p;
  p.metric = DistanceMetric::kEuclidean2d;
  p.radius = mc.layout.grid_diagonal();
  p.kept_heads.assign(mc.n_layers, all_heads(mc.n_heads));
  p.ffn_keep_ratio = 1.0;
  p.ffn_neuron_seed = 0;
  p.last_visual_layer = mc.n_layers;
  p.dropped_block.reset();
  return p;
}

/// Number of FFN neurons kept: round(keep_ratio * d_ffn), at least one.
inline int ffn_subset_size(int d_ffn, double keep_ratio) {
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0)
    throw std::invalid_argument("ffn_subset_size: keep_ratio must be in (0, 1]");
  const long long n = std::llround(keep_ratio * static_cast<double>(d_ffn));
  return static_cast<int>(std::max(1LL, std::min<long long>(n, d_ffn)));
}

/// Deterministic neuron subset: a seeded partial Fisher-Yates draw, returned
/// sorted ascending.
inline std::vector<int> ffn_neuron_subset(int d_ffn, double keep_ratio, std::uint64_t seed) {
  const int size = ffn_subset_size(d_ffn, keep_ratio);
  std::vector<int> pool(d_ffn);
  std::iota(pool.begin(), pool.end(), 0);
  SplitMix64 rng(mix_seed(seed, 0x66666e00ULL));
  for (int i = 0; i < size; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d_ffn - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(size);
  std::sort(pool.begin(), pool.end());
  return pool;
}

/// Per-layer head activity (rho), as produced by the analysis module.
struct HeadActivity {
  std::vector<std::vector<double>> rho;  // [layer][head]

  void validate() const {
    for (const auto &layer : rho)
      for (double v : layer)
        if (!(v >= 0.0) || !std::isfinite(v))
          throw std::invalid_argument("HeadActivity: rho values must be finite and >= 0");
  }
};

struct HeadSelection {
  std::vector<std::vector<int>> kept;
  // Layers where every rho fell below the threshold; their single best head
  // was kept instead of emptying the set.
  std::vector<int> fallback_layers;
};

/// Keep per layer exactly the heads with rho >= alpha. A layer that would
/// end up empty keeps its highest-rho head (lowest index on ties) and is
/// flagged.
inline HeadSelection heads_by_threshold(const HeadActivity &activity, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("heads_by_threshold: alpha must be >= 0");
  activity.validate();
  HeadSelection sel;
  sel.kept.reserve(activity.rho.size());
  for (std::size_t l = 0; l < activity.rho.size(); ++l) {
    const auto &rho = activity.rho[l];
    std::vector<int> kept;
    for (int h = 0; h < static_cast<int>(rho.size()); ++h)
      if (rho[h] >= alpha) kept.push_back(h);
    if (kept.empty()) {
      int best = 0;
      for (int h = 1; h < static_cast<int>(rho.size()); ++h)
        if (rho[h] > rho[best]) best = h;
      kept.push_back(best);
      sel.fallback_layers.push_back(static_cast<int>(l));
    }
    sel.kept.push_back(std::move(kept));
  }
  return sel;
}

/// Keep per layer the k highest-rho heads; ties break toward the lower head
/// index.
inline std::vector<std::vector<int>> heads_by_count(const HeadActivity &activity, int k) {
  activity.validate();
  std::vector<std::vector<int>> out;
  out.reserve(activity.rho.size());
  for (std::size_t l = 0; l < activity.rho.size(); ++l) {
    const auto &rho = activity.rho[l];
    const int n_heads = static_cast<int>(rho.size());
    if (k < 1 || k > n_heads)
      throw std::invalid_argument("heads_by_count: k out of range at layer " + std::to_string(l));
    std::vector<int> order(n_heads);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&rho](int a, int b) {
      if (rho[a] != rho[b]) return rho[a] > rho[b];
      return a < b;
    });
    order.resize(k);
    std::sort(order.begin(), order.end());
    out.push_back(std::move(order));
  }
  return out;
}

/// Mark the last n_last layers text-only.
inline PruneConfig suffix_drop(const ModelConfig &mc, PruneConfig base, int n_last) {
  if (n_last < 0 || n_last > mc.n_layers)
    throw std::invalid_argument("suffix_drop: n_last out of range [0, n_layers]");
  base.last_visual_layer = mc.n_layers - n_last;
  return base;
}

/// Mark layers [start, end) text-only; composes with last_visual_layer by
/// union of skipped layers.
inline PruneConfig block_drop(const ModelConfig &mc, PruneConfig base, int start, int end) {
  if (!(0 <= start && start < end && end <= mc.n_layers))
    throw std::invalid_argument("block_drop: invalid layer range");
  base.dropped_block = std::make_pair(start, end);
  return base;
}

}  // namespace vcprune

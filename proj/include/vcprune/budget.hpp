#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "vcprune/flops.hpp"
#include "vcprune/model_config.hpp"
#include "vcprune/prune_config.hpp"

namespace vcprune {

/// Discretized grid over the four pruning knobs. Heads enter as a per-layer
/// retained count (cost depends only on the count; pick identities with
/// heads_by_threshold / heads_by_count afterwards).
struct BudgetSearchSpace {
  DistanceMetric metric = DistanceMetric::kEuclidean2d;
  std::vector<double> radii;
  std::vector<int> heads_per_layer;
  std::vector<double> ffn_keep_ratios;
  std::vector<int> suffix_drops;
};

struct BudgetSolution {
  PruneConfig prune;
  double flops = 0.0;
};

/// Exhaustively evaluates the grid and returns every config whose cost fits
/// under target_flops, ascending by cost (ties break on the knob tuple).
/// An empty result is a normal outcome.
inline std::vector<BudgetSolution> solve_budget(const ModelConfig &config, double target_flops,
                                                const BudgetSearchSpace &space,
                                                const FlopsConvention &conv = FlopsConvention{}) {
  config.validate();
  if (space.radii.empty() || space.heads_per_layer.empty() || space.ffn_keep_ratios.empty() ||
      space.suffix_drops.empty())
    throw std::invalid_argument("solve_budget: every knob range must be non-empty");
  for (double r : space.radii)
    if (!(r >= 0.0)) throw std::invalid_argument("solve_budget: radius must be >= 0");
  for (int k : space.heads_per_layer)
    if (k < 1 || k > config.n_heads)
      throw std::invalid_argument("solve_budget: heads_per_layer out of range");
  for (double q : space.ffn_keep_ratios)
    if (!(q > 0.0) || q > 1.0)
      throw std::invalid_argument("solve_budget: ffn_keep_ratio must be in (0, 1]");
  for (int s : space.suffix_drops)
    if (s < 0 || s > config.n_layers)
      throw std::invalid_argument("solve_budget: suffix_drop out of range");

  const int n_visual = config.layout.n_visual();
  const int n_text = config.layout.n_text;

  std::vector<BudgetSolution> feasible;
  for (double radius : space.radii) {
    // The window total depends only on (metric, radius); hoist it out of the
    // inner knob loops.
    const std::uint64_t window = detail::visual_window_total(config.layout, space.metric, radius,
                                                             config.causal_visual);
    for (int k : space.heads_per_layer) {
      std::vector<int> first_k(k);
      std::iota(first_k.begin(), first_k.end(), 0);
      for (double keep : space.ffn_keep_ratios) {
        for (int drop : space.suffix_drops) {
          PruneConfig p;
          p.metric = space.metric;
          p.radius = radius;
          p.kept_heads.assign(config.n_layers, first_k);
          p.ffn_keep_ratio = keep;
          p.last_visual_layer = config.n_layers - drop;
          validate_prune(p, config);
          const double cost =
              detail::flops_pruned_impl(config, p, n_visual, n_text, conv, window).grand_total;
          if (cost <= target_flops) feasible.push_back({std::move(p), cost});
        }
      }
    }
  }
  std::sort(feasible.begin(), feasible.end(), [](const BudgetSolution &a, const BudgetSolution &b) {
    const auto key = [](const BudgetSolution &s) {
      return std::make_tuple(s.flops, s.prune.radius, s.prune.kept_heads.front().size(),
                             s.prune.ffn_keep_ratio, s.prune.last_visual_layer);
    };
    return key(a) < key(b);
  });
  return feasible;
}

}  // namespace vcprune

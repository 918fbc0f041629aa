#pragma once

#include "vcprune/flops.hpp"
#include "vcprune/model_config.hpp"
#include "vcprune/prune_config.hpp"

namespace vcprune {

/// LLaVA-1.5-7B-class language model: 32 layers, d 4096, 32 heads,
/// FFN 11008, 24x24 visual grid.
inline ModelConfig llava_7b_config() {
  ModelConfig c;
  c.n_layers = 32;
  c.d_model = 4096;
  c.n_heads = 32;
  c.d_ffn = 11008;
  c.layout = TokenLayout{24, 24, kCalibratedTextTokens};
  c.causal_text = false;
  c.causal_visual = false;
  return c;
}

/// LLaVA-1.5-13B-class language model: 40 layers, d 5120, 40 heads,
/// FFN 13824, 24x24 visual grid.
inline ModelConfig llava_13b_config() {
  ModelConfig c;
  c.n_layers = 40;
  c.d_model = 5120;
  c.n_heads = 40;
  c.d_ffn = 13824;
  c.layout = TokenLayout{24, 24, kCalibratedTextTokens};
  c.causal_text = false;
  c.causal_visual = false;
  return c;
}

/// PruneConfig with the same knob values at every layer: Euclidean window of
/// the given radius, the first `heads` heads kept per layer, the given FFN
/// keep ratio, and the last `suffix_dropped` layers text-only.
inline PruneConfig uniform_prune(const ModelConfig &config, double radius, int heads,
                                 double ffn_keep_ratio, int suffix_dropped) {
  PruneConfig p = no_prune(config);
  p.radius = radius;
  std::vector<int> first(heads);
  for (int i = 0; i < heads; ++i) first[i] = i;
  p.kept_heads.assign(config.n_layers, first);
  p.ffn_keep_ratio = ffn_keep_ratio;
  p = suffix_drop(config, std::move(p), suffix_dropped);
  validate_prune(p, config);
  return p;
}

}  // namespace vcprune

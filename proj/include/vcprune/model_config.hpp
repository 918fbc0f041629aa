#pragma once

#include <stdexcept>

#include "vcprune/layout.hpp"

namespace vcprune {

/// Architecture hyperparameters of the mixed-modality decoder.
struct ModelConfig {
  int n_layers = 1;
  int d_model = 8;
  int n_heads = 1;
  int d_ffn = 16;
  TokenLayout layout;
  bool causal_text = true;
  // Window attention is symmetric by default; set this to additionally
  // restrict visual queries to keys at or before their own position.
  bool causal_visual = false;
  // The FFN applies the activation after both projections by default; turn
  // this off for the conventional single-activation FFN.
  bool outer_ffn_activation = true;

  int head_dim() const { return d_model / n_heads; }

  void validate() const {
    layout.validate();
    if (n_layers < 1) throw std::invalid_argument("ModelConfig: n_layers must be >= 1");
    if (d_model < 1) throw std::invalid_argument("ModelConfig: d_model must be >= 1");
    if (n_heads < 1) throw std::invalid_argument("ModelConfig: n_heads must be >= 1");
    if (d_ffn < 1) throw std::invalid_argument("ModelConfig: d_ffn must be >= 1");
    if (d_model % n_heads != 0)
      throw std::invalid_argument("ModelConfig: n_heads must divide d_model");
  }
};

}  // namespace vcprune

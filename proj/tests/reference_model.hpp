// Brute-force reference forward pass used as the oracle for the pruned
// implementation. It realizes the same semantics the slow, explicit way:
// full (Nv+Nt) x (Nv+Nt) additive masks per head, full-width matmuls, and
// explicit zeroing of dropped heads' visual rows and dropped FFN neurons.
// It shares only the leaf primitives (Matrix, matmul, masked_softmax), which
// have their own triple-loop oracles.
#pragma once

#include <cmath>
#include <set>
#include <vector>

#include "vcprune/matrix.hpp"
#include "vcprune/model.hpp"

namespace vcprune_test {

using vcprune::AdditiveMask;
using vcprune::Matrix;
using vcprune::ModelConfig;
using vcprune::ModelWeights;
using vcprune::PruneConfig;

inline Matrix<double> rms_rows_ref(const Matrix<double> &x) {
  Matrix<double> out(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r) {
    double ss = 0.0;
    for (int c = 0; c < x.cols; ++c) ss += x.at(r, c) * x.at(r, c);
    if (ss == 0.0) continue;
    const double inv = 1.0 / std::sqrt(ss / x.cols);
    for (int c = 0; c < x.cols; ++c) out.at(r, c) = x.at(r, c) * inv;
  }
  return out;
}

inline double silu_ref(double v) { return v / (1.0 + std::exp(-v)); }

inline Matrix<double> head_slice(const Matrix<double> &m, int head, int dh) {
  Matrix<double> out(m.rows, dh);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < dh; ++c) out.at(r, c) = m.at(r, head * dh + c);
  return out;
}

// Explicit per-head mask for a visual-computing layer.
inline AdditiveMask visual_layer_mask(const ModelConfig &config, const PruneConfig &prune) {
  const int nv = config.layout.n_visual();
  const int n = config.layout.total_tokens();
  AdditiveMask mask(n, n, /*all_blocked=*/true);
  for (int i = 0; i < nv; ++i)
    for (int j = 0; j < nv; ++j) {
      if (config.causal_visual && j > i) continue;
      if (vcprune::distance(config.layout, prune.metric, i, j) <= prune.radius)
        mask.set_blocked(i, j, false);
    }
  for (int t = nv; t < n; ++t) {
    for (int j = 0; j < nv; ++j) mask.set_blocked(t, j, false);
    for (int j = nv; j < n; ++j)
      if (!config.causal_text || j <= t) mask.set_blocked(t, j, false);
  }
  return mask;
}

inline Matrix<double> reference_forward(const ModelConfig &config,
                                        const ModelWeights<double> &weights,
                                        const Matrix<double> &input, const PruneConfig &prune) {
  const int nv = config.layout.n_visual();
  const int nt = config.layout.n_text;
  const int n = config.layout.total_tokens();
  const int d = config.d_model;
  const int dh = config.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix<double> x = input;
  for (int l = 0; l < config.n_layers; ++l) {
    const auto &w = weights.layers[l];
    if (prune.layer_computes_visual(l)) {
      const std::set<int> kept(prune.kept_heads[l].begin(), prune.kept_heads[l].end());
      const AdditiveMask mask = visual_layer_mask(config, prune);
      const Matrix<double> u = rms_rows_ref(x);
      const Matrix<double> q = vcprune::matmul(u, w.wq);
      const Matrix<double> k = vcprune::matmul(u, w.wk);
      const Matrix<double> v = vcprune::matmul(u, w.wv);
      Matrix<double> heads_out(n, d);
      for (int h = 0; h < config.n_heads; ++h) {
        Matrix<double> scores =
            vcprune::matmul(head_slice(q, h, dh), vcprune::transpose(head_slice(k, h, dh)));
        for (auto &s : scores.data) s *= inv_sqrt_dh;
        const Matrix<double> attn = vcprune::masked_softmax(scores, mask);
        Matrix<double> out = vcprune::matmul(attn, head_slice(v, h, dh));
        if (!kept.count(h))
          for (int i = 0; i < nv; ++i)
            for (int c = 0; c < dh; ++c) out.at(i, c) = 0.0;
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < dh; ++c) heads_out.at(r, h * dh + c) = out.at(r, c);
      }
      const Matrix<double> proj = vcprune::matmul(heads_out, w.wo);
      for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += proj.data[i];

      const Matrix<double> uf = rms_rows_ref(x);
      Matrix<double> z = vcprune::matmul(uf, w.w1);
      for (auto &val : z.data) val = silu_ref(val);
      const auto subset = vcprune::ffn_neuron_subset(config.d_ffn, prune.ffn_keep_ratio,
                                                     vcprune::mix_seed(prune.ffn_neuron_seed, l));
      std::vector<char> keep_neuron(config.d_ffn, 0);
      for (int s : subset) keep_neuron[s] = 1;
      for (int i = 0; i < nv; ++i)
        for (int s = 0; s < config.d_ffn; ++s)
          if (!keep_neuron[s]) z.at(i, s) = 0.0;
      Matrix<double> y = vcprune::matmul(z, w.w2);
      if (config.outer_ffn_activation)
        for (auto &val : y.data) val = silu_ref(val);
      for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += y.data[i];
    } else {
      // text-only layer: visual rows pass through untouched
      Matrix<double> xt(nt, d);
      for (int t = 0; t < nt; ++t)
        for (int c = 0; c < d; ++c) xt.at(t, c) = x.at(nv + t, c);
      AdditiveMask mask(nt, nt, /*all_blocked=*/true);
      for (int t = 0; t < nt; ++t)
        for (int j = 0; j < nt; ++j)
          if (!config.causal_text || j <= t) mask.set_blocked(t, j, false);
      const Matrix<double> u = rms_rows_ref(xt);
      const Matrix<double> q = vcprune::matmul(u, w.wq);
      const Matrix<double> k = vcprune::matmul(u, w.wk);
      const Matrix<double> v = vcprune::matmul(u, w.wv);
      Matrix<double> heads_out(nt, d);
      for (int h = 0; h < config.n_heads; ++h) {
        Matrix<double> scores =
            vcprune::matmul(head_slice(q, h, dh), vcprune::transpose(head_slice(k, h, dh)));
        for (auto &s : scores.data) s *= inv_sqrt_dh;
        const Matrix<double> attn = vcprune::masked_softmax(scores, mask);
        const Matrix<double> out = vcprune::matmul(attn, head_slice(v, h, dh));
        for (int r = 0; r < nt; ++r)
          for (int c = 0; c < dh; ++c) heads_out.at(r, h * dh + c) = out.at(r, c);
      }
      const Matrix<double> proj = vcprune::matmul(heads_out, w.wo);
      for (int t = 0; t < nt; ++t)
        for (int c = 0; c < d; ++c) xt.at(t, c) += proj.at(t, c);
      const Matrix<double> uf = rms_rows_ref(xt);
      Matrix<double> z = vcprune::matmul(uf, w.w1);
      for (auto &val : z.data) val = silu_ref(val);
      Matrix<double> y = vcprune::matmul(z, w.w2);
      if (config.outer_ffn_activation)
        for (auto &val : y.data) val = silu_ref(val);
      for (int t = 0; t < nt; ++t)
        for (int c = 0; c < d; ++c) x.at(nv + t, c) = xt.at(t, c) + y.at(t, c);
    }
  }
  return x;
}

}  // namespace vcprune_test

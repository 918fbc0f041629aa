#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vcprune/matrix.hpp"
#include "vcprune/model_config.hpp"
#include "vcprune/prune_config.hpp"

namespace vcprune {

template <typename Real>
struct LayerWeights {
  Matrix<Real> wq, wk, wv, wo;  // d_model x d_model
  Matrix<Real> w1;              // d_model x d_ffn
  Matrix<Real> w2;              // d_ffn x d_model
};

template <typename Real>
struct ModelWeights {
  std::vector<LayerWeights<Real>> layers;

  bool all_finite() const {
    for (const auto &l : layers)
      if (!(l.wq.all_finite() && l.wk.all_finite() && l.wv.all_finite() &&
            l.wo.all_finite() && l.w1.all_finite() && l.w2.all_finite()))
        return false;
    return true;
  }
};

/// Per-layer capture of attention weights (one query x key matrix per head)
/// and per-head output norms (head x token). Rows that were never computed
/// (dropped heads' visual rows, visual rows in text-only layers) stay exactly
/// zero; every computed row sums to 1 over its attendable keys.
template <typename Real>
struct AttentionRecord {
  int layer = 0;
  std::vector<Matrix<Real>> head_weights;
  Matrix<Real> head_output_norms;
};

template <typename Real>
struct ForwardOutput {
  Matrix<Real> hidden;
  std::vector<AttentionRecord<Real>> records;  // one per layer when captured
};

namespace detail {

// Deterministic draw stream per (seed, layer, matrix). Entries are uniform
// in [-sqrt(3), sqrt(3)] / sqrt(d_model): unit variance before the 1/sqrt(d)
// scale, and everything stays inside the 5/sqrt(d) envelope.
template <typename Real>
Matrix<Real> init_matrix(int rows, int cols, double scale, std::uint64_t stream_seed) {
  Matrix<Real> m(rows, cols);
  SplitMix64 rng(stream_seed);
  const double amp = std::sqrt(3.0) * scale;
  for (auto &v : m.data) v = static_cast<Real>(amp * rng.next_symmetric());
  return m;
}

}  // namespace detail

template <typename Real>
ModelWeights<Real> init_weights(const ModelConfig &config, std::uint64_t seed) {
  config.validate();
  ModelWeights<Real> w;
  w.layers.reserve(config.n_layers);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  const int d = config.d_model, f = config.d_ffn;
  for (int l = 0; l < config.n_layers; ++l) {
    LayerWeights<Real> lw;
    lw.wq = detail::init_matrix<Real>(d, d, scale, mix_seed(seed, l, 1));
    lw.wk = detail::init_matrix<Real>(d, d, scale, mix_seed(seed, l, 2));
    lw.wv = detail::init_matrix<Real>(d, d, scale, mix_seed(seed, l, 3));
    lw.wo = detail::init_matrix<Real>(d, d, scale, mix_seed(seed, l, 4));
    lw.w1 = detail::init_matrix<Real>(d, f, scale, mix_seed(seed, l, 5));
    lw.w2 = detail::init_matrix<Real>(f, d, scale, mix_seed(seed, l, 6));
    w.layers.push_back(std::move(lw));
  }
  return w;
}

/// Deterministic input embedding for runs that start from a seed rather than
/// real data.
template <typename Real>
Matrix<Real> random_input(const ModelConfig &config, std::uint64_t seed) {
  config.validate();
  return detail::init_matrix<Real>(config.layout.total_tokens(), config.d_model,
                                   1.0 / std::sqrt(static_cast<double>(config.d_model)),
                                   mix_seed(seed, 0xa11d47aULL));
}

namespace detail {

// Scale-free row normalization: x / rms(x). Exactly-zero rows stay zero.
template <typename Real>
Matrix<Real> rms_normalize_rows(const Matrix<Real> &x) {
  Matrix<Real> out(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r) {
    const Real *src = x.row_ptr(r);
    Real ss = Real(0);
    for (int c = 0; c < x.cols; ++c) ss += src[c] * src[c];
    Real *dst = out.row_ptr(r);
    if (ss == Real(0)) continue;
    const Real inv = Real(1) / std::sqrt(ss / static_cast<Real>(x.cols));
    for (int c = 0; c < x.cols; ++c) dst[c] = src[c] * inv;
  }
  return out;
}

// Softmax over the scores of one query row, written back in place.
template <typename Real>
void softmax_in_place(std::vector<Real> &scores) {
  Real m = scores[0];
  for (Real s : scores) m = std::max(m, s);
  Real denom = Real(0);
  for (Real &s : scores) {
    s = std::exp(s - m);
    denom += s;
  }
  for (Real &s : scores) s /= denom;
}

template <typename Real>
struct LayerScratch {
  std::vector<std::vector<int>> windows;        // visual neighbor sets
  std::vector<std::vector<int>> neuron_subset;  // per-layer kept FFN neurons
  std::vector<std::vector<std::uint8_t>> head_kept;  // per-layer head mask
};

template <typename Real>
LayerScratch<Real> build_scratch(const ModelConfig &config, const PruneConfig &prune) {
  LayerScratch<Real> s;
  const int nv = config.layout.n_visual();
  s.windows.reserve(nv);
  for (int i = 0; i < nv; ++i)
    s.windows.push_back(neighbors_within(config.layout, prune.metric, i, prune.radius,
                                         config.causal_visual));
  s.neuron_subset.reserve(config.n_layers);
  s.head_kept.reserve(config.n_layers);
  for (int l = 0; l < config.n_layers; ++l) {
    s.neuron_subset.push_back(ffn_neuron_subset(config.d_ffn, prune.ffn_keep_ratio,
                                                mix_seed(prune.ffn_neuron_seed, l)));
    std::vector<std::uint8_t> kept(config.n_heads, 0);
    for (int h : prune.kept_heads[l]) kept[h] = 1;
    s.head_kept.push_back(std::move(kept));
  }
  return s;
}

// Attention + FFN for one layer of a visual-computing layer. Visual queries
// attend inside their window (kept heads only); text queries attend to every
// visual key plus text keys (causally when configured) on every head.
template <typename Real>
void layer_visual_active(const ModelConfig &config, const LayerWeights<Real> &w,
                         const LayerScratch<Real> &scratch, int layer, Matrix<Real> &x,
                         AttentionRecord<Real> *record) {
  const int nv = config.layout.n_visual();
  const int n = config.layout.total_tokens();
  const int d = config.d_model, dh = config.head_dim(), n_heads = config.n_heads;
  const Real inv_sqrt_dh = Real(1) / std::sqrt(static_cast<Real>(dh));
  const auto &kept = scratch.head_kept[layer];

  const Matrix<Real> u = rms_normalize_rows(x);
  const Matrix<Real> q = matmul(u, w.wq);
  const Matrix<Real> k = matmul(u, w.wk);
  const Matrix<Real> v = matmul(u, w.wv);

  Matrix<Real> heads_out(n, d);
  std::vector<Real> scores;
  std::vector<int> keys;
  for (int h = 0; h < n_heads; ++h) {
    const int off = h * dh;
    Matrix<Real> *wrec = record ? &record->head_weights[h] : nullptr;
    // visual query rows
    if (kept[h]) {
      for (int i = 0; i < nv; ++i) {
        const auto &win = scratch.windows[i];
        scores.assign(win.size(), Real(0));
        const Real *qi = q.row_ptr(i) + off;
        for (std::size_t jj = 0; jj < win.size(); ++jj) {
          const Real *kj = k.row_ptr(win[jj]) + off;
          Real s = Real(0);
          for (int c = 0; c < dh; ++c) s += qi[c] * kj[c];
          scores[jj] = s * inv_sqrt_dh;
        }
        softmax_in_place(scores);
        Real *out = heads_out.row_ptr(i) + off;
        Real norm_sq = Real(0);
        for (std::size_t jj = 0; jj < win.size(); ++jj) {
          const Real wgt = scores[jj];
          const Real *vj = v.row_ptr(win[jj]) + off;
          for (int c = 0; c < dh; ++c) out[c] += wgt * vj[c];
          if (wrec) wrec->at(i, win[jj]) = wgt;
        }
        if (record) {
          for (int c = 0; c < dh; ++c) norm_sq += out[c] * out[c];
          record->head_output_norms.at(h, i) = std::sqrt(norm_sq);
        }
      }
    }
    // text query rows: all visual keys plus (causal) text keys
    for (int t = 0; t < config.layout.n_text; ++t) {
      const int row = nv + t;
      const int text_hi = config.causal_text ? row : n - 1;
      keys.clear();
      for (int j = 0; j < nv; ++j) keys.push_back(j);
      for (int j = nv; j <= text_hi; ++j) keys.push_back(j);
      scores.assign(keys.size(), Real(0));
      const Real *qi = q.row_ptr(row) + off;
      for (std::size_t jj = 0; jj < keys.size(); ++jj) {
        const Real *kj = k.row_ptr(keys[jj]) + off;
        Real s = Real(0);
        for (int c = 0; c < dh; ++c) s += qi[c] * kj[c];
        scores[jj] = s * inv_sqrt_dh;
      }
      softmax_in_place(scores);
      Real *out = heads_out.row_ptr(row) + off;
      for (std::size_t jj = 0; jj < keys.size(); ++jj) {
        const Real wgt = scores[jj];
        const Real *vj = v.row_ptr(keys[jj]) + off;
        for (int c = 0; c < dh; ++c) out[c] += wgt * vj[c];
        if (wrec) wrec->at(row, keys[jj]) = wgt;
      }
      if (record) {
        Real norm_sq = Real(0);
        for (int c = 0; c < dh; ++c) norm_sq += out[c] * out[c];
        record->head_output_norms.at(h, row) = std::sqrt(norm_sq);
      }
    }
  }
  const Matrix<Real> proj = matmul(heads_out, w.wo);
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += proj.data[i];

  // FFN: visual rows use only the layer's kept neurons, text rows all of them.
  const Matrix<Real> uf = rms_normalize_rows(x);
  const auto &subset = scratch.neuron_subset[layer];
  std::vector<Real> z;
  for (int r = 0; r < n; ++r) {
    const bool visual = r < nv;
    const int width = visual ? static_cast<int>(subset.size()) : config.d_ffn;
    z.assign(width, Real(0));
    const Real *ur = uf.row_ptr(r);
    for (int s = 0; s < width; ++s) {
      const int neuron = visual ? subset[s] : s;
      Real acc = Real(0);
      for (int c = 0; c < d; ++c) acc += ur[c] * w.w1.at(c, neuron);
      z[s] = silu(acc);
    }
    Real *xr = x.row_ptr(r);
    for (int c = 0; c < d; ++c) {
      Real acc = Real(0);
      for (int s = 0; s < width; ++s) {
        const int neuron = visual ? subset[s] : s;
        acc += z[s] * w.w2.at(neuron, c);
      }
      xr[c] += config.outer_ffn_activation ? silu(acc) : acc;
    }
  }
}

// Text-only layer: visual rows pass through untouched; text rows run full
// attention over text keys only plus the full FFN. Never reads visual rows.
template <typename Real>
void layer_text_only(const ModelConfig &config, const LayerWeights<Real> &w, Matrix<Real> &x,
                     AttentionRecord<Real> *record) {
  const int nv = config.layout.n_visual();
  const int nt = config.layout.n_text;
  const int d = config.d_model, dh = config.head_dim(), n_heads = config.n_heads;
  const Real inv_sqrt_dh = Real(1) / std::sqrt(static_cast<Real>(dh));

  Matrix<Real> xt(nt, d);
  for (int t = 0; t < nt; ++t)
    for (int c = 0; c < d; ++c) xt.at(t, c) = x.at(nv + t, c);

  const Matrix<Real> u = rms_normalize_rows(xt);
  const Matrix<Real> q = matmul(u, w.wq);
  const Matrix<Real> k = matmul(u, w.wk);
  const Matrix<Real> v = matmul(u, w.wv);

  Matrix<Real> heads_out(nt, d);
  std::vector<Real> scores;
  for (int h = 0; h < n_heads; ++h) {
    const int off = h * dh;
    for (int t = 0; t < nt; ++t) {
      const int hi = config.causal_text ? t : nt - 1;
      scores.assign(hi + 1, Real(0));
      const Real *qi = q.row_ptr(t) + off;
      for (int j = 0; j <= hi; ++j) {
        const Real *kj = k.row_ptr(j) + off;
        Real s = Real(0);
        for (int c = 0; c < dh; ++c) s += qi[c] * kj[c];
        scores[j] = s * inv_sqrt_dh;
      }
      softmax_in_place(scores);
      Real *out = heads_out.row_ptr(t) + off;
      for (int j = 0; j <= hi; ++j) {
        const Real wgt = scores[j];
        const Real *vj = v.row_ptr(j) + off;
        for (int c = 0; c < dh; ++c) out[c] += wgt * vj[c];
        if (record) record->head_weights[h].at(nv + t, nv + j) = wgt;
      }
      if (record) {
        Real norm_sq = Real(0);
        for (int c = 0; c < dh; ++c) norm_sq += out[c] * out[c];
        record->head_output_norms.at(h, nv + t) = std::sqrt(norm_sq);
      }
    }
  }
  const Matrix<Real> proj = matmul(heads_out, w.wo);
  for (int t = 0; t < nt; ++t)
    for (int c = 0; c < d; ++c) xt.at(t, c) += proj.at(t, c);

  const Matrix<Real> uf = rms_normalize_rows(xt);
  std::vector<Real> z(config.d_ffn);
  for (int t = 0; t < nt; ++t) {
    const Real *ur = uf.row_ptr(t);
    for (int s = 0; s < config.d_ffn; ++s) {
      Real acc = Real(0);
      for (int c = 0; c < d; ++c) acc += ur[c] * w.w1.at(c, s);
      z[s] = silu(acc);
    }
    Real *xr = xt.row_ptr(t);
    for (int c = 0; c < d; ++c) {
      Real acc = Real(0);
      for (int s = 0; s < config.d_ffn; ++s) acc += z[s] * w.w2.at(s, c);
      xr[c] += config.outer_ffn_activation ? silu(acc) : acc;
    }
  }
  for (int t = 0; t < nt; ++t)
    for (int c = 0; c < d; ++c) x.at(nv + t, c) = xt.at(t, c);
}

}  // namespace detail

/// Applies one layer in place. Exposed so tests can drive single layers.
template <typename Real>
void forward_layer(const ModelConfig &config, const ModelWeights<Real> &weights, int layer,
                   const PruneConfig &prune, Matrix<Real> &hidden,
                   AttentionRecord<Real> *record = nullptr) {
  const auto scratch = detail::build_scratch<Real>(config, prune);
  if (record) {
    record->layer = layer;
    record->head_weights.assign(
        config.n_heads, Matrix<Real>(config.layout.total_tokens(), config.layout.total_tokens()));
    record->head_output_norms = Matrix<Real>(config.n_heads, config.layout.total_tokens());
  }
  if (prune.layer_computes_visual(layer))
    detail::layer_visual_active(config, weights.layers[layer], scratch, layer, hidden, record);
  else
    detail::layer_text_only(config, weights.layers[layer], hidden, record);
}

template <typename Real>
ForwardOutput<Real> forward(const ModelConfig &config, const ModelWeights<Real> &weights,
                            const Matrix<Real> &input, const PruneConfig &prune,
                            bool capture = false) {
  config.validate();
  validate_prune(prune, config);
  if (static_cast<int>(weights.layers.size()) != config.n_layers)
    throw std::invalid_argument("forward: weights layer count mismatch");
  const int n = config.layout.total_tokens();
  if (input.rows != n || input.cols != config.d_model)
    throw std::invalid_argument("forward: input must be (n_visual + n_text) x d_model");

  const auto scratch = detail::build_scratch<Real>(config, prune);
  ForwardOutput<Real> out;
  out.hidden = input;
  if (capture) out.records.resize(config.n_layers);
  for (int l = 0; l < config.n_layers; ++l) {
    AttentionRecord<Real> *rec = nullptr;
    if (capture) {
      rec = &out.records[l];
      rec->layer = l;
      rec->head_weights.assign(config.n_heads, Matrix<Real>(n, n));
      rec->head_output_norms = Matrix<Real>(config.n_heads, n);
    }
    if (prune.layer_computes_visual(l))
      detail::layer_visual_active(config, weights.layers[l], scratch, l, out.hidden, rec);
    else
      detail::layer_text_only(config, weights.layers[l], out.hidden, rec);
  }
  return out;
}

}  // namespace vcprune

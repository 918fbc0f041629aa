#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vcprune/analysis.hpp"
#include "vcprune/flops.hpp"
#include "vcprune/model.hpp"

namespace vcprune {

/// Shortest round-trippable decimal form; keeps repeated runs byte-identical.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Write via a temporary in the same directory plus rename, so interrupted
/// runs never leave partial artifacts.
inline void atomic_write_file(const std::filesystem::path &path, const std::string &content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string distance_profile_csv(const DistanceProfile &profile) {
  std::string s = "layer,query_token,bin_center,mean_weight\n";
  for (const auto &row : profile.rows)
    s += std::to_string(row.layer) + "," + std::to_string(row.query_token) + "," +
         format_number(row.bin_center) + "," + format_number(row.mean_weight) + "\n";
  return s;
}

inline std::string cross_modal_csv(const CrossModalProfile &profile) {
  std::string s = "layer,text_token,mean_weight\n";
  for (const auto &row : profile.rows)
    s += std::to_string(row.layer) + "," + std::to_string(row.text_token) + "," +
         format_number(row.mean_weight) + "\n";
  return s;
}

inline std::string head_activity_csv(const HeadActivity &activity, const std::string &mode) {
  std::string s = "layer,head,rho,mode\n";
  for (std::size_t l = 0; l < activity.rho.size(); ++l)
    for (std::size_t h = 0; h < activity.rho[l].size(); ++h)
      s += std::to_string(l) + "," + std::to_string(h) + "," + format_number(activity.rho[l][h]) +
           "," + mode + "\n";
  return s;
}

inline std::string flops_csv(const FlopsReport &report) {
  std::string s = "layer,term,count\n";
  const auto emit = [&s](const std::string &layer, const FlopsLayerCost &c) {
    s += layer + ",qkv_proj," + format_number(c.qkv_proj) + "\n";
    s += layer + ",attn_scores," + format_number(c.attn_scores) + "\n";
    s += layer + ",attn_values," + format_number(c.attn_values) + "\n";
    s += layer + ",out_proj," + format_number(c.out_proj) + "\n";
    s += layer + ",ffn," + format_number(c.ffn) + "\n";
  };
  for (std::size_t l = 0; l < report.layers.size(); ++l) emit(std::to_string(l), report.layers[l]);
  emit("total", report.totals);
  s += "total,grand_total," + format_number(report.grand_total) + "\n";
  return s;
}

/// Human-readable table with the convention header the report was priced
/// under.
inline std::string flops_text_table(const FlopsReport &report) {
  std::string s;
  s += "# flops report\n";
  s += "# convention: " + report.convention.describe() + "\n";
  s += "# tokens: " + std::to_string(report.n_visual) + " visual + " +
       std::to_string(report.n_text) + " text\n";
  s += "# architecture: layers " + std::to_string(report.model.n_layers) + ", d_model " +
       std::to_string(report.model.d_model) + ", heads " + std::to_string(report.model.n_heads) +
       ", d_ffn " + std::to_string(report.model.d_ffn) + "\n";
  if (report.prune) {
    const auto &p = *report.prune;
    s += "# prune: metric " + to_string(p.metric) + ", radius " + format_number(p.radius) +
         ", heads/layer " + std::to_string(p.kept_heads.empty() ? 0 : p.kept_heads[0].size()) +
         ", ffn keep " + format_number(p.ffn_keep_ratio) + ", last visual layer " +
         std::to_string(p.last_visual_layer) + "\n";
  } else {
    s += "# prune: none (dense)\n";
  }
  char line[160];
  std::snprintf(line, sizeof(line), "%6s %16s %16s %16s %16s %16s\n", "layer", "qkv_proj",
                "attn_scores", "attn_values", "out_proj", "ffn");
  s += line;
  const auto emit = [&](const std::string &name, const FlopsLayerCost &c) {
    std::snprintf(line, sizeof(line), "%6s %16.6e %16.6e %16.6e %16.6e %16.6e\n", name.c_str(),
                  c.qkv_proj, c.attn_scores, c.attn_values, c.out_proj, c.ffn);
    s += line;
  };
  for (std::size_t l = 0; l < report.layers.size(); ++l) emit(std::to_string(l), report.layers[l]);
  emit("total", report.totals);
  std::snprintf(line, sizeof(line), "grand total: %.6e\n", report.grand_total);
  s += line;
  return s;
}

inline std::string sweep_csv(const std::vector<SweepRow> &rows) {
  std::string s = "n_visual,dense,pruned\n";
  for (const auto &row : rows)
    s += std::to_string(row.n_visual) + "," + format_number(row.dense) + "," +
         format_number(row.pruned) + "\n";
  return s;
}

template <typename Real>
std::string hidden_summary_csv(const Matrix<Real> &hidden, const TokenLayout &layout) {
  std::string s = "token,kind,l2_norm,mean,min,max\n";
  for (int r = 0; r < hidden.rows; ++r) {
    double norm = 0.0, mean = 0.0;
    double lo = hidden.at(r, 0), hi = hidden.at(r, 0);
    for (int c = 0; c < hidden.cols; ++c) {
      const double v = hidden.at(r, c);
      norm += v * v;
      mean += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    norm = std::sqrt(norm);
    mean /= hidden.cols;
    s += std::to_string(r) + "," + (r < layout.n_visual() ? "visual" : "text") + "," +
         format_number(norm) + "," + format_number(mean) + "," + format_number(lo) + "," +
         format_number(hi) + "\n";
  }
  return s;
}

/// Nonzero attention entries only; full matrices are mostly structural zeros.
template <typename Real>
std::string attention_records_csv(const std::vector<AttentionRecord<Real>> &records) {
  std::string s = "layer,head,query,key,weight\n";
  for (const auto &rec : records) {
    for (std::size_t h = 0; h < rec.head_weights.size(); ++h) {
      const auto &w = rec.head_weights[h];
      for (int i = 0; i < w.rows; ++i)
        for (int j = 0; j < w.cols; ++j) {
          const double v = w.at(i, j);
          if (v == 0.0) continue;
          s += std::to_string(rec.layer) + "," + std::to_string(h) + "," + std::to_string(i) +
               "," + std::to_string(j) + "," + format_number(v) + "\n";
        }
    }
  }
  return s;
}

}  // namespace vcprune

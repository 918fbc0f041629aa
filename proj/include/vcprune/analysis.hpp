#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "vcprune/layout.hpp"
#include "vcprune/model.hpp"
#include "vcprune/prune_config.hpp"

namespace vcprune {

struct DistanceProfileRow {
  int layer = 0;
  int query_token = 0;
  double bin_center = 0.0;
  double mean_weight = 0.0;
};

/// Head-averaged intra-visual attention, bucketed by spatial distance into
/// equal-width bins over [0, grid diagonal]. Bins with no keys are absent.
struct DistanceProfile {
  int n_bins = 1;
  double diagonal = 0.0;
  std::vector<DistanceProfileRow> rows;
};

struct CrossModalRow {
  int layer = 0;
  int text_token = 0;  // 0-based within the text block
  double mean_weight = 0.0;
};

/// Per layer and text query: mean head-averaged attention directed at visual
/// keys.
struct CrossModalProfile {
  std::vector<CrossModalRow> rows;
};

enum class HeadActivityMode {
  kWeightMass,  // per-token received attention mass (column sums)
  kOutputNorm,  // per-token L2 norm of the head output vector
};

inline std::string to_string(HeadActivityMode m) {
  return m == HeadActivityMode::kWeightMass ? "weight_mass" : "output_norm";
}

namespace detail {

template <typename Real>
void check_records(const std::vector<AttentionRecord<Real>> &records, const TokenLayout &layout) {
  const int n = layout.total_tokens();
  for (const auto &rec : records) {
    for (const auto &hw : rec.head_weights)
      if (hw.rows != n || hw.cols != n)
        throw std::invalid_argument("analysis: record dimensions do not match layout");
  }
}

}  // namespace detail

template <typename Real>
DistanceProfile distance_profile(const std::vector<AttentionRecord<Real>> &records,
                                 const TokenLayout &layout, const std::vector<int> &query_tokens,
                                 int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("distance_profile: n_bins must be >= 1");
  for (int q : query_tokens) check_visual_index(layout, q);
  detail::check_records(records, layout);

  DistanceProfile profile;
  profile.n_bins = n_bins;
  profile.diagonal = layout.grid_diagonal();
  const int nv = layout.n_visual();
  const double width = profile.diagonal > 0.0 ? profile.diagonal / n_bins : 0.0;

  std::vector<double> sums(n_bins), counts(n_bins);
  for (const auto &rec : records) {
    const int n_heads = static_cast<int>(rec.head_weights.size());
    for (int q : query_tokens) {
      std::fill(sums.begin(), sums.end(), 0.0);
      std::fill(counts.begin(), counts.end(), 0.0);
      for (int j = 0; j < nv; ++j) {
        double w = 0.0;
        for (int h = 0; h < n_heads; ++h)
          w += static_cast<double>(rec.head_weights[h].at(q, j));
        w /= n_heads;
        const double dist = distance(layout, DistanceMetric::kEuclidean2d, q, j);
        int bin = width > 0.0 ? static_cast<int>(dist / width) : 0;
        bin = std::min(bin, n_bins - 1);
        sums[bin] += w;
        counts[bin] += 1.0;
      }
      for (int b = 0; b < n_bins; ++b) {
        if (counts[b] == 0.0) continue;  // absent bin
        profile.rows.push_back({rec.layer, q, (b + 0.5) * width, sums[b] / counts[b]});
      }
    }
  }
  return profile;
}

template <typename Real>
CrossModalProfile cross_modal_profile(const std::vector<AttentionRecord<Real>> &records,
                                      const TokenLayout &layout) {
  detail::check_records(records, layout);
  CrossModalProfile profile;
  const int nv = layout.n_visual();
  for (const auto &rec : records) {
    const int n_heads = static_cast<int>(rec.head_weights.size());
    for (int t = 0; t < layout.n_text; ++t) {
      double mean = 0.0;
      if (nv > 0) {
        double sum = 0.0;
        for (int j = 0; j < nv; ++j)
          for (int h = 0; h < n_heads; ++h)
            sum += static_cast<double>(rec.head_weights[h].at(nv + t, j));
        mean = sum / (static_cast<double>(n_heads) * nv);
      }
      profile.rows.push_back({rec.layer, t, mean});
    }
  }
  return profile;
}

/// Per-head activity rho = (mean per-visual-token statistic) /
/// (mean per-text-token statistic). kWeightMass uses attention mass received
/// by each token (column sums of the head's weight matrix); kOutputNorm uses
/// the L2 norm of the head's output vector per token.
template <typename Real>
HeadActivity head_activity(const std::vector<AttentionRecord<Real>> &records,
                           const TokenLayout &layout, HeadActivityMode mode) {
  detail::check_records(records, layout);
  if (layout.n_text < 1) throw std::invalid_argument("head_activity: n_text must be >= 1");
  const int nv = layout.n_visual();
  const int n = layout.total_tokens();

  HeadActivity activity;
  activity.rho.reserve(records.size());
  for (const auto &rec : records) {
    const int n_heads = static_cast<int>(rec.head_weights.size());
    std::vector<double> rho(n_heads, 0.0);
    for (int h = 0; h < n_heads; ++h) {
      std::vector<double> stat(n, 0.0);
      if (mode == HeadActivityMode::kWeightMass) {
        const auto &w = rec.head_weights[h];
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) stat[j] += static_cast<double>(w.at(i, j));
      } else {
        if (rec.head_output_norms.rows != static_cast<int>(rec.head_weights.size()) ||
            rec.head_output_norms.cols != n)
          throw std::invalid_argument("head_activity: records lack head output norms");
        for (int j = 0; j < n; ++j)
          stat[j] = static_cast<double>(rec.head_output_norms.at(h, j));
      }
      double visual_mean = 0.0;
      for (int j = 0; j < nv; ++j) visual_mean += stat[j];
      if (nv > 0) visual_mean /= nv;
      double text_mean = 0.0;
      for (int j = nv; j < n; ++j) text_mean += stat[j];
      text_mean /= layout.n_text;
      if (text_mean == 0.0)
        throw std::runtime_error("head_activity: zero text denominator at layer " +
                                 std::to_string(rec.layer) + ", head " + std::to_string(h));
      rho[h] = visual_mean / text_mean;
    }
    activity.rho.push_back(std::move(rho));
  }
  return activity;
}

}  // namespace vcprune

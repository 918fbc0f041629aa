#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vcprune {

/// Sequence structure: a grid_width x grid_height block of visual tokens at
/// positions [0, n_visual), followed by n_text text tokens. Visual token p
/// sits at grid coordinates (p % grid_width, p / grid_width).
struct TokenLayout {
  int grid_width = 0;
  int grid_height = 0;
  int n_text = 1;

  int n_visual() const { return grid_width * grid_height; }
  int total_tokens() const { return n_visual() + n_text; }

  int token_x(int p) const { return p % grid_width; }
  int token_y(int p) const { return p / grid_width; }

  /// Farthest Euclidean pair on the grid; 0 for an empty grid.
  double grid_diagonal() const {
    if (n_visual() == 0) return 0.0;
    return std::hypot(static_cast<double>(grid_width - 1),
                      static_cast<double>(grid_height - 1));
  }

  void validate() const {
    if (grid_width < 0 || grid_height < 0)
      throw std::invalid_argument("TokenLayout: negative grid dimension");
    if (n_text < 1) throw std::invalid_argument("TokenLayout: n_text must be >= 1");
  }
};

enum class DistanceMetric {
  kEuclidean2d,  // distance on grid coordinates
  kSequence1d,   // |i - j| on sequence indices
};

inline std::string to_string(DistanceMetric m) {
  return m == DistanceMetric::kEuclidean2d ? "euclidean_2d" : "sequence_1d";
}

inline DistanceMetric metric_from_string(const std::string &s) {
  if (s == "euclidean_2d") return DistanceMetric::kEuclidean2d;
  if (s == "sequence_1d") return DistanceMetric::kSequence1d;
  throw std::invalid_argument("unknown distance metric: " + s);
}

inline void check_visual_index(const TokenLayout &layout, int i) {
  if (i < 0 || i >= layout.n_visual())
    throw std::out_of_range("visual index " + std::to_string(i) + " out of range [0, " +
                            std::to_string(layout.n_visual()) + ")");
}

inline double distance(const TokenLayout &layout, DistanceMetric metric, int i, int j) {
  check_visual_index(layout, i);
  check_visual_index(layout, j);
  if (metric == DistanceMetric::kSequence1d) return std::abs(i - j);
  const double dx = layout.token_x(i) - layout.token_x(j);
  const double dy = layout.token_y(i) - layout.token_y(j);
  return std::hypot(dx, dy);
}

/// All visual indices j with distance(i, j) <= radius, ascending. Always
/// contains i itself. If causal is set the set is intersected with j <= i.
inline std::vector<int> neighbors_within(const TokenLayout &layout, DistanceMetric metric,
                                         int i, double radius, bool causal = false) {
  check_visual_index(layout, i);
  if (radius < 0.0) throw std::invalid_argument("neighbors_within: radius must be >= 0");
  std::vector<int> out;
  const int reach = static_cast<int>(std::floor(radius));
  if (metric == DistanceMetric::kSequence1d) {
    const int lo = std::max(0, i - reach);
    const int hi = std::min(layout.n_visual() - 1, causal ? i : i + reach);
    out.reserve(hi - lo + 1);
    for (int j = lo; j <= hi; ++j) out.push_back(j);
    return out;
  }
  const int xi = layout.token_x(i), yi = layout.token_y(i);
  const int y_lo = std::max(0, yi - reach), y_hi = std::min(layout.grid_height - 1, yi + reach);
  const int x_lo = std::max(0, xi - reach), x_hi = std::min(layout.grid_width - 1, xi + reach);
  for (int y = y_lo; y <= y_hi; ++y) {
    const double dy = y - yi;
    for (int x = x_lo; x <= x_hi; ++x) {
      const double dx = x - xi;
      // same predicate as distance(): keeps window membership and distance
      // checks consistent to the last ulp
      if (std::hypot(dx, dy) > radius) continue;
      const int j = y * layout.grid_width + x;
      if (causal && j > i) continue;
      out.push_back(j);
    }
  }
  return out;
}

/// Sum over all visual tokens of their neighbor-set size. This is the exact
/// key count behind the windowed attention cost terms.
inline std::uint64_t window_size_total(const TokenLayout &layout, DistanceMetric metric,
                                       double radius, bool causal = false) {
  std::uint64_t total = 0;
  for (int i = 0; i < layout.n_visual(); ++i)
    total += neighbors_within(layout, metric, i, radius, causal).size();
  return total;
}

}  // namespace vcprune

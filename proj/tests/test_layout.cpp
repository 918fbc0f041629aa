#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "vcprune/layout.hpp"

using namespace vcprune;

TEST_CASE("distance is zero on the diagonal and symmetric") {
  const TokenLayout layout{3, 3, 2};
  for (int i = 0; i < 9; ++i) {
    CHECK(distance(layout, DistanceMetric::kEuclidean2d, i, i) == 0.0);
    CHECK(distance(layout, DistanceMetric::kSequence1d, i, i) == 0.0);
  }
  CHECK(distance(layout, DistanceMetric::kEuclidean2d, 0, 8) ==
        Catch::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(distance(layout, DistanceMetric::kSequence1d, 0, 8) == 8.0);
}

TEST_CASE("distance rejects non-visual indices") {
  const TokenLayout layout{2, 2, 3};
  CHECK_THROWS_AS(distance(layout, DistanceMetric::kEuclidean2d, 0, 4), std::out_of_range);
  CHECK_THROWS_AS(distance(layout, DistanceMetric::kEuclidean2d, -1, 0), std::out_of_range);
}

TEST_CASE("neighbors at radius zero and at the diagonal") {
  const TokenLayout layout{3, 3, 1};
  for (int i = 0; i < 9; ++i) {
    const auto self_only = neighbors_within(layout, DistanceMetric::kEuclidean2d, i, 0.0);
    REQUIRE(self_only.size() == 1);
    CHECK(self_only[0] == i);
  }
  const auto everyone =
      neighbors_within(layout, DistanceMetric::kEuclidean2d, 4, layout.grid_diagonal());
  CHECK(everyone.size() == 9);
}

TEST_CASE("center token at radius one keeps the cross, not the diagonals") {
  const TokenLayout layout{3, 3, 1};
  const auto got = neighbors_within(layout, DistanceMetric::kEuclidean2d, 4, 1.0);
  CHECK(got == std::vector<int>{1, 3, 4, 5, 7});
}

TEST_CASE("sequence metric windows clip at the ends") {
  const TokenLayout layout{4, 2, 1};
  CHECK(neighbors_within(layout, DistanceMetric::kSequence1d, 0, 2.0) ==
        std::vector<int>{0, 1, 2});
  CHECK(neighbors_within(layout, DistanceMetric::kSequence1d, 7, 2.0) ==
        std::vector<int>{5, 6, 7});
}

TEST_CASE("neighbor sets are monotone in radius and symmetric") {
  const TokenLayout layout{4, 3, 1};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> radius_dist(0.0, layout.grid_diagonal() + 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto metric = (rng() & 1) ? DistanceMetric::kEuclidean2d : DistanceMetric::kSequence1d;
    double r1 = radius_dist(rng), r2 = radius_dist(rng);
    if (r1 > r2) std::swap(r1, r2);
    for (int i = 0; i < layout.n_visual(); ++i) {
      const auto small = neighbors_within(layout, metric, i, r1);
      const auto big = neighbors_within(layout, metric, i, r2);
      CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
      CHECK(std::binary_search(small.begin(), small.end(), i));
      for (int j : small) {
        const auto back = neighbors_within(layout, metric, j, r1);
        CHECK(std::binary_search(back.begin(), back.end(), i));
      }
    }
  }
}

TEST_CASE("negative radius is rejected") {
  const TokenLayout layout{2, 2, 1};
  CHECK_THROWS_AS(neighbors_within(layout, DistanceMetric::kEuclidean2d, 0, -0.5),
                  std::invalid_argument);
}

TEST_CASE("window totals add up and respect causal intersection") {
  const TokenLayout layout{3, 3, 1};
  CHECK(window_size_total(layout, DistanceMetric::kEuclidean2d, 0.0) == 9);
  CHECK(window_size_total(layout, DistanceMetric::kEuclidean2d, layout.grid_diagonal()) == 81);
  // causal windows pair (i, j<=i): exactly half the off-diagonal entries
  CHECK(window_size_total(layout, DistanceMetric::kEuclidean2d, layout.grid_diagonal(), true) ==
        45);
}

TEST_CASE("layout validation and empty grids") {
  TokenLayout bad{2, 2, 0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  const TokenLayout empty{0, 0, 3};
  CHECK(empty.n_visual() == 0);
  CHECK(empty.grid_diagonal() == 0.0);
  CHECK(empty.total_tokens() == 3);
}

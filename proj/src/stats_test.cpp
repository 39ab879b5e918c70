/*
 * Copyright 2026 The lvef-ecg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "lvef/stats.hpp"

#include <gtest/gtest.h>

#include "lvef/common.hpp"

namespace lvef::stats {
namespace {

TEST(ChiSquare, HandComputedTwoByTwo) {
  // Expected counts are all 15: 4 * 25 / 15.
  const auto r = chi_square({{10, 20}, {20, 10}});
  EXPECT_NEAR(r.statistic, 20.0 / 3.0, 1e-12);
  EXPECT_EQ(r.df, 1.0);
  EXPECT_NEAR(r.p_value, 0.009823, 1e-5);
}

TEST(ChiSquare, IndependentTableIsZero) {
  const auto r = chi_square({{10, 20}, {30, 60}});
  EXPECT_NEAR(r.statistic, 0.0, 1e-12);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
}

TEST(ChiSquare, ZeroExpectedCountIsDegenerate) {
  try {
    chi_square({{0, 0}, {5, 7}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateTable);
  }
}

TEST(ChiSquare, StatisticInvariantUnderTranspose) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const std::size_t r = 2 + rng.below(3), c = 2 + rng.below(3);
    std::vector<std::vector<double>> a(r, std::vector<double>(c)), b(c, std::vector<double>(r));
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) a[i][j] = b[j][i] = 1.0 + static_cast<double>(rng.below(30));
    }
    EXPECT_NEAR(chi_square(a).statistic, chi_square(b).statistic, 1e-9);
  }
}

TEST(KruskalWallis, HandComputedSeparatedGroups) {
  // Rank sums 6 and 15: 12/(6*7) * (36/3 + 225/3) - 3*7 = 27/7.
  const auto r = kruskal_wallis({{1, 2, 3}, {4, 5, 6}});
  EXPECT_NEAR(r.statistic, 27.0 / 7.0, 1e-12);
  EXPECT_EQ(r.df, 1.0);
}

TEST(KruskalWallis, IdenticalGroupsGiveZero) {
  EXPECT_NEAR(kruskal_wallis({{1, 2, 3}, {1, 2, 3}}).statistic, 0.0, 1e-12);
}

TEST(KruskalWallis, InvariantUnderMonotoneTransform) {
  Rng rng(5);
  std::vector<std::vector<double>> g(3), h(3);
  for (std::size_t k = 0; k < 3; ++k) {
    for (int i = 0; i < 20; ++i) {
      const double v = std::round(rng.normal(static_cast<double>(k) * 0.3, 1.0) * 4) / 4;
      g[k].push_back(v);
      h[k].push_back(std::exp(v) + 7.0);
    }
  }
  EXPECT_NEAR(kruskal_wallis(g).statistic, kruskal_wallis(h).statistic, 1e-9);
}

TEST(ChiSquareSf, KnownQuantiles) {
  EXPECT_NEAR(chi_square_sf(3.841458820694124, 1.0), 0.05, 1e-9);
  EXPECT_NEAR(chi_square_sf(5.991464547107979, 2.0), 0.05, 1e-9);
  EXPECT_EQ(chi_square_sf(0.0, 3.0), 1.0);
}

}  // namespace
}  // namespace lvef::stats

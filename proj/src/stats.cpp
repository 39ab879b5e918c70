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

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <numeric>

#include "lvef/common.hpp"

namespace lvef::stats {

double chi_square_sf(double statistic, double df) {
  if (!(df > 0.0)) return 1.0;
  if (!(statistic > 0.0)) return 1.0;
  boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

TestResult chi_square(const std::vector<std::vector<double>>& table) {
  const std::size_t r = table.size();
  if (r < 2) fail(ErrorCode::kDegenerateTable, "chi-square needs at least two rows");
  const std::size_t c = table.front().size();
  if (c < 2) fail(ErrorCode::kDegenerateTable, "chi-square needs at least two columns");
  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (table[i].size() != c) fail(ErrorCode::kDimensionMismatch, "ragged contingency table");
    for (std::size_t j = 0; j < c; ++j) {
      row_sum[i] += table[i][j];
      col_sum[j] += table[i][j];
      total += table[i][j];
    }
  }
  TestResult res;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      if (!(expected > 0.0)) {
        fail(ErrorCode::kDegenerateTable, "zero expected count in contingency table");
      }
      const double d = table[i][j] - expected;
      res.statistic += d * d / expected;
    }
  }
  res.df = static_cast<double>((r - 1) * (c - 1));
  res.p_value = chi_square_sf(res.statistic, res.df);
  return res;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  struct Obs {
    double value;
    std::size_t group;
  };
  std::vector<Obs> all;
  std::size_t nonempty = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!groups[g].empty()) ++nonempty;
    for (double v : groups[g]) all.push_back({v, g});
  }
  if (nonempty < 2) fail(ErrorCode::kInsufficientData, "Kruskal-Wallis needs two nonempty groups");
  std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.value < b.value; });

  const double n = static_cast<double>(all.size());
  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].value == all[i].value) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) rank_sum[all[k].group] += midrank;
    i = j;
  }
  double h = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) continue;
    h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
  const double correction = 1.0 - tie_term / (n * n * n - n);
  TestResult res;
  res.df = static_cast<double>(nonempty - 1);
  res.statistic = correction > 0.0 ? std::max(0.0, h / correction) : 0.0;
  res.p_value = chi_square_sf(res.statistic, res.df);
  return res;
}

}  // namespace lvef::stats

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
#pragma once

#include <span>
#include <vector>

namespace lvef::stats {

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Pearson chi-square test of independence on an r x c contingency table
// (no continuity correction). Throws DegenerateTable when any expected count
// is zero.
TestResult chi_square(const std::vector<std::vector<double>>& table);

// Kruskal-Wallis H with midranks and tie correction; p-value from the
// chi-square(g - 1) approximation. Empty groups are ignored; requires at
// least two nonempty groups.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, double df);

}  // namespace lvef::stats

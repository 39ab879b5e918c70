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
#include "lvef/common.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <set>

#include "lvef/fft.hpp"

namespace lvef {
namespace {

TEST(Timestamp, RoundTripAndDayArithmetic) {
  const auto t = parse_timestamp("2020-02-28T12:30:00Z");
  EXPECT_EQ(format_timestamp(t), "2020-02-28T12:30:00Z");
  const auto u = parse_timestamp("2020-03-01T12:30:00Z");
  EXPECT_DOUBLE_EQ(days_between(t, u), 2.0);  // leap year
  EXPECT_DOUBLE_EQ(days_between(u, t), -2.0);
  for (const char* bad : {"2020-02-30T00:00:00Z", "2020-01-01", "2020-01-01T25:00:00Z", ""}) {
    EXPECT_THROW(parse_timestamp(bad), Error) << bad;
  }
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng r(7);
  std::array<int, 6> hits{};
  for (int i = 0; i < 60000; ++i) {
    const auto v = r.below(6);
    ASSERT_LT(v, 6u);
    ++hits[v];
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(Rng, NormalMoments) {
  Rng r(8);
  std::vector<double> x(50000);
  for (auto& v : x) v = r.normal(2.0, 3.0);
  EXPECT_NEAR(mean(x), 2.0, 0.05);
  EXPECT_NEAR(std::sqrt(variance(x)), 3.0, 0.05);
}

TEST(DeriveSeed, StreamsDoNotCollide) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s) {
    for (std::uint64_t k = 0; k < 50; ++k) seen.insert(derive_seed(s, k));
  }
  EXPECT_EQ(seen.size(), 2500u);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (unsigned threads : {1u, 4u}) {
    set_max_threads(threads);
    std::vector<std::atomic<int>> visits(1003);
    parallel_for(visits.size(), [&](std::size_t i) { visits[i].fetch_add(1); });
    for (const auto& v : visits) EXPECT_EQ(v.load(), 1);
  }
  set_max_threads(0);
}

TEST(Numeric, QuantileMedianAndVariance) {
  const std::vector<double> x = {4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(x, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile(x, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(x, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(median(x), 2.5);
  EXPECT_DOUBLE_EQ(variance(x), 1.25);
}

TEST(Numeric, FitLine) {
  const std::vector<double> x = {0, 1, 2, 3};
  const std::vector<double> y = {1, 3, 5, 7};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  const auto flat = fit_line(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 6});
  EXPECT_EQ(flat.slope, 0.0);
  EXPECT_DOUBLE_EQ(flat.intercept, 3.0);
  EXPECT_THROW(fit_line(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST(Hash, KnownFnvVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Fft, PowerSpectrumOfPureTone) {
  const std::size_t n = 64;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(2 * M_PI * 5 * static_cast<double>(i) / n);
  const auto spec = fft::rfft(x);
  ASSERT_EQ(spec.size(), n / 2 + 1);
  EXPECT_NEAR(spec[5].real(), n / 2.0, 1e-9);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (k != 5) EXPECT_NEAR(std::abs(spec[k]), 0.0, 1e-9) << k;
  }
}

}  // namespace
}  // namespace lvef

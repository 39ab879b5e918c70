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
#include "lvef/ts_features.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "lvef/fft.hpp"
#include "lvef/synth.hpp"

namespace lvef {
namespace {

double descriptor(const std::vector<double>& x, std::string_view name) {
  const auto& cat = TsDescriptorCatalog::default_catalog().descriptors();
  const auto v = compute_ts_descriptors(x, 500.0);
  for (std::size_t i = 0; i < cat.size(); ++i) {
    if (cat[i].name == name) return v[i];
  }
  ADD_FAILURE() << "no descriptor " << name;
  return kMissing;
}

std::vector<double> white_noise(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

TEST(SpectralEntropy, UniformPowerIsOne) {
  EXPECT_DOUBLE_EQ(spectral_entropy_of_power(std::vector<double>(257, 2.5)), 1.0);
}

TEST(SpectralEntropy, PureToneIsLow) {
  std::vector<double> x(5000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * 10.0 * static_cast<double>(i) / 500.0);
  EXPECT_LE(spectral_entropy(x, 500.0), 0.3);
}

TEST(SpectralEntropy, WhiteNoiseIsHigh) {
  double total = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const double h = spectral_entropy(white_noise(s, 5000), 500.0);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
    total += h;
  }
  EXPECT_GE(total / 20.0, 0.9);
}

TEST(SpectralEntropy, ZeroSignalIsAnError) {
  try {
    spectral_entropy(std::vector<double>(128, 0.0), 500.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroPower);
  }
}

TEST(Descriptors, Arithmetic) {
  EXPECT_DOUBLE_EQ(descriptor({1, 2, 3}, "abs_energy"), 14.0);
  EXPECT_DOUBLE_EQ(descriptor({1, 2, 3}, "sum_values"), 6.0);
  EXPECT_DOUBLE_EQ(descriptor({1, -1, 1, -1}, "number_zero_crossings"), 3.0);
  EXPECT_DOUBLE_EQ(descriptor({0, 1, 1, 1, 0, 1}, "longest_strike_above_mean"), 3.0);
}

TEST(Descriptors, ConstantSignalConventions) {
  const std::vector<double> x(100, 4.0);
  EXPECT_TRUE(is_missing(descriptor(x, "autocorrelation_lag_1")));
  EXPECT_TRUE(is_missing(descriptor(x, "autocorrelation_lag_10")));
  EXPECT_EQ(descriptor(x, "variance"), 0.0);
  EXPECT_EQ(descriptor(x, "linear_trend_slope"), 0.0);
}

TEST(Descriptors, RampTrendIsExact) {
  std::vector<double> x(500);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  EXPECT_NEAR(descriptor(x, "linear_trend_slope"), 1.0, 1e-12);
  EXPECT_NEAR(descriptor(x, "linear_trend_intercept"), 0.0, 1e-9);
  EXPECT_NEAR(descriptor(x, "linear_trend_r2"), 1.0, 1e-12);
}

TEST(Descriptors, StandardizedInputHasUnitMoments) {
  auto x = white_noise(3, 2000);
  const double m = mean(x), sd = std::sqrt(variance(x));
  for (auto& v : x) v = (v - m) / sd;
  EXPECT_LT(std::abs(descriptor(x, "mean")), 1e-9);
  EXPECT_LT(std::abs(descriptor(x, "variance") - 1.0), 1e-9);
}

TEST(Autocorrelation, LagZeroIsOne) {
  const auto x = white_noise(4, 300);
  EXPECT_NEAR(autocorrelation(x, 0), 1.0, 1e-12);
  EXPECT_LE(std::abs(autocorrelation(x, 3)), 1.0);
}

TEST(BandEnergies, ParsevalHolds) {
  for (std::size_t n : {4999u, 5000u}) {
    const auto x = white_noise(n, n);
    double total = 0.0;
    for (double v : x) total += v * v;
    const std::vector<double> edges = {1.0, 5.0, 15.0, 40.0, 100.0};
    double sum = 0.0;
    for (double b : band_energies(x, 500.0, edges)) {
      EXPECT_GE(b, 0.0);
      sum += b;
    }
    EXPECT_NEAR(sum / total, 1.0, 1e-6);
  }
}

TEST(Fft, MatchesNaiveDft) {
  const auto x = white_noise(5, 37);
  const auto X = fft::rfft(x);
  ASSERT_EQ(X.size(), 19u);
  for (std::size_t k = 0; k < X.size(); ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      s += x[t] * std::polar(1.0, -2 * std::numbers::pi * static_cast<double>(k * t) / 37.0);
    }
    EXPECT_NEAR(std::abs(X[k] - s), 0.0, 1e-10);
  }
}

TEST(Catalog, UniqueNamesAndFixedLength) {
  const auto& cat = TsDescriptorCatalog::default_catalog();
  std::set<std::string> names;
  for (const auto& d : cat.descriptors()) names.insert(d.name);
  EXPECT_EQ(names.size(), cat.size());
  EXPECT_EQ(cat.feature_names().size(), cat.size() * kTwelveLeads.size());
  EXPECT_EQ(cat.version(), kTsCatalogVersion);
}

TEST(ExtractTs, NamesFollowGrammarAndLengthIsFixed) {
  const auto rec = synth::generate_record(synth::default_profiles()[0], 1);
  const auto ecg = preprocess_record(derive_limb_leads(rec.ecg), PreprocessConfig{});
  const auto fv = extract_ts_features(ecg);
  const auto& cat = TsDescriptorCatalog::default_catalog();
  ASSERT_EQ(fv.size(), cat.size() * 12);
  EXPECT_EQ(fv.names, cat.feature_names());
  EXPECT_EQ(fv.names.front(), "I__ts__mean");
  for (std::size_t i = 0; i < fv.size(); ++i) {
    if (fv.names[i].find("fft_abs") != std::string::npos) EXPECT_GE(fv.values[i], 0.0);
  }
}

}  // namespace
}  // namespace lvef

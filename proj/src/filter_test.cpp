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
#include "lvef/filter.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace lvef::filter {
namespace {

TEST(Butterworth, MagnitudeTracksAnalogPrototype) {
  const auto hp = butterworth_highpass(5, 0.5, 500.0);
  EXPECT_LT(magnitude_response(hp, 0.0, 500.0), 1e-6);
  EXPECT_NEAR(magnitude_response(hp, 0.5, 500.0), 1.0 / std::sqrt(2.0), 1e-3);
  for (double f : {1.0, 2.0, 10.0, 40.0}) {
    EXPECT_NEAR(magnitude_response(hp, f, 500.0), analog_butterworth_highpass_gain(5, 0.5, f), 0.02) << f;
  }
  EXPECT_NEAR(magnitude_response(hp, 250.0, 500.0), 1.0, 1e-9);
}

TEST(Butterworth, SectionCountMatchesOrder) {
  EXPECT_EQ(butterworth_highpass(5, 0.5, 500.0).sections.size(), 3u);
  EXPECT_EQ(butterworth_highpass(4, 0.5, 500.0).sections.size(), 2u);
  EXPECT_EQ(butterworth_highpass(1, 0.5, 500.0).order, 1);
}

TEST(AnalogOracle, KnownValues) {
  EXPECT_NEAR(analog_butterworth_highpass_gain(5, 0.5, 0.5), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(analog_butterworth_highpass_gain(1, 1.0, 2.0), 2.0 / std::sqrt(5.0), 1e-15);
}

TEST(Notch, DeepAtCenterFlatAway) {
  const auto n = iir_notch(60.0, 1.0, 500.0);
  EXPECT_LT(magnitude_response(n, 60.0, 500.0), 1e-6);
  EXPECT_NEAR(magnitude_response(n, 60.5, 500.0), 1.0 / std::sqrt(2.0), 0.02);
  EXPECT_NEAR(magnitude_response(n, 10.0, 500.0), 1.0, 1e-3);
  EXPECT_NEAR(magnitude_response(n, 0.0, 500.0), 1.0, 1e-12);
}

TEST(Sosfilt, ConstantInputStartsAtSteadyState) {
  const auto n = iir_notch(60.0, 1.0, 500.0);
  const std::vector<double> x(100, 2.0);
  for (double v : sosfilt(n, x)) EXPECT_NEAR(v, 2.0, 1e-9);
}

TEST(Filtfilt, ZeroPhaseOnSine) {
  const auto hp = butterworth_highpass(5, 0.5, 500.0);
  std::vector<double> x(5000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * 5.0 * static_cast<double>(i) / 500.0);
  const auto y = filtfilt(hp, x);
  // Peaks stay put; the residual is the slowly decaying edge transient.
  for (std::size_t i = 1500; i < 3000; ++i) {
    EXPECT_NEAR(y[i], x[i], 0.03);
    if (i % 100 == 25) EXPECT_GT(y[i], y[i - 1]) << i;
    if (i % 100 == 25) EXPECT_GT(y[i], y[i + 1]) << i;
  }
}

TEST(Filtfilt, PaddingIsCappedByLength) {
  const auto hp = butterworth_highpass(5, 0.5, 500.0);
  EXPECT_EQ(filtfilt_padding(hp, 10000), 18u);
  EXPECT_EQ(filtfilt_padding(hp, 10), 9u);
  EXPECT_EQ(filtfilt(hp, std::vector<double>(10, 1.0)).size(), 10u);
}

}  // namespace
}  // namespace lvef::filter

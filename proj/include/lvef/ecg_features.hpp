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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvef/feature_matrix.hpp"
#include "lvef/signal.hpp"

namespace lvef {

inline constexpr std::string_view kClinicalCatalogVersion = "clinical-1.0.0";

struct RPeakResult {
  std::vector<std::size_t> indices;  // strictly increasing, >= 200 ms apart
  bool undetectable = false;         // fewer than two beats found
};

// Derivative-energy detector: squared central difference, 150 ms centered
// moving-window integration, 200 ms non-maximum suppression, and an adaptive
// threshold of 0.5 x median of the last eight accepted peak heights. Peaks
// are then moved to the signal maximum within +-75 ms.
RPeakResult detect_r_peaks(std::span<const double> x, double fs);

// Sample indices of one beat's landmarks; an absent value means the landmark
// was not detected (window clipped by the record edge, or no extremum).
struct BeatFiducials {
  std::optional<std::size_t> p_onset;
  std::optional<std::size_t> p_peak;
  std::optional<std::size_t> q;
  std::size_t r = 0;
  std::optional<std::size_t> s;
  std::optional<std::size_t> t_peak;
  std::optional<std::size_t> t_offset;

  bool complete() const { return p_onset && p_peak && q && s && t_peak && t_offset; }
};

// Windows relative to R:
//   Q       most negative strict local minimum in (R-80 ms, R)
//   S       most negative strict local minimum in (R, R+80 ms)
//   T peak  largest-|x| strict local extremum in (R+100 ms, R+400 ms)
//   P peak  largest strict local maximum in (R-300 ms, R-100 ms)
// P onset / T offset: from the steepest sample on the outer flank, walk
// outward until |slope| drops below 10% of that steepest slope.
std::vector<BeatFiducials> delineate_beats(std::span<const double> x,
                                           std::span<const std::size_t> r_peaks, double fs);

// Amplitude bands: 8 equal-width bands over [-2, +2] standardized units.
inline constexpr int kAmplitudeBands = 8;
inline constexpr double kAmplitudeBandLow = -2.0;
inline constexpr double kAmplitudeBandHigh = 2.0;

// Fraction of samples falling in each band; out-of-range samples count in
// no band.
std::vector<double> amplitude_band_occupancy(std::span<const double> x);

// Fixed clinical catalog in output order.
const std::vector<FeatureSpec>& clinical_catalog();
std::vector<std::string> clinical_feature_names();

// RR statistics, heart rate, and per-lead morphology / amplitude-band
// features on a preprocessed 12-lead record. Beats are detected on lead II
// (falling back to the first non-degenerate lead); morphology is delineated
// per lead after snapping R to that lead's maximum within +-40 ms.
FeatureVector extract_clinical_features(const TwelveLeadEcg& ecg);

}  // namespace lvef

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

#include <array>
#include <span>
#include <vector>

namespace lvef::filter {

// One second-order section, a0 normalized to 1:
//   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
// First-order sections carry b2 = a2 = 0.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// A cascade of sections plus the order of the overall transfer function
// (used to size edge padding).
struct SosFilter {
  std::vector<Biquad> sections;
  int order = 0;
};

// Digital Butterworth high-pass of the given order via the bilinear transform
// with frequency pre-warping. Unit gain at Nyquist.
SosFilter butterworth_highpass(int order, double cutoff_hz, double fs);

// Second-order IIR notch at `freq_hz` with -3 dB bandwidth `bandwidth_hz`.
SosFilter iir_notch(double freq_hz, double bandwidth_hz, double fs);

// |H(e^{jw})| of the cascade at frequency f.
double magnitude_response(const SosFilter& filter, double f_hz, double fs);

// Analytic magnitude of an analog Butterworth high-pass: 1/sqrt(1+(fc/f)^2n).
double analog_butterworth_highpass_gain(int order, double cutoff_hz, double f_hz);

// Causal filtering with section states initialized to the steady state of a
// constant input equal to x[0].
std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x);

// Zero-phase forward-backward filtering. The signal is extended at both ends
// by odd reflection of 3 * (order + 1) samples (capped at size - 1) and each
// pass starts from the steady state of its first padded sample.
std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x);

std::size_t filtfilt_padding(const SosFilter& filter, std::size_t signal_size);

}  // namespace lvef::filter

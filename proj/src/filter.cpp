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

#include <algorithm>
#include <complex>
#include <numbers>

#include "lvef/common.hpp"

namespace lvef::filter {
namespace {

using cd = std::complex<double>;

cd bilinear(cd s, double fs) { return (1.0 + s / (2.0 * fs)) / (1.0 - s / (2.0 * fs)); }

double section_gain_at(const Biquad& s, cd z) {
  const cd zi = 1.0 / z;
  const cd num = s.b0 + s.b1 * zi + s.b2 * zi * zi;
  const cd den = 1.0 + s.a1 * zi + s.a2 * zi * zi;
  return std::abs(num / den);
}

void normalize_at(Biquad& s, cd z) {
  const double g = section_gain_at(s, z);
  s.b0 /= g;
  s.b1 /= g;
  s.b2 /= g;
}

// State of a transposed direct-form II section.
struct SectionState {
  double z1 = 0.0, z2 = 0.0;
};

SectionState steady_state(const Biquad& s, double input, double* output) {
  const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  const double y = input * dc;
  SectionState st;
  st.z2 = s.b2 * input - s.a2 * y;
  st.z1 = s.b1 * input - s.a1 * y + st.z2;
  *output = y;
  return st;
}

void check_rates(double f, double fs, const char* what) {
  if (!(fs > 0.0) || !(f > 0.0) || !(f < fs / 2.0)) {
    fail(ErrorCode::kInvalidArgument, std::string(what) + " must satisfy 0 < f < fs/2");
  }
}

}  // namespace

SosFilter butterworth_highpass(int order, double cutoff_hz, double fs) {
  if (order < 1) fail(ErrorCode::kInvalidArgument, "filter order must be >= 1");
  check_rates(cutoff_hz, fs, "high-pass cutoff");
  const double warped = 2.0 * fs * std::tan(std::numbers::pi * cutoff_hz / fs);

  SosFilter filter;
  filter.order = order;
  // Prototype poles in the upper half plane pair with their conjugates; an
  // odd order leaves the real pole at -1.
  for (int k = 1; k <= order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order - 1.0) / (2.0 * order);
    const cd proto = std::polar(1.0, theta);
    const cd zp = bilinear(warped / proto, fs);
    Biquad s{1.0, -2.0, 1.0, -2.0 * zp.real(), std::norm(zp)};
    normalize_at(s, cd(-1.0, 0.0));
    filter.sections.push_back(s);
  }
  if (order % 2 == 1) {
    const cd zp = bilinear(cd(-warped, 0.0), fs);
    Biquad s{1.0, -1.0, 0.0, -zp.real(), 0.0};
    normalize_at(s, cd(-1.0, 0.0));
    filter.sections.push_back(s);
  }
  return filter;
}

SosFilter iir_notch(double freq_hz, double bandwidth_hz, double fs) {
  check_rates(freq_hz, fs, "notch frequency");
  if (!(bandwidth_hz > 0.0)) fail(ErrorCode::kInvalidArgument, "notch bandwidth must be > 0");
  const double w0 = 2.0 * std::numbers::pi * freq_hz / fs;
  const double bw = 2.0 * std::numbers::pi * bandwidth_hz / fs;
  const double gain = 1.0 / (1.0 + std::tan(bw / 2.0));
  const double c = std::cos(w0);
  SosFilter filter;
  filter.order = 2;
  filter.sections.push_back({gain, -2.0 * gain * c, gain, -2.0 * gain * c, 2.0 * gain - 1.0});
  return filter;
}

double magnitude_response(const SosFilter& filter, double f_hz, double fs) {
  const cd z = std::polar(1.0, 2.0 * std::numbers::pi * f_hz / fs);
  double g = 1.0;
  for (const auto& s : filter.sections) g *= section_gain_at(s, z);
  return g;
}

double analog_butterworth_highpass_gain(int order, double cutoff_hz, double f_hz) {
  if (f_hz <= 0.0) return 0.0;
  return 1.0 / std::sqrt(1.0 + std::pow(cutoff_hz / f_hz, 2.0 * order));
}

std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  if (y.empty()) return y;
  double carried = x.front();
  for (const auto& s : filter.sections) {
    double next_input = 0.0;
    SectionState st = steady_state(s, carried, &next_input);
    carried = next_input;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + st.z1;
      st.z1 = s.b1 * in - s.a1 * out + st.z2;
      st.z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::size_t filtfilt_padding(const SosFilter& filter, std::size_t signal_size) {
  if (signal_size < 2) return 0;
  const std::size_t wanted = 3 * static_cast<std::size_t>(filter.order + 1);
  return std::min(wanted, signal_size - 1);
}

std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = filtfilt_padding(filter, n);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[n - 1 - i]);

  auto forward = sosfilt(filter, ext);
  std::reverse(forward.begin(), forward.end());
  auto backward = sosfilt(filter, forward);
  std::reverse(backward.begin(), backward.end());
  return {backward.begin() + static_cast<std::ptrdiff_t>(pad),
          backward.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace lvef::filter

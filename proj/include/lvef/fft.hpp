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

#include <complex>
#include <span>
#include <vector>

namespace lvef::fft {

// Real-to-complex forward DFT (unnormalized): returns n/2 + 1 bins.
std::vector<std::complex<double>> rfft(std::span<const double> x);

// |X_k|^2 for the real DFT, k = 0..n/2.
std::vector<double> power_spectrum(std::span<const double> x);

}  // namespace lvef::fft

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
#include "lvef/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>

namespace lvef::fft {
namespace {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (ptr == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

// FFTW planning is not thread-safe, execution with new-array APIs is. Plans
// are created once per length under a lock and reused.
class PlanCache {
 public:
  fftw_plan get(int n) {
    std::lock_guard lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    FftwBuffer in(sizeof(double) * static_cast<std::size_t>(n));
    FftwBuffer out(sizeof(fftw_complex) * static_cast<std::size_t>(n / 2 + 1));
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, static_cast<double*>(in.ptr),
                                          static_cast<fftw_complex*>(out.ptr), FFTW_ESTIMATE);
    plans_.emplace(n, plan);
    return plan;
  }
  ~PlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mu_;
  std::map<int, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n == 0) return {};
  const std::size_t bins = static_cast<std::size_t>(n / 2 + 1);
  fftw_plan plan = cache().get(n);
  FftwBuffer in(sizeof(double) * x.size());
  FftwBuffer out(sizeof(fftw_complex) * bins);
  std::memcpy(in.ptr, x.data(), sizeof(double) * x.size());
  fftw_execute_dft_r2c(plan, static_cast<double*>(in.ptr), static_cast<fftw_complex*>(out.ptr));
  const auto* c = static_cast<const fftw_complex*>(out.ptr);
  std::vector<std::complex<double>> result(bins);
  for (std::size_t k = 0; k < bins; ++k) result[k] = {c[k][0], c[k][1]};
  return result;
}

std::vector<double> power_spectrum(std::span<const double> x) {
  auto spec = rfft(x);
  std::vector<double> p(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) p[k] = spec[k].real() * spec[k].real() + spec[k].imag() * spec[k].imag();
  return p;
}

}  // namespace lvef::fft

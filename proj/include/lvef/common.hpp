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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lvef {

enum class ErrorCode {
  kMissingLead,
  kLengthMismatch,
  kDegenerateSignal,
  kZeroPower,
  kEmptyCorpus,
  kDegenerateTable,
  kOutOfRange,
  kInsufficientData,
  kSingleClass,
  kEmptyMatrix,
  kNonFiniteFeature,
  kDimensionMismatch,
  kCorruptModel,
  kOneClassOnly,
  kDegenerateResampling,
  kMisalignedCutoff,
  kFewerThanTwoPoints,
  kInvalidProfile,
  kInvalidPrevalence,
  kInvalidArgument,
  kParseError,
  kIoError,
  kConfigInvalid,
  kUpstreamArtifactMissing,
};

std::string_view error_code_name(ErrorCode code);

// All library failures surface as this exception; `code()` carries the
// machine-readable category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

// Missing values are NaN in memory and an empty cell on disk.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

// ---------------------------------------------------------------------------
// Timestamps: UTC seconds, serialized as ISO-8601 "YYYY-MM-DDTHH:MM:SSZ".

using Timestamp = std::chrono::sys_seconds;

Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);
double days_between(Timestamp from, Timestamp to);  // (to - from) in days

// ---------------------------------------------------------------------------
// Portable random stream. std:: distributions are implementation-defined, so
// every draw used for reproducible artifacts goes through this type.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();                                // [0, 1)
  double uniform(double lo, double hi);            // [lo, hi)
  std::uint64_t below(std::uint64_t n);            // [0, n), unbiased
  double normal();                                 // standard normal
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stateless seed derivation (splitmix64 finalizer); used to give every
// bootstrap resample / record its own stream independent of scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Parallelism. `set_max_threads(1)` makes every parallel loop sequential.

void set_max_threads(unsigned n);
unsigned max_threads();

// Runs body(i) for i in [0, n). Work is split into contiguous chunks; body
// must only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// Small numeric helpers shared by several modules.

double mean(std::span<const double> x);
// Population (1/N) variance.
double variance(std::span<const double> x);
// Linear-interpolated quantile (type 7) of an unsorted sample; q in [0, 1].
double quantile(std::vector<double> x, double q);
double median(std::vector<double> x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = kMissing;  // missing when the response has zero variance
  std::size_t n = 0;
};

// Ordinary least squares y = slope * x + intercept. Requires >= 2 points;
// a constant x yields slope 0 and intercept mean(y).
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// 64-bit FNV-1a, used for provenance hashes.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace lvef

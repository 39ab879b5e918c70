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
#include <string>
#include <vector>

#include "lvef/feature_matrix.hpp"
#include "lvef/signal.hpp"

namespace lvef {

inline constexpr std::string_view kTsCatalogVersion = "ts-1.0.0";

// Ordered descriptor bank applied to every lead. Immutable after
// construction; `default_catalog()` is the versioned 65-descriptor set.
class TsDescriptorCatalog {
 public:
  static const TsDescriptorCatalog& default_catalog();

  const std::vector<FeatureSpec>& descriptors() const { return descriptors_; }
  std::size_t size() const { return descriptors_.size(); }
  std::string_view version() const { return kTsCatalogVersion; }

  // `<lead>__ts__<descriptor>` for every lead in kTwelveLeads.
  std::vector<std::string> feature_names() const;
  std::vector<FeatureSpec> feature_specs() const;

 private:
  TsDescriptorCatalog();
  std::vector<FeatureSpec> descriptors_;
};

// Normalized Shannon entropy of a power distribution: -sum p ln p / ln(bins).
// Throws ZeroPower when the total is zero.
double spectral_entropy_of_power(std::span<const double> power);

// Spectral entropy of a one-sided Hann-windowed periodogram (mean removed,
// single segment), normalized to [0, 1]. Requires >= 64 samples.
double spectral_entropy(std::span<const double> x, double fs);

// Autocorrelation at `lag` (tsfresh convention, normalized by (n-lag) var).
// Missing for constant input or lag >= n.
double autocorrelation(std::span<const double> x, std::size_t lag);

// Partition of signal energy sum(x^2) into frequency bands via Parseval.
// `edges_hz` are interior edges; returns edges.size() + 1 energies.
std::vector<double> band_energies(std::span<const double> x, double fs,
                                  std::span<const double> edges_hz);

// All descriptors of one lead in catalog order.
std::vector<double> compute_ts_descriptors(std::span<const double> x, double fs);

// Per lead x per descriptor; absent leads are missing-marked.
FeatureVector extract_ts_features(const TwelveLeadEcg& ecg,
                                  const TsDescriptorCatalog& catalog = TsDescriptorCatalog::default_catalog());

}  // namespace lvef

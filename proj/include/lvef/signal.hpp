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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvef/common.hpp"
#include "lvef/filter.hpp"

namespace lvef {

// Measured leads, in on-disk column order.
inline constexpr std::array<std::string_view, 8> kMeasuredLeads = {"I",  "II", "V1", "V2",
                                                                   "V3", "V4", "V5", "V6"};
// Canonical 12-lead order.
inline constexpr std::array<std::string_view, 12> kTwelveLeads = {
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"};

inline constexpr double kDefaultSamplingRate = 500.0;
inline constexpr double kDefaultDurationSeconds = 10.0;

enum class LeadSource { kMeasured, kDerived };

struct Lead {
  std::string name;
  std::vector<double> samples;  // millivolts (or standardized units after preprocessing)
  LeadSource source = LeadSource::kMeasured;
  bool degenerate = false;  // set by preprocessing when the lead is constant
};

struct EcgMetadata {
  std::string record_id;
  std::string patient_id;
  Timestamp acquired_at{};
  double sampling_rate = kDefaultSamplingRate;

  bool operator==(const EcgMetadata&) const = default;
};

// A set of named, equal-length leads. EcgRecord holds the 8 measured leads;
// TwelveLeadEcg additionally carries III, aVR, aVL and aVF.
class EcgRecord {
 public:
  EcgRecord() = default;
  EcgRecord(EcgMetadata meta, std::vector<Lead> leads);

  const EcgMetadata& meta() const { return meta_; }
  EcgMetadata& meta() { return meta_; }
  const std::vector<Lead>& leads() const { return leads_; }
  std::vector<Lead>& leads() { return leads_; }

  // Throws MissingLead.
  const Lead& lead(std::string_view name) const;
  const Lead* find(std::string_view name) const;
  std::size_t samples_per_lead() const;

  // Throws MissingLead / LengthMismatch when the measured-lead set is
  // incomplete or uneven.
  void validate_measured() const;

 private:
  EcgMetadata meta_;
  std::vector<Lead> leads_;
};

using TwelveLeadEcg = EcgRecord;

// III = II - I, aVR = -(I+II)/2, aVL = I - II/2, aVF = II - I/2. Measured
// leads are copied unchanged; output is in canonical 12-lead order (missing
// precordial leads are simply absent).
TwelveLeadEcg derive_limb_leads(const EcgRecord& ecg);

struct PreprocessConfig {
  double highpass_cutoff = 0.5;
  int filter_order = 5;
  double powerline_freq = 60.0;
  double notch_bandwidth = 1.0;
  bool standardize = true;
  bool zero_phase = true;

  // Throws InvalidArgument.
  void validate(double fs) const;
};

struct PreprocessedLead {
  std::vector<double> samples;
  bool degenerate = false;  // constant after filtering; samples are all zero
};

// High-pass then powerline notch. Linear in x.
std::vector<double> filter_lead(std::span<const double> x, double fs, const PreprocessConfig& cfg);

// z-score with the population standard deviation; a constant input yields
// a zero vector and `degenerate = true`.
PreprocessedLead standardize(std::span<const double> x);

// High-pass, notch, then (optionally) z-score.
PreprocessedLead preprocess_lead(std::span<const double> x, double fs, const PreprocessConfig& cfg);

TwelveLeadEcg preprocess_record(const TwelveLeadEcg& ecg, const PreprocessConfig& cfg);

// ---------------------------------------------------------------------------
// On-disk format: `<stem>.csv` with a header of lead names and one row per
// sample, plus `<stem>.json` carrying {record_id, patient_id, acquired_at,
// sampling_rate}.

void write_ecg(const EcgRecord& ecg, const std::filesystem::path& csv_path);
EcgRecord read_ecg(const std::filesystem::path& csv_path);
EcgMetadata read_ecg_metadata(const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace lvef

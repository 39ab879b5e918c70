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
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lvef/cohort.hpp"
#include "lvef/ehr_features.hpp"
#include "lvef/signal.hpp"

namespace lvef::synth {

struct VitalPrior {
  double mean = 0.0;
  double sd = 0.0;
  double p_observed = 0.9;
};

// Class-conditional generative assumptions. Synthetic only: the effects are
// loosely shaped after published associations and carry no clinical meaning.
struct SynthProfile {
  LvefClass label = LvefClass::kNormal;
  double hr_mean_bpm = 70.0;
  double hr_sd_bpm = 6.0;       // between records
  double rr_jitter_ms = 15.0;   // beat to beat
  std::array<double, 8> lead_scale{1, 1, 1, 1, 1, 1, 1, 1};  // kMeasuredLeads order
  double qrs_width_ms = 90.0;
  double qrs_sd_ms = 6.0;  // between records
  double t_scale = 1.0;
  double noise_sd = 0.02;        // mV
  double powerline_amp = 0.0;    // mV
  double powerline_hz = 60.0;
  double baseline_wander_amp = 0.05;  // mV, 0.1-0.4 Hz
  double amplitude_sd = 0.15;  // per-record log-normal lead gain spread
  double wave_sd = 0.25;       // per-record log-normal P/Q/R/S/T amplitude spread

  std::map<std::string, double> diagnosis_priors;   // raw code -> P(in lookback)
  std::map<std::string, double> medication_priors;  // raw name -> P(in lookback)
  std::map<std::string, VitalPrior> vitals;         // by kVitalNames
  double age_mean = 62.0;
  double age_sd = 13.0;
  double p_male = 0.5;
  double p_current_smoker = 0.15;

  // Throws InvalidProfile.
  void validate() const;
};

// Profiles for severe, moderate, mild, normal (class order).
std::array<SynthProfile, kNumClasses> default_profiles();

// Development-cohort prevalences in class order. The published percentages
// (2.26, 3.47, 5.93, 88.35) sum to 100.01, so they are rescaled to sum to 1.
inline constexpr std::array<double, kNumClasses> kReferencePrevalences = {
    0.0226 / 1.0001, 0.0347 / 1.0001, 0.0593 / 1.0001, 0.8835 / 1.0001};

struct GroundTruthBeat {
  std::size_t p_peak = 0;
  std::size_t q = 0;
  std::size_t r = 0;
  std::size_t s = 0;
  std::size_t t_peak = 0;
};

struct SynthRecord {
  EcgRecord ecg;  // 8 measured leads, mV
  std::vector<GroundTruthBeat> beats;
  std::vector<double> rr_ms;  // ground-truth RR intervals
};

// Sum-of-Gaussians beats on 8 leads at 500 Hz for 10 s. R peaks fall on
// integer samples at least 250 ms from either edge.
SynthRecord generate_record(const SynthProfile& profile, std::uint64_t seed, EcgMetadata meta = {});

// Largest-remainder rounding of n * p; throws InvalidPrevalence.
std::array<std::size_t, kNumClasses> class_counts(std::size_t n,
                                                  const std::array<double, kNumClasses>& prevalences);

struct CohortOptions {
  std::size_t n = 1000;
  std::array<double, kNumClasses> prevalences = kReferencePrevalences;
  std::uint64_t seed = 0;
  std::string id_prefix;                // prepended to record/patient/echo ids
  std::string start_date = "2016-01-01T00:00:00Z";
  std::string end_date = "2022-12-31T00:00:00Z";
  double repeat_patient_fraction = 0.10;  // share of examples from patients seen twice
  double excluded_echo_fraction = 0.01;   // extra echos that fail quality or pairing
  double decoy_ecg_fraction = 0.10;       // extra ECGs outside the pairing window
  double pairing_window_days = 14.0;
};

// How to regenerate one ECG on demand (records are large; cohorts keep only
// the recipe).
struct RecordPlan {
  EcgMetadata meta;
  LvefClass label = LvefClass::kNormal;
  std::uint64_t seed = 0;
};

struct SynthCohort {
  std::vector<RecordPlan> records;
  std::vector<EhrSnapshot> snapshots;
  std::vector<EchoResult> echos;
  std::array<SynthProfile, kNumClasses> profiles;

  SynthRecord record(std::size_t i) const;
};

// Exactly `class_counts(n, prevalences)` valid echo examples, each with an
// ECG inside the pairing window, plus the configured excluded echos and
// decoy ECGs. Throws InvalidPrevalence, InvalidProfile.
SynthCohort generate_cohort(const CohortOptions& options,
                            const std::array<SynthProfile, kNumClasses>& profiles = default_profiles());

// ecg/<record_id>.csv (+ .json), ehr.ndjson, echo.csv.
void write_cohort(const SynthCohort& cohort, const std::filesystem::path& dir);

}  // namespace lvef::synth

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
#include <string>
#include <vector>

#include "lvef/common.hpp"
#include "lvef/signal.hpp"

namespace lvef {

// Class index order is fixed: model outputs, CSV label columns and report
// tables all use it.
enum class LvefClass : int { kSevere = 0, kModerate = 1, kMild = 2, kNormal = 3 };
inline constexpr int kNumClasses = 4;
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {"severe", "moderate",
                                                                          "mild", "normal"};

std::string_view to_string(LvefClass c);
LvefClass parse_lvef_class(std::string_view name);  // throws ParseError

// severe < 30 <= moderate < 40 <= mild < 50 <= normal. Throws OutOfRange
// outside [0, 100].
LvefClass map_lvef_class(double lvef_percent);

enum class Split { kUnassigned, kTrain, kVal, kTest, kExternal };
std::string_view to_string(Split s);
Split parse_split(std::string_view name);

struct EchoResult {
  std::string echo_id;
  std::string patient_id;
  Timestamp performed_at{};
  double lvef = 0.0;
  std::vector<std::string> quality_flags;
};

struct CohortExample {
  std::string ecg_record_id;
  std::string patient_id;
  std::string echo_id;
  Timestamp index_date{};  // echo time
  double lvef = 0.0;
  LvefClass label = LvefClass::kNormal;
  Split split = Split::kUnassigned;
  double pairing_gap_days = 0.0;  // ecg - echo
};

struct Exclusion {
  std::string echo_id;
  std::string patient_id;
  std::string reason;  // quality_flag | lvef_out_of_range | no_ecg_in_window
};

struct PairingResult {
  std::vector<CohortExample> examples;
  std::vector<Exclusion> exclusions;
};

// One example per eligible echo: the same-patient ECG with the smallest
// |gap| within the window, preferring the ECG that precedes the echo on a tie
// (then the lexicographically smallest record id). Echos flagged "poor
// quality" or "artifact" are excluded. Examples keep echo input order.
PairingResult pair_ecg_echo(const std::vector<EcgMetadata>& ecgs,
                            const std::vector<EchoResult>& echos, double window_days = 14.0);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

// Patient-level stratified split. Each patient's stratum is its most severe
// label; patients are shuffled per stratum and each is assigned to the
// split with the largest remaining example deficit. Throws InsufficientData
// if any class has fewer than 3 patients.
std::vector<Split> stratified_patient_split(const std::vector<CohortExample>& examples,
                                            SplitFractions fractions, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CSV formats.
//   cohort:     record_id,patient_id,echo_id,index_date,lvef,label,split,pairing_gap_days
//   exclusions: echo_id,patient_id,reason
//   echos:      echo_id,patient_id,performed_at,lvef,quality_flags ('|'-separated)

void write_cohort_csv(const std::vector<CohortExample>& examples, const std::filesystem::path& path);
std::vector<CohortExample> read_cohort_csv(const std::filesystem::path& path);
void write_exclusions_csv(const std::vector<Exclusion>& exclusions,
                          const std::filesystem::path& path);
void write_echo_csv(const std::vector<EchoResult>& echos, const std::filesystem::path& path);
std::vector<EchoResult> read_echo_csv(const std::filesystem::path& path);

}  // namespace lvef

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

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lvef/cohort.hpp"
#include "lvef/common.hpp"
#include "lvef/feature_matrix.hpp"

namespace lvef {

inline constexpr double kDefaultLookbackDays = 183.0;

struct VitalMeasurement {
  std::string name;  // one of kVitalNames
  double value = 0.0;
  Timestamp date{};
};

struct CodeEvent {
  std::string code;  // ICD-10 code or medication generic name
  Timestamp date{};
};

inline constexpr std::array<std::string_view, 5> kVitalNames = {
    "bmi", "systolic_bp", "diastolic_bp", "temperature_f", "pulse"};

struct EhrSnapshot {
  std::string patient_id;
  std::optional<double> age;
  std::string sex;
  std::string race;
  std::string smoking_status;
  std::vector<VitalMeasurement> vitals;
  std::vector<CodeEvent> diagnoses;
  std::vector<CodeEvent> medications;
};

// `[A-Z][0-9][0-9A-Z](\..*)?`
bool is_valid_icd10(std::string_view code);

// One JSON object per line; see data/ehr_snapshot.schema.json.
std::vector<EhrSnapshot> read_ehr_ndjson(const std::filesystem::path& path);
void write_ehr_ndjson(const std::vector<EhrSnapshot>& snapshots, const std::filesystem::path& path);
EhrSnapshot parse_ehr_snapshot(std::string_view json_line);
std::string serialize_ehr_snapshot(const EhrSnapshot& s);

enum class VocabularyKind { kDiagnosis, kMedication };

// Diagnosis: 3-character ICD-10 prefix (dot removed). Medication: first
// whitespace-delimited token, uppercased.
std::string grouping_key(VocabularyKind kind, std::string_view raw);

struct CodeVocabulary {
  VocabularyKind kind = VocabularyKind::kDiagnosis;
  std::size_t k = 50;
  std::vector<std::string> exclusions;  // sorted
  std::vector<std::string> keys;        // retained, in rank order

  std::string to_json() const;
  static CodeVocabulary from_json(std::string_view text);
};

// Top-k grouping keys by the number of examples mentioning them (a key counts
// once per example), after removing exclusions; ties broken lexicographically.
// Throws EmptyCorpus when no example carries any key.
CodeVocabulary build_vocabulary(VocabularyKind kind,
                                const std::vector<std::vector<std::string>>& per_example_codes,
                                std::size_t k = 50,
                                const std::set<std::string>& exclusions = {"I50"});

// Grouping keys of events in [index_date - lookback, index_date).
std::vector<std::string> keys_in_window(const EhrSnapshot& snapshot, VocabularyKind kind,
                                        Timestamp index_date,
                                        double lookback_days = kDefaultLookbackDays);

// Fixed category dictionaries for one-hot demographics; unknown or empty
// values map to "Unknown".
const std::vector<std::string>& sex_categories();
const std::vector<std::string>& race_categories();
const std::vector<std::string>& smoking_categories();

std::vector<std::string> ehr_feature_names(const CodeVocabulary& dx, const CodeVocabulary& med);

// Indicators per vocabulary key for events in the lookback window; the most
// recent in-window value of each vital (0 when absent) plus an `_observed`
// indicator; age in years; one-hot demographics.
FeatureVector build_ehr_vector(const EhrSnapshot& snapshot, const CodeVocabulary& dx,
                               const CodeVocabulary& med, Timestamp index_date,
                               double lookback_days = kDefaultLookbackDays);

// ---------------------------------------------------------------------------
// Cohort summary statistics by LVEF class.

struct ClassSummary {
  std::size_t n = 0;          // non-missing observations
  double count = kMissing;    // binary: number of ones
  double percent = kMissing;  // binary: 100 * ones / n
  double mean = kMissing;     // continuous
  double sd = kMissing;
  double median = kMissing;
  double q1 = kMissing;
  double q3 = kMissing;
};

struct SummaryRow {
  std::string feature;
  bool binary = false;
  std::array<ClassSummary, kNumClasses> by_class{};
  ClassSummary overall{};
  std::string test;  // "chi2" | "kruskal_wallis"
  double statistic = kMissing;
  double p_value = kMissing;
  bool degenerate = false;  // chi-square table had a zero expected count
};

// Binary features (all non-missing values in {0, 1}) use a chi-square test on
// the class x {0, 1} table; others use Kruskal-Wallis. Requires at least two
// nonempty classes.
std::vector<SummaryRow> cohort_summary_stats(const FeatureMatrix& features,
                                             const std::vector<LvefClass>& labels);

std::string summary_to_json(const std::vector<SummaryRow>& rows);

}  // namespace lvef

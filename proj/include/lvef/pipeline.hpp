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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lvef/cohort.hpp"
#include "lvef/ehr_features.hpp"
#include "lvef/eval.hpp"
#include "lvef/feature_matrix.hpp"
#include "lvef/gbt.hpp"
#include "lvef/signal.hpp"

namespace lvef::pipeline {

enum class Modality { kEhrOnly, kEcgOnly, kMultimodal };
inline constexpr std::array<Modality, 3> kModalities = {Modality::kEhrOnly, Modality::kEcgOnly,
                                                        Modality::kMultimodal};

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view name);  // throws InvalidArgument

// EHR columns carry the dx__, med__, vital__ or demo__ prefix; everything
// else is an ECG column.
bool is_ehr_column(std::string_view name);
FeatureMatrix select_modality(const FeatureMatrix& fused, Modality m);

// Limb-lead derivation, filtering, then the clinical and time-series
// catalogs.
FeatureVector extract_ecg_features(const EcgRecord& measured, const PreprocessConfig& cfg);
FeatureVector extract_ecg_features_preprocessed(const TwelveLeadEcg& preprocessed);

// Rows keyed by record id, in index order. `load(i)` must be thread-safe.
FeatureMatrix extract_ecg_matrix(std::size_t n, const std::function<EcgRecord(std::size_t)>& load,
                                 const PreprocessConfig& cfg);

struct EhrOptions {
  std::size_t dx_top_k = 50;
  std::size_t med_top_k = 50;
  std::vector<std::string> exclusions = {"I50"};
  double lookback_days = kDefaultLookbackDays;
};

struct Vocabularies {
  CodeVocabulary dx;
  CodeVocabulary med;
};

using SnapshotIndex = std::map<std::string, const EhrSnapshot*>;
SnapshotIndex index_snapshots(const std::vector<EhrSnapshot>& snapshots);

// Fitted on the given examples only (the training split).
Vocabularies fit_vocabularies(const std::vector<CohortExample>& examples, const SnapshotIndex& snapshots,
                              const EhrOptions& options);

// Rows keyed by echo id. Patients without a snapshot get an empty one.
FeatureMatrix build_ehr_matrix(const std::vector<CohortExample>& examples, const SnapshotIndex& snapshots,
                               const Vocabularies& vocab, const EhrOptions& options);

// One row per example keyed by echo id: the paired record's ECG features
// followed by the EHR features. Throws UpstreamArtifactMissing when a paired
// record has no ECG row.
FeatureMatrix fuse(const std::vector<CohortExample>& examples, const FeatureMatrix& ecg,
                   const FeatureMatrix& ehr);

struct SplitData {
  FeatureMatrix X;
  std::vector<int> y;
  std::vector<double> lvef;
};

// Rows of `fused` whose example is in `split`.
SplitData take_split(const FeatureMatrix& fused, const std::vector<CohortExample>& examples, Split split);

struct TrainedModel {
  Modality modality = Modality::kMultimodal;
  gbt::GbtModel model;
  std::array<double, kNumClasses> thresholds{};  // F1-optimal on validation
};

// Trains on the train split with early stopping on the validation split and
// picks per-class thresholds on the validation split.
TrainedModel train_modality(const FeatureMatrix& fused, const std::vector<CohortExample>& examples,
                            Modality m, const gbt::GbtParams& params);

eval::EvalReport evaluate_model(const TrainedModel& trained, const SplitData& data,
                                const eval::EvalOptions& options, std::string cohort_tag);

std::string thresholds_to_json(const TrainedModel& trained);
std::array<double, kNumClasses> thresholds_from_json(std::string_view text);

}  // namespace lvef::pipeline

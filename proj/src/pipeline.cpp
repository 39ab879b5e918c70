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
#include "lvef/pipeline.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "lvef/ecg_features.hpp"
#include "lvef/ts_features.hpp"

namespace lvef::pipeline {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::kEhrOnly: return "ehr_only";
    case Modality::kEcgOnly: return "ecg_only";
    case Modality::kMultimodal: return "multimodal";
  }
  return "multimodal";
}

Modality parse_modality(std::string_view name) {
  for (Modality m : kModalities) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCode::kInvalidArgument, "unknown modality '" + std::string(name) + "'");
}

bool is_ehr_column(std::string_view name) {
  for (std::string_view prefix : {"dx__", "med__", "vital__", "demo__"}) {
    if (name.starts_with(prefix)) return true;
  }
  return false;
}

FeatureMatrix select_modality(const FeatureMatrix& fused, Modality m) {
  if (m == Modality::kMultimodal) return fused;
  std::vector<std::string> keep;
  for (const auto& name : fused.column_names()) {
    if (is_ehr_column(name) == (m == Modality::kEhrOnly)) keep.push_back(name);
  }
  auto out = fused.select_columns(keep);
  out.metadata()["modality"] = std::string(to_string(m));
  return out;
}

FeatureVector extract_ecg_features_preprocessed(const TwelveLeadEcg& preprocessed) {
  auto features = extract_clinical_features(preprocessed);
  features.append(extract_ts_features(preprocessed));
  return features;
}

FeatureVector extract_ecg_features(const EcgRecord& measured, const PreprocessConfig& cfg) {
  return extract_ecg_features_preprocessed(preprocess_record(derive_limb_leads(measured), cfg));
}

FeatureMatrix extract_ecg_matrix(std::size_t n, const std::function<EcgRecord(std::size_t)>& load,
                                 const PreprocessConfig& cfg) {
  std::vector<std::string> ids(n);
  std::vector<FeatureVector> rows(n);
  parallel_for(n, [&](std::size_t i) {
    const auto rec = load(i);
    ids[i] = rec.meta().record_id;
    rows[i] = extract_ecg_features(rec, cfg);
  });
  std::vector<std::string> names = clinical_feature_names();
  const auto ts = TsDescriptorCatalog::default_catalog().feature_names();
  names.insert(names.end(), ts.begin(), ts.end());
  FeatureMatrix m(names);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].names != names) fail(ErrorCode::kDimensionMismatch, "feature layout differs for " + ids[i]);
    m.add_row(ids[i], rows[i].values);
  }
  m.metadata()["clinical_catalog"] = std::string(kClinicalCatalogVersion);
  m.metadata()["ts_catalog"] = std::string(kTsCatalogVersion);
  return m;
}

SnapshotIndex index_snapshots(const std::vector<EhrSnapshot>& snapshots) {
  SnapshotIndex idx;
  for (const auto& s : snapshots) {
    if (!idx.emplace(s.patient_id, &s).second) {
      fail(ErrorCode::kParseError, "duplicate EHR snapshot for patient " + s.patient_id);
    }
  }
  return idx;
}

namespace {

const EhrSnapshot& snapshot_for(const SnapshotIndex& snapshots, const std::string& patient_id) {
  static const EhrSnapshot kEmpty{};
  const auto it = snapshots.find(patient_id);
  return it == snapshots.end() ? kEmpty : *it->second;
}

}  // namespace

Vocabularies fit_vocabularies(const std::vector<CohortExample>& examples, const SnapshotIndex& snapshots,
                              const EhrOptions& options) {
  const std::set<std::string> exclusions(options.exclusions.begin(), options.exclusions.end());
  std::vector<std::vector<std::string>> dx, med;
  for (const auto& ex : examples) {
    const auto& s = snapshot_for(snapshots, ex.patient_id);
    dx.push_back(keys_in_window(s, VocabularyKind::kDiagnosis, ex.index_date, options.lookback_days));
    med.push_back(keys_in_window(s, VocabularyKind::kMedication, ex.index_date, options.lookback_days));
  }
  return {build_vocabulary(VocabularyKind::kDiagnosis, dx, options.dx_top_k, exclusions),
          build_vocabulary(VocabularyKind::kMedication, med, options.med_top_k, exclusions)};
}

FeatureMatrix build_ehr_matrix(const std::vector<CohortExample>& examples, const SnapshotIndex& snapshots,
                               const Vocabularies& vocab, const EhrOptions& options) {
  FeatureMatrix m(ehr_feature_names(vocab.dx, vocab.med));
  for (const auto& ex : examples) {
    const auto v = build_ehr_vector(snapshot_for(snapshots, ex.patient_id), vocab.dx, vocab.med,
                                    ex.index_date, options.lookback_days);
    m.add_row(ex.echo_id, v.values);
  }
  return m;
}

FeatureMatrix fuse(const std::vector<CohortExample>& examples, const FeatureMatrix& ecg,
                   const FeatureMatrix& ehr) {
  std::vector<std::string> names = ecg.column_names();
  names.insert(names.end(), ehr.column_names().begin(), ehr.column_names().end());
  FeatureMatrix out(names);
  std::map<std::string_view, std::size_t> ecg_rows, ehr_rows;
  for (std::size_t i = 0; i < ecg.rows(); ++i) ecg_rows.emplace(ecg.row_ids()[i], i);
  for (std::size_t i = 0; i < ehr.rows(); ++i) ehr_rows.emplace(ehr.row_ids()[i], i);
  std::vector<double> row;
  for (const auto& ex : examples) {
    const auto e = ecg_rows.find(ex.ecg_record_id);
    if (e == ecg_rows.end()) {
      fail(ErrorCode::kUpstreamArtifactMissing, "no ECG features for record " + ex.ecg_record_id);
    }
    const auto h = ehr_rows.find(ex.echo_id);
    if (h == ehr_rows.end()) fail(ErrorCode::kUpstreamArtifactMissing, "no EHR features for echo " + ex.echo_id);
    row.assign(ecg.row(e->second).begin(), ecg.row(e->second).end());
    row.insert(row.end(), ehr.row(h->second).begin(), ehr.row(h->second).end());
    out.add_row(ex.echo_id, row);
  }
  out.metadata() = ecg.metadata();
  for (const auto& [k, v] : ehr.metadata()) out.metadata()[k] = v;
  return out;
}

SplitData take_split(const FeatureMatrix& fused, const std::vector<CohortExample>& examples, Split split) {
  std::map<std::string_view, std::size_t> rows;
  for (std::size_t i = 0; i < fused.rows(); ++i) rows.emplace(fused.row_ids()[i], i);
  std::vector<std::size_t> idx;
  SplitData d;
  for (const auto& ex : examples) {
    if (ex.split != split) continue;
    const auto it = rows.find(ex.echo_id);
    if (it == rows.end()) fail(ErrorCode::kUpstreamArtifactMissing, "no feature row for echo " + ex.echo_id);
    idx.push_back(it->second);
    d.y.push_back(static_cast<int>(ex.label));
    d.lvef.push_back(ex.lvef);
  }
  d.X = fused.select_rows(idx);
  return d;
}

TrainedModel train_modality(const FeatureMatrix& fused, const std::vector<CohortExample>& examples,
                            Modality m, const gbt::GbtParams& params) {
  const auto X = select_modality(fused, m);
  const auto train = take_split(X, examples, Split::kTrain);
  const auto val = take_split(X, examples, Split::kVal);
  TrainedModel out;
  out.modality = m;
  out.model = val.X.rows() > 0 ? gbt::train(train.X, train.y, params, &val.X, val.y)
                               : gbt::train(train.X, train.y, params);
  if (val.X.rows() > 0) {
    out.thresholds = eval::select_thresholds(out.model.predict_proba(val.X), val.y);
  } else {
    out.thresholds.fill(kMissing);
  }
  return out;
}

eval::EvalReport evaluate_model(const TrainedModel& trained, const SplitData& data,
                                const eval::EvalOptions& options, std::string cohort_tag) {
  const auto X = select_modality(data.X, trained.modality);
  if (X.column_names() != trained.model.feature_names) {
    fail(ErrorCode::kDimensionMismatch, "evaluation columns differ from the model's features");
  }
  const auto proba = trained.model.predict_proba(X);
  return eval::evaluate(proba, data.y, data.lvef, trained.thresholds, options,
                        std::string(to_string(trained.modality)), std::move(cohort_tag));
}

std::string thresholds_to_json(const TrainedModel& trained) {
  nlohmann::ordered_json j;
  j["modality"] = std::string(to_string(trained.modality));
  j["selected_on"] = "validation";
  for (int k = 0; k < kNumClasses; ++k) {
    const double t = trained.thresholds[static_cast<std::size_t>(k)];
    j["thresholds"][std::string(kClassNames[static_cast<std::size_t>(k)])] =
        is_missing(t) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(t);
  }
  return j.dump(1) + "\n";
}

std::array<double, kNumClasses> thresholds_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::array<double, kNumClasses> t{};
    for (int k = 0; k < kNumClasses; ++k) {
      const auto& v = j.at("thresholds").at(std::string(kClassNames[static_cast<std::size_t>(k)]));
      t[static_cast<std::size_t>(k)] = v.is_null() ? kMissing : v.get<double>();
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, std::string("malformed thresholds file: ") + e.what());
  }
}

}  // namespace lvef::pipeline

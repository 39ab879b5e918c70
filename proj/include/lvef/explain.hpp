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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lvef/feature_matrix.hpp"
#include "lvef/gbt.hpp"

namespace lvef::explain {

struct Attribution {
  std::vector<double> phi;  // one per model feature
  double base = 0.0;
};

// Expected class-k margin under the path-dependent background encoded in the
// node covers.
double expected_margin(const gbt::GbtModel& model, int k);

// Path-dependent TreeSHAP over the class-k trees of the pre-softmax margin.
// Throws DimensionMismatch.
Attribution tree_shap(const gbt::GbtModel& model, std::span<const double> x, int k);

struct ShapMatrix {
  int class_index = 0;
  double base = 0.0;
  std::vector<std::string> feature_names;
  std::vector<std::string> row_ids;
  std::vector<double> values;  // row-major N x F
  bool labels_applied = false;
  std::map<std::string, std::string> provenance;  // copied into the CSV sidecar

  std::size_t rows() const { return row_ids.size(); }
  std::size_t cols() const { return feature_names.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
};

ShapMatrix shap_matrix(const gbt::GbtModel& model, const FeatureMatrix& X, int k);

// CSV: "record_id,<features...>"; sidecar `<path>.meta.json` holds the class
// and base value.
void write_shap_csv(const ShapMatrix& shap, const std::filesystem::path& path);
ShapMatrix read_shap_csv(const std::filesystem::path& path);

struct Importance {
  std::string feature;
  double mean_abs = 0.0;
};

// Descending mean |phi|; ties in name order. Throws EmptyMatrix.
std::vector<Importance> global_importance(const ShapMatrix& shap);
// Same with per-row multiplicities (bootstrap counts).
std::vector<Importance> global_importance(const ShapMatrix& shap, std::span<const double> row_weights);

// ---------------------------------------------------------------------------
// Stability of the top-k ranking under bootstrap resampling of rows.

struct StabilityOptions {
  int resamples = 20;
  int top_k = 10;
  std::uint64_t seed = 0;
  bool resample = true;  // false: every "resample" is the full set
};

struct StabilityReport {
  int class_index = 0;
  StabilityOptions options;
  std::vector<std::vector<std::string>> top_sets;  // per resample, in rank order
  std::vector<std::vector<double>> jaccard;        // B x B
  double mean_jaccard = kMissing;                  // over pairs i < j
  double min_jaccard = kMissing;
  std::vector<std::pair<std::string, double>> frequency;  // descending, ties by name
};

double jaccard(std::vector<std::string> a, std::vector<std::string> b);

std::vector<std::vector<std::size_t>> draw_resamples(std::size_t n, const StabilityOptions& options);

// Attributions are row-local, so each resample only reweights rows of `shap`.
StabilityReport stability_from_resamples(const ShapMatrix& shap,
                                         const std::vector<std::vector<std::size_t>>& resamples,
                                         const StabilityOptions& options);

StabilityReport stability_analysis(const gbt::GbtModel& model, const FeatureMatrix& test, int k,
                                   const StabilityOptions& options);

std::string to_json(const StabilityReport& report);

// ---------------------------------------------------------------------------

struct DependenceData {
  std::string feature;
  std::vector<std::pair<double, double>> points;  // (value, phi)
  std::size_t excluded_missing = 0;
  LinearFit fit;
};

// Throws FewerThanTwoPoints.
DependenceData dependence_data(std::span<const double> values, std::span<const double> phi,
                               std::string feature = {});

std::string to_json(const DependenceData& d);

// ---------------------------------------------------------------------------
// Display labels. Presentation only: never applied to matrices or models.

struct DisplayLabel {
  std::string text;
  bool mapped = false;
};

// Rows are either exact names or templates with one `{code}` placeholder
// (e.g. "dx__{code}" -> "Diagnosis {code} (ICD-10)").
class LabelMap {
 public:
  static const LabelMap& builtin();
  static LabelMap from_csv(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;

  DisplayLabel label(std::string_view raw) const;
  std::optional<std::string> raw_name(std::string_view label) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  // Throws InvalidArgument on duplicate raw names or labels.
  explicit LabelMap(std::vector<std::pair<std::string, std::string>> entries);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

DisplayLabel display_label(std::string_view raw);

}  // namespace lvef::explain

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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvef/common.hpp"

namespace lvef {

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  // Missing when the name is absent.
  double get(std::string_view name) const;
  void append(const FeatureVector& other);
};

// Named-column table; rows are keyed by an id (record or example id).
// Values are stored row-major; NaN marks a missing cell.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::string> column_names);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t cols() const { return names_.size(); }
  const std::vector<std::string>& column_names() const { return names_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }

  void add_row(std::string row_id, std::span<const double> values);
  std::span<const double> row(std::size_t i) const;
  double at(std::size_t row, std::size_t col) const { return values_[row * cols() + col]; }
  std::vector<double> column(std::size_t col) const;

  std::optional<std::size_t> column_index(std::string_view name) const;
  std::optional<std::size_t> row_index(std::string_view row_id) const;

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
  FeatureMatrix select_columns(std::span<const std::string> names) const;
  // Horizontal join on row id; rows of `this` missing from `other` get
  // missing cells.
  FeatureMatrix join(const FeatureMatrix& other) const;

  // Free-form provenance (catalog versions, config hash, modality tags).
  std::map<std::string, std::string>& metadata() { return metadata_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  // CSV: header "record_id,<names...>", one row per id, empty cell = missing.
  // Metadata goes to `<path>.meta.json`.
  void write_csv(const std::filesystem::path& path) const;
  static FeatureMatrix read_csv(const std::filesystem::path& path);

 private:
  std::vector<std::string> names_;
  std::vector<std::string> row_ids_;
  std::vector<double> values_;
  std::map<std::string, std::string> metadata_;
};

std::filesystem::path metadata_path(const std::filesystem::path& path);

// Catalog manifest entry shared by the clinical and time-series catalogs.
struct FeatureSpec {
  std::string name;
  std::string unit;
  std::string definition;
};

// {"catalog": ..., "version": ..., "features": [{name, unit, definition}, ...]}
std::string catalog_manifest_json(std::string_view catalog, std::string_view version,
                                  std::span<const FeatureSpec> specs);

}  // namespace lvef

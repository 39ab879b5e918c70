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
#include "lvef/feature_matrix.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "lvef/signal.hpp"

namespace lvef {

double FeatureVector::get(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  return kMissing;
}

void FeatureVector::append(const FeatureVector& other) {
  names.insert(names.end(), other.names.begin(), other.names.end());
  values.insert(values.end(), other.values.begin(), other.values.end());
}

FeatureMatrix::FeatureMatrix(std::vector<std::string> column_names)
    : names_(std::move(column_names)) {}

void FeatureMatrix::add_row(std::string row_id, std::span<const double> values) {
  if (values.size() != cols()) {
    fail(ErrorCode::kDimensionMismatch, "row " + row_id + " has " + std::to_string(values.size()) +
                                            " values, matrix has " + std::to_string(cols()) +
                                            " columns");
  }
  row_ids_.push_back(std::move(row_id));
  values_.insert(values_.end(), values.begin(), values.end());
}

std::span<const double> FeatureMatrix::row(std::size_t i) const {
  return {values_.data() + i * cols(), cols()};
}

std::vector<double> FeatureMatrix::column(std::size_t col) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = at(i, col);
  return out;
}

std::optional<std::size_t> FeatureMatrix::column_index(std::string_view name) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (names_[j] == name) return j;
  }
  return std::nullopt;
}

std::optional<std::size_t> FeatureMatrix::row_index(std::string_view row_id) const {
  for (std::size_t i = 0; i < row_ids_.size(); ++i) {
    if (row_ids_[i] == row_id) return i;
  }
  return std::nullopt;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out(names_);
  out.metadata_ = metadata_;
  for (auto i : indices) out.add_row(row_ids_.at(i), row(i));
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& n : names) {
    auto j = column_index(n);
    if (!j) fail(ErrorCode::kDimensionMismatch, "no column named " + n);
    idx.push_back(*j);
  }
  FeatureMatrix out(std::vector<std::string>(names.begin(), names.end()));
  out.metadata_ = metadata_;
  std::vector<double> buf(idx.size());
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t k = 0; k < idx.size(); ++k) buf[k] = at(i, idx[k]);
    out.add_row(row_ids_[i], buf);
  }
  return out;
}

FeatureMatrix FeatureMatrix::join(const FeatureMatrix& other) const {
  std::vector<std::string> names = names_;
  names.insert(names.end(), other.names_.begin(), other.names_.end());
  FeatureMatrix out(std::move(names));
  out.metadata_ = metadata_;
  for (const auto& [k, v] : other.metadata_) out.metadata_.emplace(k, v);
  std::unordered_map<std::string, std::size_t> other_rows;
  for (std::size_t i = 0; i < other.rows(); ++i) other_rows.emplace(other.row_ids_[i], i);
  std::vector<double> buf(out.cols());
  for (std::size_t i = 0; i < rows(); ++i) {
    auto left = row(i);
    std::copy(left.begin(), left.end(), buf.begin());
    auto it = other_rows.find(row_ids_[i]);
    for (std::size_t j = 0; j < other.cols(); ++j) {
      buf[cols() + j] = it == other_rows.end() ? kMissing : other.at(it->second, j);
    }
    out.add_row(row_ids_[i], buf);
  }
  return out;
}

std::filesystem::path metadata_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

void FeatureMatrix::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << "record_id";
  for (const auto& n : names_) out << ',' << n;
  out << '\n';
  std::string line;
  for (std::size_t i = 0; i < rows(); ++i) {
    line = row_ids_[i];
    for (std::size_t j = 0; j < cols(); ++j) {
      line += ',';
      line += format_double(at(i, j));
    }
    line += '\n';
    out << line;
  }
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metadata_) meta[k] = v;
  std::ofstream side(metadata_path(path), std::ios::binary);
  side << meta.dump(2) << '\n';
}

FeatureMatrix FeatureMatrix::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kParseError, "empty feature matrix " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
    if (!line.empty() && line.back() == ',') header.emplace_back();
  }
  if (header.empty() || header.front() != "record_id") {
    fail(ErrorCode::kParseError, "feature matrix must start with a record_id column");
  }
  FeatureMatrix m(std::vector<std::string>(header.begin() + 1, header.end()));
  std::vector<double> buf(m.cols());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view view(line);
    std::size_t start = 0;
    std::vector<std::string_view> cells;
    for (;;) {
      auto comma = view.find(',', start);
      if (comma == std::string_view::npos) {
        cells.push_back(view.substr(start));
        break;
      }
      cells.push_back(view.substr(start, comma - start));
      start = comma + 1;
    }
    if (cells.size() != header.size()) {
      fail(ErrorCode::kParseError, "ragged row in " + path.string());
    }
    for (std::size_t j = 0; j < m.cols(); ++j) buf[j] = parse_double(cells[j + 1]);
    m.add_row(std::string(cells[0]), buf);
  }
  std::ifstream side(metadata_path(path));
  if (side) {
    try {
      auto j = nlohmann::json::parse(side);
      for (auto it = j.begin(); it != j.end(); ++it) m.metadata_[it.key()] = it.value().get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParseError, "bad metadata for " + path.string() + ": " + e.what());
    }
  }
  return m;
}

std::string catalog_manifest_json(std::string_view catalog, std::string_view version,
                                  std::span<const FeatureSpec> specs) {
  nlohmann::ordered_json j;
  j["catalog"] = catalog;
  j["version"] = version;
  auto& arr = j["features"] = nlohmann::ordered_json::array();
  for (const auto& s : specs) {
    arr.push_back({{"name", s.name}, {"unit", s.unit}, {"definition", s.definition}});
  }
  return j.dump(2);
}

}  // namespace lvef

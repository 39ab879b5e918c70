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
#include "lvef/ehr_features.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "json.hpp"
#include "lvef/stats.hpp"

namespace lvef {

using nlohmann::json;

bool is_valid_icd10(std::string_view code) {
  if (code.size() < 3) return false;
  const auto upper = [](char c) { return c >= 'A' && c <= 'Z'; };
  const auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!upper(code[0]) || !digit(code[1]) || !(digit(code[2]) || upper(code[2]))) return false;
  return code.size() == 3 || code[3] == '.';
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

EhrSnapshot parse_ehr_snapshot(std::string_view line) {
  try {
    const auto j = json::parse(line);
    EhrSnapshot s;
    s.patient_id = j.at("patient_id").get<std::string>();
    if (j.contains("demographics")) {
      const auto& d = j.at("demographics");
      if (d.contains("age") && !d.at("age").is_null()) s.age = d.at("age").get<double>();
      s.sex = d.value("sex", "");
      s.race = d.value("race", "");
      s.smoking_status = d.value("smoking_status", "");
    }
    for (const auto& v : j.value("vitals", json::array())) {
      VitalMeasurement m;
      m.name = v.at("name").get<std::string>();
      if (std::find(kVitalNames.begin(), kVitalNames.end(), m.name) == kVitalNames.end()) {
        fail(ErrorCode::kParseError, "unknown vital '" + m.name + "'");
      }
      m.value = v.at("value").get<double>();
      m.date = parse_timestamp(v.at("date").get<std::string>());
      s.vitals.push_back(std::move(m));
    }
    for (const auto& v : j.value("diagnoses", json::array())) {
      CodeEvent e{v.at("code").get<std::string>(), parse_timestamp(v.at("date").get<std::string>())};
      if (!is_valid_icd10(e.code)) fail(ErrorCode::kParseError, "invalid ICD-10 code '" + e.code + "'");
      s.diagnoses.push_back(std::move(e));
    }
    for (const auto& v : j.value("medications", json::array())) {
      s.medications.push_back(
          {v.at("name").get<std::string>(), parse_timestamp(v.at("date").get<std::string>())});
    }
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("bad EHR snapshot: ") + e.what());
  }
}

std::string serialize_ehr_snapshot(const EhrSnapshot& s) {
  nlohmann::ordered_json j;
  j["patient_id"] = s.patient_id;
  j["demographics"] = {{"age", optional_number(s.age)},
                       {"sex", s.sex},
                       {"race", s.race},
                       {"smoking_status", s.smoking_status}};
  auto& vitals = j["vitals"] = nlohmann::ordered_json::array();
  for (const auto& v : s.vitals) {
    vitals.push_back({{"name", v.name}, {"value", v.value}, {"date", format_timestamp(v.date)}});
  }
  auto& dx = j["diagnoses"] = nlohmann::ordered_json::array();
  for (const auto& e : s.diagnoses) dx.push_back({{"code", e.code}, {"date", format_timestamp(e.date)}});
  auto& med = j["medications"] = nlohmann::ordered_json::array();
  for (const auto& e : s.medications) {
    med.push_back({{"name", e.code}, {"date", format_timestamp(e.date)}});
  }
  return j.dump();
}

std::vector<EhrSnapshot> read_ehr_ndjson(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<EhrSnapshot> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    out.push_back(parse_ehr_snapshot(line));
  }
  return out;
}

void write_ehr_ndjson(const std::vector<EhrSnapshot>& snapshots, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  for (const auto& s : snapshots) out << serialize_ehr_snapshot(s) << '\n';
}

// ---------------------------------------------------------------------------

std::string grouping_key(VocabularyKind kind, std::string_view raw) {
  std::string out;
  if (kind == VocabularyKind::kDiagnosis) {
    for (char c : raw) {
      if (c == '.') continue;
      out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (out.size() == 3) break;
    }
    return out;
  }
  std::size_t i = 0;
  while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
  for (; i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i])); ++i) {
    out += static_cast<char>(std::toupper(static_cast<unsigned char>(raw[i])));
  }
  return out;
}

namespace {

std::string_view kind_name(VocabularyKind k) {
  return k == VocabularyKind::kDiagnosis ? "diagnosis" : "medication";
}

}  // namespace

std::string CodeVocabulary::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind_name(kind);
  j["k"] = k;
  j["exclusions"] = exclusions;
  j["keys"] = keys;
  return j.dump(2);
}

CodeVocabulary CodeVocabulary::from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    CodeVocabulary v;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "diagnosis") {
      v.kind = VocabularyKind::kDiagnosis;
    } else if (kind == "medication") {
      v.kind = VocabularyKind::kMedication;
    } else {
      fail(ErrorCode::kParseError, "unknown vocabulary kind '" + kind + "'");
    }
    v.k = j.at("k").get<std::size_t>();
    v.exclusions = j.at("exclusions").get<std::vector<std::string>>();
    v.keys = j.at("keys").get<std::vector<std::string>>();
    return v;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("bad vocabulary: ") + e.what());
  }
}

CodeVocabulary build_vocabulary(VocabularyKind kind,
                                const std::vector<std::vector<std::string>>& per_example_codes,
                                std::size_t k, const std::set<std::string>& exclusions) {
  std::set<std::string> excluded;
  for (const auto& e : exclusions) excluded.insert(grouping_key(kind, e));
  std::map<std::string, std::size_t> counts;
  bool any = false;
  for (const auto& codes : per_example_codes) {
    std::set<std::string> seen;
    for (const auto& c : codes) {
      auto key = grouping_key(kind, c);
      if (key.empty()) continue;
      any = true;
      if (seen.insert(key).second) ++counts[key];
    }
  }
  if (!any) fail(ErrorCode::kEmptyCorpus, "no codes to build a vocabulary from");

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [key, n] : counts) {
    if (!excluded.count(key)) ranked.emplace_back(key, n);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  CodeVocabulary v;
  v.kind = kind;
  v.k = k;
  v.exclusions.assign(excluded.begin(), excluded.end());
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) v.keys.push_back(ranked[i].first);
  return v;
}

namespace {

bool in_window(Timestamp t, Timestamp index_date, double lookback_days) {
  const double before = days_between(t, index_date);
  return before > 0.0 && before <= lookback_days;
}

std::string normalize_category(const std::string& value, const std::vector<std::string>& dict) {
  for (const auto& c : dict) {
    if (c.size() == value.size() &&
        std::equal(c.begin(), c.end(), value.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) ==
                 std::tolower(static_cast<unsigned char>(b));
        })) {
      return c;
    }
  }
  return "Unknown";
}

}  // namespace

std::vector<std::string> keys_in_window(const EhrSnapshot& snapshot, VocabularyKind kind,
                                        Timestamp index_date, double lookback_days) {
  const auto& events = kind == VocabularyKind::kDiagnosis ? snapshot.diagnoses : snapshot.medications;
  std::set<std::string> keys;
  for (const auto& e : events) {
    if (in_window(e.date, index_date, lookback_days)) keys.insert(grouping_key(kind, e.code));
  }
  return {keys.begin(), keys.end()};
}

const std::vector<std::string>& sex_categories() {
  static const std::vector<std::string> c = {"Female", "Male", "Unknown"};
  return c;
}
const std::vector<std::string>& race_categories() {
  static const std::vector<std::string> c = {"White", "Black", "Asian", "Hispanic", "Other",
                                             "Unknown"};
  return c;
}
const std::vector<std::string>& smoking_categories() {
  static const std::vector<std::string> c = {"Never", "Former", "Current", "Unknown"};
  return c;
}

std::vector<std::string> ehr_feature_names(const CodeVocabulary& dx, const CodeVocabulary& med) {
  std::vector<std::string> names;
  for (const auto& k : dx.keys) names.push_back("dx__" + k);
  for (const auto& k : med.keys) names.push_back("med__" + k);
  for (auto v : kVitalNames) {
    names.push_back("vital__" + std::string(v));
    names.push_back("vital__" + std::string(v) + "_observed");
  }
  names.push_back("demo__age");
  for (const auto& c : sex_categories()) names.push_back("demo__sex__" + c);
  for (const auto& c : race_categories()) names.push_back("demo__race__" + c);
  for (const auto& c : smoking_categories()) names.push_back("demo__smoking_status__" + c);
  return names;
}

FeatureVector build_ehr_vector(const EhrSnapshot& snapshot, const CodeVocabulary& dx,
                               const CodeVocabulary& med, Timestamp index_date,
                               double lookback_days) {
  FeatureVector out;
  out.names = ehr_feature_names(dx, med);
  out.values.reserve(out.names.size());

  for (const auto* vocab : {&dx, &med}) {
    const auto present = keys_in_window(snapshot, vocab->kind, index_date, lookback_days);
    for (const auto& key : vocab->keys) {
      out.values.push_back(std::binary_search(present.begin(), present.end(), key) ? 1.0 : 0.0);
    }
  }
  for (auto name : kVitalNames) {
    const VitalMeasurement* latest = nullptr;
    for (const auto& v : snapshot.vitals) {
      if (v.name != name || !in_window(v.date, index_date, lookback_days)) continue;
      if (latest == nullptr || v.date >= latest->date) latest = &v;
    }
    out.values.push_back(latest ? latest->value : 0.0);
    out.values.push_back(latest ? 1.0 : 0.0);
  }
  out.values.push_back(snapshot.age ? *snapshot.age : kMissing);
  const auto one_hot = [&out](const std::string& value, const std::vector<std::string>& dict) {
    const auto norm = normalize_category(value, dict);
    for (const auto& c : dict) out.values.push_back(c == norm ? 1.0 : 0.0);
  };
  one_hot(snapshot.sex, sex_categories());
  one_hot(snapshot.race, race_categories());
  one_hot(snapshot.smoking_status, smoking_categories());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

ClassSummary summarize(std::vector<double> values, bool binary) {
  ClassSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  if (binary) {
    double ones = 0;
    for (double v : values) ones += v;
    s.count = ones;
    s.percent = 100.0 * ones / static_cast<double>(values.size());
    return s;
  }
  s.mean = mean(values);
  s.sd = std::sqrt(variance(values));
  s.median = quantile(values, 0.5);
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  return s;
}

}  // namespace

std::vector<SummaryRow> cohort_summary_stats(const FeatureMatrix& features,
                                             const std::vector<LvefClass>& labels) {
  if (labels.size() != features.rows()) {
    fail(ErrorCode::kDimensionMismatch, "labels and feature rows differ in count");
  }
  std::array<std::size_t, kNumClasses> class_rows{};
  for (auto l : labels) ++class_rows[static_cast<std::size_t>(l)];
  const auto nonempty = std::count_if(class_rows.begin(), class_rows.end(),
                                      [](std::size_t n) { return n > 0; });
  if (nonempty < 2) fail(ErrorCode::kInsufficientData, "summary statistics need two nonempty classes");

  std::vector<SummaryRow> rows;
  for (std::size_t j = 0; j < features.cols(); ++j) {
    SummaryRow row;
    row.feature = features.column_names()[j];
    std::vector<std::vector<double>> groups(kNumClasses);
    std::vector<double> all;
    bool binary = true;
    for (std::size_t i = 0; i < features.rows(); ++i) {
      const double v = features.at(i, j);
      if (is_missing(v)) continue;
      if (v != 0.0 && v != 1.0) binary = false;
      groups[static_cast<std::size_t>(labels[i])].push_back(v);
      all.push_back(v);
    }
    row.binary = binary;
    for (int k = 0; k < kNumClasses; ++k) {
      row.by_class[static_cast<std::size_t>(k)] = summarize(groups[static_cast<std::size_t>(k)], binary);
    }
    row.overall = summarize(all, binary);
    if (binary) {
      row.test = "chi2";
      std::vector<std::vector<double>> table;
      for (const auto& g : groups) {
        if (g.empty()) continue;
        double ones = 0;
        for (double v : g) ones += v;
        table.push_back({static_cast<double>(g.size()) - ones, ones});
      }
      try {
        const auto res = stats::chi_square(table);
        row.statistic = res.statistic;
        row.p_value = res.p_value;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateTable) throw;
        row.degenerate = true;
      }
    } else {
      row.test = "kruskal_wallis";
      const auto res = stats::kruskal_wallis(groups);
      row.statistic = res.statistic;
      row.p_value = res.p_value;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string summary_to_json(const std::vector<SummaryRow>& rows) {
  auto num = [](double v) { return is_missing(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v); };
  auto cls = [&num](const ClassSummary& s, bool binary) {
    nlohmann::ordered_json j;
    j["n"] = s.n;
    if (binary) {
      j["count"] = num(s.count);
      j["percent"] = num(s.percent);
    } else {
      j["mean"] = num(s.mean);
      j["sd"] = num(s.sd);
      j["median"] = num(s.median);
      j["q1"] = num(s.q1);
      j["q3"] = num(s.q3);
    }
    return j;
  };
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["feature"] = r.feature;
    j["type"] = r.binary ? "binary" : "continuous";
    j["overall"] = cls(r.overall, r.binary);
    for (int k = 0; k < kNumClasses; ++k) {
      j[std::string(kClassNames[static_cast<std::size_t>(k)])] =
          cls(r.by_class[static_cast<std::size_t>(k)], r.binary);
    }
    j["test"] = r.test;
    j["statistic"] = num(r.statistic);
    j["p_value"] = num(r.p_value);
    j["degenerate"] = r.degenerate;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace lvef

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
#include "lvef/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace lvef {

std::string_view to_string(LvefClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

LvefClass parse_lvef_class(std::string_view name) {
  for (int k = 0; k < kNumClasses; ++k) {
    if (kClassNames[static_cast<std::size_t>(k)] == name) return static_cast<LvefClass>(k);
  }
  fail(ErrorCode::kParseError, "unknown LVEF class '" + std::string(name) + "'");
}

LvefClass map_lvef_class(double lvef) {
  if (!(lvef >= 0.0 && lvef <= 100.0)) {
    fail(ErrorCode::kOutOfRange, "LVEF " + format_double(lvef) + " outside [0, 100]");
  }
  if (lvef < 30.0) return LvefClass::kSevere;
  if (lvef < 40.0) return LvefClass::kModerate;
  if (lvef < 50.0) return LvefClass::kMild;
  return LvefClass::kNormal;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kUnassigned: return "unassigned";
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kExternal: return "external";
  }
  return "unassigned";
}

Split parse_split(std::string_view name) {
  for (Split s : {Split::kUnassigned, Split::kTrain, Split::kVal, Split::kTest, Split::kExternal}) {
    if (to_string(s) == name) return s;
  }
  fail(ErrorCode::kParseError, "unknown split '" + std::string(name) + "'");
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool excluded_quality(const EchoResult& echo) {
  return std::any_of(echo.quality_flags.begin(), echo.quality_flags.end(), [](const std::string& f) {
    const auto l = lower(f);
    return l == "poor quality" || l == "artifact";
  });
}

}  // namespace

PairingResult pair_ecg_echo(const std::vector<EcgMetadata>& ecgs,
                            const std::vector<EchoResult>& echos, double window_days) {
  std::map<std::string, std::vector<const EcgMetadata*>> by_patient;
  for (const auto& e : ecgs) by_patient[e.patient_id].push_back(&e);

  PairingResult result;
  for (const auto& echo : echos) {
    if (excluded_quality(echo)) {
      result.exclusions.push_back({echo.echo_id, echo.patient_id, "quality_flag"});
      continue;
    }
    if (!(echo.lvef >= 0.0 && echo.lvef <= 100.0)) {
      result.exclusions.push_back({echo.echo_id, echo.patient_id, "lvef_out_of_range"});
      continue;
    }
    const EcgMetadata* best = nullptr;
    double best_gap = 0.0;
    auto it = by_patient.find(echo.patient_id);
    if (it != by_patient.end()) {
      for (const EcgMetadata* ecg : it->second) {
        const double gap = days_between(echo.performed_at, ecg->acquired_at);
        if (std::abs(gap) > window_days) continue;
        bool better = best == nullptr;
        if (!better) {
          const double a = std::abs(gap), b = std::abs(best_gap);
          if (a != b) {
            better = a < b;
          } else if ((gap < 0.0) != (best_gap < 0.0)) {
            better = gap < 0.0;
          } else {
            better = ecg->record_id < best->record_id;
          }
        }
        if (better) {
          best = ecg;
          best_gap = gap;
        }
      }
    }
    if (best == nullptr) {
      result.exclusions.push_back({echo.echo_id, echo.patient_id, "no_ecg_in_window"});
      continue;
    }
    CohortExample ex;
    ex.ecg_record_id = best->record_id;
    ex.patient_id = echo.patient_id;
    ex.echo_id = echo.echo_id;
    ex.index_date = echo.performed_at;
    ex.lvef = echo.lvef;
    ex.label = map_lvef_class(echo.lvef);
    ex.pairing_gap_days = best_gap;
    result.examples.push_back(std::move(ex));
  }
  return result;
}

std::vector<Split> stratified_patient_split(const std::vector<CohortExample>& examples,
                                            SplitFractions fractions, std::uint64_t seed) {
  const double total = fractions.train + fractions.val + fractions.test;
  if (std::abs(total - 1.0) > 1e-9 || fractions.train < 0 || fractions.val < 0 ||
      fractions.test < 0) {
    fail(ErrorCode::kInvalidArgument, "split fractions must be nonnegative and sum to 1");
  }

  struct Patient {
    std::vector<std::size_t> examples;
    int stratum = kNumClasses;
  };
  std::map<std::string, Patient> patients;
  std::array<std::set<std::string>, kNumClasses> class_patients;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto& p = patients[examples[i].patient_id];
    p.examples.push_back(i);
    const int label = static_cast<int>(examples[i].label);
    p.stratum = std::min(p.stratum, label);
    class_patients[static_cast<std::size_t>(label)].insert(examples[i].patient_id);
  }
  for (int k = 0; k < kNumClasses; ++k) {
    if (class_patients[static_cast<std::size_t>(k)].size() < 3) {
      fail(ErrorCode::kInsufficientData,
           "class " + std::string(kClassNames[static_cast<std::size_t>(k)]) + " has " +
               std::to_string(class_patients[static_cast<std::size_t>(k)].size()) +
               " patients; at least 3 are required");
    }
  }

  std::array<std::vector<const Patient*>, kNumClasses> strata;
  for (const auto& [id, p] : patients) strata[static_cast<std::size_t>(p.stratum)].push_back(&p);

  const std::array<double, 3> frac = {fractions.train, fractions.val, fractions.test};
  constexpr std::array<Split, 3> kSplits = {Split::kTrain, Split::kVal, Split::kTest};
  std::vector<Split> assignment(examples.size(), Split::kUnassigned);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& members = strata[s];
    Rng rng(derive_seed(seed, s));
    rng.shuffle(members);
    double stratum_examples = 0.0;
    for (const Patient* p : members) stratum_examples += static_cast<double>(p->examples.size());
    std::array<double, 3> assigned{};
    for (const Patient* p : members) {
      std::size_t pick = 0;
      double best_deficit = -1e300;
      for (std::size_t k = 0; k < 3; ++k) {
        const double deficit = frac[k] * stratum_examples - assigned[k];
        if (deficit > best_deficit) {
          best_deficit = deficit;
          pick = k;
        }
      }
      assigned[pick] += static_cast<double>(p->examples.size());
      for (std::size_t i : p->examples) assignment[i] = kSplits[pick];
    }
  }
  return assignment;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_line(const std::string& line, char sep = ',') {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) cells.push_back(cell);
  if (!line.empty() && line.back() == sep) cells.emplace_back();
  return cells;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                const std::string& expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kParseError, "empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    fail(ErrorCode::kParseError, "unexpected header in " + path.string() + ": " + line);
  }
  const auto width = split_line(expected_header).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != width) fail(ErrorCode::kParseError, "ragged row in " + path.string());
    rows.push_back(std::move(cells));
  }
  return rows;
}

constexpr const char* kCohortHeader =
    "record_id,patient_id,echo_id,index_date,lvef,label,split,pairing_gap_days";
constexpr const char* kEchoHeader = "echo_id,patient_id,performed_at,lvef,quality_flags";

}  // namespace

void write_cohort_csv(const std::vector<CohortExample>& examples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << kCohortHeader << '\n';
  for (const auto& e : examples) {
    out << e.ecg_record_id << ',' << e.patient_id << ',' << e.echo_id << ','
        << format_timestamp(e.index_date) << ',' << format_double(e.lvef) << ','
        << to_string(e.label) << ',' << to_string(e.split) << ','
        << format_double(e.pairing_gap_days) << '\n';
  }
}

std::vector<CohortExample> read_cohort_csv(const std::filesystem::path& path) {
  std::vector<CohortExample> out;
  for (const auto& c : read_rows(path, kCohortHeader)) {
    CohortExample e;
    e.ecg_record_id = c[0];
    e.patient_id = c[1];
    e.echo_id = c[2];
    e.index_date = parse_timestamp(c[3]);
    e.lvef = parse_double(c[4]);
    e.label = parse_lvef_class(c[5]);
    e.split = parse_split(c[6]);
    e.pairing_gap_days = parse_double(c[7]);
    out.push_back(std::move(e));
  }
  return out;
}

void write_exclusions_csv(const std::vector<Exclusion>& exclusions,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << "echo_id,patient_id,reason\n";
  for (const auto& e : exclusions) out << e.echo_id << ',' << e.patient_id << ',' << e.reason << '\n';
}

void write_echo_csv(const std::vector<EchoResult>& echos, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << kEchoHeader << '\n';
  for (const auto& e : echos) {
    std::string flags;
    for (std::size_t i = 0; i < e.quality_flags.size(); ++i) {
      if (i) flags += '|';
      flags += e.quality_flags[i];
    }
    out << e.echo_id << ',' << e.patient_id << ',' << format_timestamp(e.performed_at) << ','
        << format_double(e.lvef) << ',' << flags << '\n';
  }
}

std::vector<EchoResult> read_echo_csv(const std::filesystem::path& path) {
  std::vector<EchoResult> out;
  for (const auto& c : read_rows(path, kEchoHeader)) {
    EchoResult e;
    e.echo_id = c[0];
    e.patient_id = c[1];
    e.performed_at = parse_timestamp(c[2]);
    e.lvef = parse_double(c[3]);
    if (!c[4].empty()) e.quality_flags = split_line(c[4], '|');
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace lvef

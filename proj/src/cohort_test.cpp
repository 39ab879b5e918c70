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

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>

#include "lvef/synth.hpp"

namespace lvef {
namespace {

const Timestamp kEcho = parse_timestamp("2020-03-15T10:00:00Z");

Timestamp shifted(double days) { return kEcho + std::chrono::seconds(static_cast<long long>(days * 86400.0)); }

EcgMetadata ecg(std::string id, std::string patient, double days) {
  return {std::move(id), std::move(patient), shifted(days), 500.0};
}

EchoResult echo(std::string id, std::string patient, double lvef, std::vector<std::string> flags = {}) {
  return {std::move(id), std::move(patient), kEcho, lvef, std::move(flags)};
}

TEST(Pairing, ClosestEcgWins) {
  const auto r = pair_ecg_echo({ecg("before", "p", -3), ecg("after", "p", 5)}, {echo("e", "p", 45)});
  ASSERT_EQ(r.examples.size(), 1u);
  EXPECT_EQ(r.examples[0].ecg_record_id, "before");
  EXPECT_DOUBLE_EQ(r.examples[0].pairing_gap_days, -3.0);
  EXPECT_EQ(r.examples[0].label, LvefClass::kMild);
  EXPECT_EQ(r.examples[0].index_date, kEcho);
}

TEST(Pairing, OutsideWindowIsExcluded) {
  const auto r = pair_ecg_echo({ecg("far", "p", 15)}, {echo("e", "p", 45)});
  EXPECT_TRUE(r.examples.empty());
  ASSERT_EQ(r.exclusions.size(), 1u);
  EXPECT_EQ(r.exclusions[0].reason, "no_ecg_in_window");
}

TEST(Pairing, EquidistantTiePrefersEarlierEcg) {
  const auto r = pair_ecg_echo({ecg("after", "p", 2), ecg("before", "p", -2)}, {echo("e", "p", 60)});
  ASSERT_EQ(r.examples.size(), 1u);
  EXPECT_EQ(r.examples[0].ecg_record_id, "before");
}

TEST(Pairing, OtherPatientsEcgsIgnored) {
  const auto r = pair_ecg_echo({ecg("other", "q", 0), ecg("mine", "p", 10)}, {echo("e", "p", 60)});
  ASSERT_EQ(r.examples.size(), 1u);
  EXPECT_EQ(r.examples[0].ecg_record_id, "mine");
}

TEST(Pairing, QualityFlagsExclude) {
  const auto r = pair_ecg_echo({ecg("a", "p", 0), ecg("b", "q", 0), ecg("c", "s", 0)},
                               {echo("e1", "p", 50, {"poor quality"}), echo("e2", "q", 50, {"artifact"}),
                                echo("e3", "s", 50, {"contrast"})});
  ASSERT_EQ(r.examples.size(), 1u);
  EXPECT_EQ(r.examples[0].echo_id, "e3");
  ASSERT_EQ(r.exclusions.size(), 2u);
  for (const auto& e : r.exclusions) EXPECT_EQ(e.reason, "quality_flag");
}

TEST(Pairing, ConservesEchoCount) {
  synth::CohortOptions o;
  o.n = 300;
  o.seed = 5;
  const auto c = synth::generate_cohort(o);
  std::vector<EcgMetadata> metas;
  for (const auto& r : c.records) metas.push_back(r.meta);
  const auto r = pair_ecg_echo(metas, c.echos);
  EXPECT_EQ(r.examples.size() + r.exclusions.size(), c.echos.size());
  EXPECT_EQ(r.examples.size(), 300u);
  for (const auto& ex : r.examples) {
    EXPECT_LE(std::abs(ex.pairing_gap_days), 14.0);
    EXPECT_EQ(ex.label, map_lvef_class(ex.lvef));
  }
}

TEST(LvefClass, BoundariesAreHalfOpen) {
  EXPECT_EQ(map_lvef_class(55), LvefClass::kNormal);
  EXPECT_EQ(map_lvef_class(50), LvefClass::kNormal);
  EXPECT_EQ(map_lvef_class(49.999), LvefClass::kMild);
  EXPECT_EQ(map_lvef_class(40), LvefClass::kMild);
  EXPECT_EQ(map_lvef_class(30), LvefClass::kModerate);
  EXPECT_EQ(map_lvef_class(29.9), LvefClass::kSevere);
  EXPECT_EQ(map_lvef_class(0), LvefClass::kSevere);
  EXPECT_EQ(map_lvef_class(100), LvefClass::kNormal);
}

TEST(LvefClass, OutOfRangeIsAnError) {
  for (double v : {-0.1, 100.5, std::nan("")}) {
    try {
      map_lvef_class(v);
      FAIL() << v;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
    }
  }
}

TEST(LvefClass, NamesRoundTrip) {
  for (int k = 0; k < kNumClasses; ++k) {
    const auto c = static_cast<LvefClass>(k);
    EXPECT_EQ(parse_lvef_class(to_string(c)), c);
  }
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest, Split::kExternal}) EXPECT_EQ(parse_split(to_string(s)), s);
}

std::vector<CohortExample> synthetic_examples(std::size_t n, std::uint64_t seed) {
  synth::CohortOptions o;
  o.n = n;
  o.seed = seed;
  const auto c = synth::generate_cohort(o);
  std::vector<EcgMetadata> metas;
  for (const auto& r : c.records) metas.push_back(r.meta);
  return pair_ecg_echo(metas, c.echos).examples;
}

TEST(Split, PatientsNeverStraddleSplits) {
  const auto ex = synthetic_examples(2000, 7);
  const auto s = stratified_patient_split(ex, {}, 1);
  std::map<std::string, Split> seen;
  std::size_t repeated = 0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    auto [it, fresh] = seen.emplace(ex[i].patient_id, s[i]);
    if (!fresh) {
      ++repeated;
      EXPECT_EQ(it->second, s[i]) << ex[i].patient_id;
    }
  }
  EXPECT_GT(repeated, 0u);
}

TEST(Split, DeterministicUnderSeed) {
  const auto ex = synthetic_examples(1000, 8);
  EXPECT_EQ(stratified_patient_split(ex, {}, 42), stratified_patient_split(ex, {}, 42));
  EXPECT_NE(stratified_patient_split(ex, {}, 42), stratified_patient_split(ex, {}, 43));
}

TEST(Split, ClassProportionsWithinTwoPoints) {
  const auto ex = synthetic_examples(10000, 9);
  const auto s = stratified_patient_split(ex, {}, 3);
  std::array<std::array<double, 3>, kNumClasses> counts{};
  std::array<double, kNumClasses> totals{};
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const auto k = static_cast<std::size_t>(ex[i].label);
    totals[k] += 1;
    counts[k][s[i] == Split::kTrain ? 0 : s[i] == Split::kVal ? 1 : 2] += 1;
  }
  const double target[] = {0.8, 0.1, 0.1};
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(counts[k][j] / totals[k], target[j], 0.02) << k << "/" << j;
  }
}

TEST(Split, TooFewPatientsInAClass) {
  std::vector<CohortExample> ex;
  for (int i = 0; i < 20; ++i) {
    CohortExample e;
    e.patient_id = "p" + std::to_string(i);
    e.lvef = i < 2 ? 20.0 : 60.0;
    e.label = map_lvef_class(e.lvef);
    ex.push_back(e);
  }
  try {
    stratified_patient_split(ex, {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
}

TEST(CohortIo, CsvRoundTrip) {
  auto ex = synthetic_examples(120, 10);
  const auto s = stratified_patient_split(ex, {0.6, 0.2, 0.2}, 4);
  for (std::size_t i = 0; i < ex.size(); ++i) ex[i].split = s[i];
  const auto path = std::filesystem::temp_directory_path() / "lvef_cohort_roundtrip.csv";
  write_cohort_csv(ex, path);
  const auto back = read_cohort_csv(path);
  ASSERT_EQ(back.size(), ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i) {
    EXPECT_EQ(back[i].ecg_record_id, ex[i].ecg_record_id);
    EXPECT_EQ(back[i].patient_id, ex[i].patient_id);
    EXPECT_EQ(back[i].echo_id, ex[i].echo_id);
    EXPECT_EQ(back[i].index_date, ex[i].index_date);
    EXPECT_EQ(back[i].lvef, ex[i].lvef);
    EXPECT_EQ(back[i].label, ex[i].label);
    EXPECT_EQ(back[i].split, ex[i].split);
    EXPECT_EQ(back[i].pairing_gap_days, ex[i].pairing_gap_days);
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace lvef

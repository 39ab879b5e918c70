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
#include "lvef/synth.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace lvef::synth {
namespace {

void expect_code(ErrorCode code, const auto& fn) {
  try {
    fn();
    FAIL() << "no error thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(SynthRecord, SeedDeterminesRecord) {
  const auto p = default_profiles()[0];
  const auto a = generate_record(p, 17);
  const auto b = generate_record(p, 17);
  const auto c = generate_record(p, 18);
  ASSERT_EQ(a.ecg.leads().size(), 8u);
  for (std::size_t l = 0; l < 8; ++l) {
    EXPECT_EQ(a.ecg.leads()[l].name, b.ecg.leads()[l].name);
    EXPECT_EQ(a.ecg.leads()[l].samples, b.ecg.leads()[l].samples);
    EXPECT_EQ(a.ecg.leads()[l].samples.size(), 5000u);
  }
  EXPECT_NE(a.ecg.leads()[0].samples, c.ecg.leads()[0].samples);
  EXPECT_NO_THROW(a.ecg.validate_measured());
}

TEST(SynthRecord, DegenerateRhythmIsExact) {
  SynthProfile p;
  p.hr_mean_bpm = 60.0;
  p.hr_sd_bpm = 0.0;
  p.rr_jitter_ms = 0.0;
  const auto r = generate_record(p, 3);
  ASSERT_FALSE(r.rr_ms.empty());
  for (double rr : r.rr_ms) EXPECT_DOUBLE_EQ(rr, 1000.0);
  for (std::size_t i = 1; i < r.beats.size(); ++i) {
    EXPECT_EQ(r.beats[i].r - r.beats[i - 1].r, 500u);
    const auto& b = r.beats[i];
    EXPECT_LT(b.p_peak, b.q);
    EXPECT_LT(b.q, b.r);
    EXPECT_LT(b.r, b.s);
    EXPECT_LT(b.s, b.t_peak);
  }
}

TEST(SynthRecord, InvalidProfiles) {
  SynthProfile p;
  p.hr_mean_bpm = -5;
  expect_code(ErrorCode::kInvalidProfile, [&] { generate_record(p, 1); });
  p = {};
  p.noise_sd = -0.1;
  expect_code(ErrorCode::kInvalidProfile, [&] { p.validate(); });
  p = {};
  p.diagnosis_priors["I50.22"] = 1.5;
  expect_code(ErrorCode::kInvalidProfile, [&] { p.validate(); });
}

TEST(ClassCounts, ReferencePrevalencesAtTenThousand) {
  const auto c = class_counts(10000, kReferencePrevalences);
  EXPECT_EQ(c[0], 226u);
  EXPECT_EQ(c[1], 347u);
  EXPECT_EQ(c[2], 593u);
  EXPECT_EQ(c[3], 8834u);
}

TEST(ClassCounts, LargestRemainderAlwaysSumsToN) {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    std::array<double, kNumClasses> p{};
    double s = 0;
    for (auto& v : p) s += v = rng.uniform();
    for (auto& v : p) v /= s;
    const std::size_t n = rng.below(5000);
    const auto c = class_counts(n, p);
    EXPECT_EQ(c[0] + c[1] + c[2] + c[3], n);
    for (int k = 0; k < kNumClasses; ++k) EXPECT_LT(std::abs(static_cast<double>(c[k]) - n * p[k]), 1.0);
  }
  const auto all = class_counts(37, {0, 0, 0, 1});
  EXPECT_EQ(all[3], 37u);
  expect_code(ErrorCode::kInvalidPrevalence, [] { class_counts(10, {0.5, 0.5, 0.5, 0.0}); });
  expect_code(ErrorCode::kInvalidPrevalence, [] { class_counts(10, {1.1, -0.1, 0.0, 0.0}); });
}

TEST(Cohort, PairsRecoverPlannedLabels) {
  CohortOptions o;
  o.n = 400;
  o.seed = 2;
  const auto c = generate_cohort(o);
  std::vector<EcgMetadata> metas;
  std::map<std::string, LvefClass> planned;
  for (const auto& r : c.records) {
    metas.push_back(r.meta);
    planned[r.meta.record_id] = r.label;
  }
  const auto paired = pair_ecg_echo(metas, c.echos, o.pairing_window_days);
  ASSERT_EQ(paired.examples.size(), o.n);
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& ex : paired.examples) {
    EXPECT_LE(std::abs(ex.pairing_gap_days), 14.0);
    EXPECT_EQ(ex.label, planned.at(ex.ecg_record_id)) << ex.ecg_record_id;
    ++counts[static_cast<std::size_t>(ex.label)];
  }
  EXPECT_EQ(counts, class_counts(o.n, kReferencePrevalences));
}

TEST(Cohort, AllNormalPrevalence) {
  CohortOptions o;
  o.n = 50;
  o.prevalences = {0, 0, 0, 1};
  o.excluded_echo_fraction = 0;
  const auto c = generate_cohort(o);
  for (const auto& e : c.echos) EXPECT_EQ(map_lvef_class(e.lvef), LvefClass::kNormal);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cohort, FixedSeedWritesIdenticalFiles) {
  CohortOptions o;
  o.n = 12;
  o.seed = 9;
  const auto base = std::filesystem::temp_directory_path() / "lvef_synth_det";
  std::filesystem::remove_all(base);
  write_cohort(generate_cohort(o), base / "a");
  write_cohort(generate_cohort(o), base / "b");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), base / "a");
    EXPECT_EQ(slurp(e.path()), slurp(base / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 12u);
  std::filesystem::remove_all(base);
}

}  // namespace
}  // namespace lvef::synth

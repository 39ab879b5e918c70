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
#include "lvef/config.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

namespace lvef {
namespace {

void expect_invalid(std::string_view text) {
  try {
    parse_config(text);
    FAIL() << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigInvalid) << e.what();
  }
}

TEST(Config, EmptyObjectYieldsDefaults) {
  const auto c = parse_config("{}");
  EXPECT_EQ(c.canonical_json(), Config().canonical_json());
  EXPECT_DOUBLE_EQ(c.gbt.learning_rate, 0.08);
  EXPECT_EQ(c.gbt.max_depth, 7);
  EXPECT_DOUBLE_EQ(c.gbt.min_child_weight, 5.0);
  EXPECT_EQ(c.eval.bootstrap_resamples, 1000);
  EXPECT_EQ(c.explain.resamples, 20);
  EXPECT_EQ(c.explain.top_k, 10);
  EXPECT_DOUBLE_EQ(c.cohort.pairing_window_days, 14.0);
  EXPECT_DOUBLE_EQ(c.cohort.split.train, 0.8);
}

TEST(Config, OverridesApply) {
  const auto c = parse_config(R"({"seed": 9, "gbt": {"n_rounds": 12, "early_stopping_rounds": null},
                                  "cohort": {"split": {"train": 0.7, "val": 0.15, "test": 0.15}}})");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.gbt.n_rounds, 12);
  EXPECT_FALSE(c.gbt.early_stopping_rounds.has_value());
  EXPECT_DOUBLE_EQ(c.cohort.split.val, 0.15);
}

TEST(Config, RejectsUnknownKeysTypesAndRanges) {
  expect_invalid(R"({"sede": 1})");
  expect_invalid(R"({"gbt": {"learning_rat": 0.1}})");
  expect_invalid(R"({"gbt": {"max_depth": "seven"}})");
  expect_invalid(R"({"gbt": {"learning_rate": 0}})");
  expect_invalid(R"({"cohort": {"split": {"train": 0.9, "val": 0.1, "test": 0.1}}})");
  expect_invalid(R"({"synth": {"prevalences": [0.5, 0.5]}})");
  expect_invalid("[1, 2]");
  expect_invalid("{not json");
}

TEST(Config, CanonicalHashIgnoresKeyOrderAndSpelledOutDefaults) {
  const auto a = parse_config(R"({"seed": 3, "eval": {"alpha": 0.05, "bootstrap_resamples": 200}})");
  const auto b = parse_config(R"({"eval": {"bootstrap_resamples": 200}, "seed": 3})");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), parse_config(R"({"seed": 4, "eval": {"bootstrap_resamples": 200}})").hash());
  // The canonical form parses back to itself.
  EXPECT_EQ(parse_config(a.canonical_json()).canonical_json(), a.canonical_json());
  const auto j = nlohmann::json::parse(a.canonical_json());
  for (const char* section : {"synth", "preprocess", "cohort", "ehr", "gbt", "eval", "explain"}) {
    EXPECT_TRUE(j.contains(section)) << section;
  }
}

TEST(Config, StageSeedsAreDistinct) {
  Config c;
  c.seed = 5;
  EXPECT_NE(c.stage_seed(1), c.stage_seed(2));
  EXPECT_EQ(c.stage_seed(3), derive_seed(5, 3));
}

TEST(Config, ShippedExampleIsTheDefault) {
  const auto c = load_config(std::filesystem::path(LVEF_DATA_DIR) / "config.example.json");
  EXPECT_EQ(c.hash(), Config().hash());
}

}  // namespace
}  // namespace lvef

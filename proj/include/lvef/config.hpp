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
#include <filesystem>
#include <string>
#include <string_view>

#include "lvef/cohort.hpp"
#include "lvef/gbt.hpp"
#include "lvef/pipeline.hpp"
#include "lvef/signal.hpp"

namespace lvef {

struct SynthConfig {
  std::size_t n = 2000;
  std::size_t external_n = 500;
  std::array<double, kNumClasses> prevalences{};  // class order; defaults to the reference cohort mix
  double repeat_patient_fraction = 0.10;
  double excluded_echo_fraction = 0.01;
  double decoy_ecg_fraction = 0.10;
  bool class_effects = true;  // false: every class uses the normal profile
  std::string start_date = "2016-01-01T00:00:00Z";
  std::string end_date = "2022-12-31T00:00:00Z";
  std::string external_start_date = "2023-01-01T00:00:00Z";
  std::string external_end_date = "2024-06-30T00:00:00Z";
};

struct CohortConfig {
  double pairing_window_days = 14.0;
  SplitFractions split;
};

struct EvalConfig {
  int bootstrap_resamples = 1000;
  double alpha = 0.05;
};

struct ExplainConfig {
  int resamples = 20;
  int top_k = 10;
  bool resample = true;
  int dependence_features = 5;  // top-ranked features per class with dependence data
  std::string label_map;        // CSV path; empty uses the built-in table
};

struct Config {
  std::uint64_t seed = 0;
  SynthConfig synth;
  PreprocessConfig preprocess;
  bool write_preprocessed_signals = false;
  CohortConfig cohort;
  pipeline::EhrOptions ehr;
  gbt::GbtParams gbt;
  EvalConfig eval;
  ExplainConfig explain;

  Config();

  // Fully expanded JSON with every key present, in schema order. Two configs
  // with equal canonical JSON produce identical artifacts.
  std::string canonical_json() const;
  std::string hash() const;  // FNV-1a of canonical_json(), hex

  // Stage seeds, all derived from `seed`.
  std::uint64_t stage_seed(std::uint64_t stream) const { return derive_seed(seed, stream); }
};

// Missing keys take defaults; unknown keys, wrong types and out-of-range
// values throw ConfigInvalid.
Config parse_config(std::string_view json_text);
Config load_config(const std::filesystem::path& path);

}  // namespace lvef

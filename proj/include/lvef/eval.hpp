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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lvef/cohort.hpp"
#include "lvef/common.hpp"

namespace lvef::eval {

// Binary AUROC (Mann-Whitney U / (n+ n-), ties count one half). Exact: the
// result equals pair counting bit for bit. Throws OneClassOnly.
double auroc(std::span<const double> scores, std::span<const char> positive);

// One-vs-rest AUROC for class k; labels are class indices.
double auroc_ovr(std::span<const double> scores, std::span<const int> labels, int k);

struct RocPoint {
  double threshold = 0.0;  // predictor: score >= threshold
  double fpr = 0.0;
  double tpr = 0.0;
};

// From (0, 0) at threshold +inf down to (1, 1) at the minimum score, one
// point per distinct score. Throws OneClassOnly.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels, int k);

struct ThresholdMetrics {
  double f1 = kMissing;
  double sensitivity = kMissing;
  double specificity = kMissing;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Zero denominators give missing metrics.
ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels,
                                   int k, double threshold);

struct ThresholdChoice {
  double threshold = kMissing;
  double f1 = kMissing;
};

// Maximizes one-vs-rest F1 of (score >= t) over the observed scores plus one
// candidate just above the maximum; ties go to the largest threshold. Throws
// OneClassOnly when class k has no positives.
ThresholdChoice select_f1_threshold(std::span<const double> scores, std::span<const int> labels,
                                    int k);

// Positive: lvef < cutoff. Score: summed probability of the classes below the
// cutoff. `proba` is row-major N x 4. Throws MisalignedCutoff unless the
// cutoff is 30, 40 or 50.
double binary_auc_at_cutoff(std::span<const double> proba, std::span<const double> lvef,
                            double cutoff);

// ---------------------------------------------------------------------------
// Bootstrap

struct Interval {
  double lo = kMissing;
  double hi = kMissing;
};

// Resample indices [0, n) with replacement B times; resample b uses its own
// derived seed. A resample rejected by `accept` is redrawn up to 10 times
// before DegenerateResampling. Returns the type-7 percentile interval of
// each metric; missing metric values are skipped.
using MultiMetric = std::function<std::vector<double>(std::span<const std::size_t>)>;
using ResampleFilter = std::function<bool(std::span<const std::size_t>)>;

std::vector<Interval> bootstrap_intervals(std::size_t n, const MultiMetric& metrics, int B,
                                          double alpha, std::uint64_t seed,
                                          const ResampleFilter& accept = {});

Interval bootstrap_ci(std::size_t n, const std::function<double(std::span<const std::size_t>)>& metric,
                      int B, double alpha, std::uint64_t seed, const ResampleFilter& accept = {});

// ---------------------------------------------------------------------------
// Reports

struct EstimateCi {
  double point = kMissing;
  Interval ci;
  // Percentile intervals need not contain the full-sample estimate.
  bool point_outside_ci() const;
};

struct ClassEvaluation {
  std::string class_name;
  std::size_t n_positive = 0;
  EstimateCi auroc;
  double threshold = kMissing;
  EstimateCi f1;
  EstimateCi sensitivity;
  EstimateCi specificity;
  std::vector<RocPoint> roc;
};

struct EvalOptions {
  int bootstrap_resamples = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

struct EvalReport {
  std::string modality;  // ehr_only | ecg_only | multimodal
  std::string cohort;    // internal_test | temporal_external
  std::size_t n = 0;
  EvalOptions options;
  std::array<ClassEvaluation, kNumClasses> classes;
  std::map<int, EstimateCi> binary_auc;  // by LVEF cutoff
  std::map<std::string, std::string> provenance;
};

// Per-class thresholds from a validation set; classes absent from it get a
// missing threshold.
std::array<double, kNumClasses> select_thresholds(std::span<const double> proba,
                                                  std::span<const int> labels);

// `proba` is row-major N x 4.
EvalReport evaluate(std::span<const double> proba, std::span<const int> labels,
                    std::span<const double> lvef, const std::array<double, kNumClasses>& thresholds,
                    const EvalOptions& options, std::string modality, std::string cohort);

std::string to_json(const EvalReport& report);
// Columns: class,threshold,fpr,tpr
void write_roc_csv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace lvef::eval

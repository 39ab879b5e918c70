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
#include "lvef/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

namespace lvef::eval {
namespace {

// Exhaustive pair count: wins + half ties over all positive/negative pairs.
double pair_count_auroc(const std::vector<double>& s, const std::vector<int>& y, int k) {
  double credit = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != k) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] == k) continue;
      pairs += 1;
      credit += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return credit / pairs;
}

std::pair<double, double> exhaustive_f1(const std::vector<double>& s, const std::vector<int>& y, int k) {
  std::set<double> cands(s.begin(), s.end());
  cands.insert(std::nextafter(*cands.rbegin(), INFINITY));
  double best_f1 = -1, best_t = 0;
  for (double t : cands) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool p = s[i] >= t, pos = y[i] == k;
      tp += p && pos;
      fp += p && !pos;
      fn += !p && pos;
    }
    const double f1 = 2 * tp / (2 * tp + fp + fn);
    if (f1 > best_f1 || (f1 == best_f1 && t > best_t)) best_f1 = f1, best_t = t;
  }
  return {best_f1, best_t};
}

void random_set(Rng& rng, std::size_t n, std::vector<double>& s, std::vector<int>& y) {
  s.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(rng.below(kNumClasses));
    // Coarse grid to force ties.
    s[i] = std::round((rng.uniform() + 0.15 * (y[i] == 0)) * 20) / 20;
  }
  y[0] = 0;
  y[1] = 1;
}

void expect_code(ErrorCode code, const auto& fn) {
  try {
    fn();
    FAIL() << "no error thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(Auroc, HandWorkedExample) {
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(auroc_ovr(s, y, 1), 0.75);
}

TEST(Auroc, ExtremesAndTies) {
  const std::vector<int> y = {0, 1, 0, 1, 1};
  EXPECT_DOUBLE_EQ(auroc_ovr(std::vector<double>{0.9, 0.1, 0.8, 0.2, 0.3}, y, 0), 1.0);
  EXPECT_DOUBLE_EQ(auroc_ovr(std::vector<double>(5, 0.3), y, 0), 0.5);
  expect_code(ErrorCode::kOneClassOnly, [&] { auroc_ovr(std::vector<double>(5, 0.3), y, 2); });
}

TEST(Auroc, MatchesPairCountingExactly) {
  Rng rng(1);
  std::vector<double> s;
  std::vector<int> y;
  for (int rep = 0; rep < 50; ++rep) {
    random_set(rng, 1 + 2 + rng.below(300), s, y);
    EXPECT_EQ(auroc_ovr(s, y, 0), pair_count_auroc(s, y, 0));
  }
}

TEST(Auroc, InvariantUnderMonotoneTransform) {
  Rng rng(2);
  std::vector<double> s;
  std::vector<int> y;
  random_set(rng, 200, s, y);
  std::vector<double> t(s.size());
  std::transform(s.begin(), s.end(), t.begin(), [](double v) { return std::exp(3 * v) - 7; });
  EXPECT_EQ(auroc_ovr(s, y, 0), auroc_ovr(t, y, 0));
}

TEST(RocCurve, MonotoneWithUnitEndpoints) {
  Rng rng(3);
  std::vector<double> s;
  std::vector<int> y;
  random_set(rng, 150, s, y);
  const auto roc = roc_curve(s, y, 0);
  ASSERT_GE(roc.size(), 2u);
  EXPECT_EQ(roc.front().fpr, 0.0);
  EXPECT_EQ(roc.front().tpr, 0.0);
  EXPECT_EQ(roc.back().fpr, 1.0);
  EXPECT_EQ(roc.back().tpr, 1.0);
  double area = 0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    EXPECT_GE(roc[i].fpr, roc[i - 1].fpr);
    EXPECT_GE(roc[i].tpr, roc[i - 1].tpr);
    EXPECT_LT(roc[i].threshold, roc[i - 1].threshold);
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2;
  }
  // Trapezoids under the step curve credit ties by half.
  EXPECT_NEAR(area, auroc_ovr(s, y, 0), 1e-12);
}

TEST(ThresholdMetrics, HandCounts) {
  // TP=3, FN=1, FP=2, TN=4 at threshold 0.5.
  const std::vector<double> s = {0.9, 0.8, 0.7, 0.2, 0.6, 0.55, 0.1, 0.2, 0.3, 0.4};
  const std::vector<int> y = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  const auto m = threshold_metrics(s, y, 1, 0.5);
  EXPECT_EQ(m.tp, 3u);
  EXPECT_EQ(m.fn, 1u);
  EXPECT_EQ(m.fp, 2u);
  EXPECT_EQ(m.tn, 4u);
  EXPECT_DOUBLE_EQ(m.sensitivity, 0.75);
  EXPECT_NEAR(m.specificity, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);

  const auto low = threshold_metrics(s, y, 1, 0.0);
  EXPECT_EQ(low.sensitivity, 1.0);
  EXPECT_EQ(low.specificity, 0.0);
}

TEST(ThresholdMetrics, ZeroDenominatorsAreMissing) {
  const std::vector<double> s = {0.2, 0.4};
  const std::vector<int> y = {0, 0};
  const auto m = threshold_metrics(s, y, 1, 0.3);
  EXPECT_TRUE(is_missing(m.sensitivity));
  EXPECT_DOUBLE_EQ(m.specificity, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 0.0);
}

TEST(F1Threshold, MatchesExhaustiveSearch) {
  Rng rng(4);
  std::vector<double> s;
  std::vector<int> y;
  for (int rep = 0; rep < 100; ++rep) {
    random_set(rng, 50, s, y);
    for (int k = 0; k < 2; ++k) {
      const auto got = select_f1_threshold(s, y, k);
      const auto [f1, t] = exhaustive_f1(s, y, k);
      EXPECT_EQ(got.f1, f1);
      EXPECT_EQ(got.threshold, t);
    }
  }
}

TEST(F1Threshold, SeparatedAndAllPositive) {
  const std::vector<double> s = {0.1, 0.2, 0.7, 0.9};
  const auto sep = select_f1_threshold(s, std::vector<int>{0, 0, 1, 1}, 1);
  EXPECT_EQ(sep.f1, 1.0);
  // Most specific threshold that still achieves F1 = 1.
  EXPECT_EQ(sep.threshold, 0.7);
  const auto all = select_f1_threshold(s, std::vector<int>{1, 1, 1, 1}, 1);
  EXPECT_EQ(all.threshold, 0.1);
  EXPECT_EQ(all.f1, 1.0);
  expect_code(ErrorCode::kOneClassOnly, [&] { select_f1_threshold(s, std::vector<int>{0, 0, 0, 0}, 1); });
}

TEST(BinaryAuc, CutoffFiftyIsFlippedNormal) {
  Rng rng(5);
  const std::size_t n = 120;
  std::vector<double> proba(n * kNumClasses), lvef(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0;
    for (int k = 0; k < kNumClasses; ++k) sum += proba[i * kNumClasses + k] = rng.uniform() + 0.01;
    for (int k = 0; k < kNumClasses; ++k) proba[i * kNumClasses + k] /= sum;
    lvef[i] = rng.uniform(10, 70);
    labels[i] = static_cast<int>(map_lvef_class(lvef[i]));
  }
  std::vector<double> neg_normal(n);
  std::vector<int> flipped(n);
  for (std::size_t i = 0; i < n; ++i) {
    neg_normal[i] = -proba[i * kNumClasses + 3];
    flipped[i] = labels[i] == 3 ? 0 : 1;
  }
  EXPECT_NEAR(binary_auc_at_cutoff(proba, lvef, 50), auroc_ovr(neg_normal, flipped, 1), 1e-12);
  expect_code(ErrorCode::kMisalignedCutoff, [&] { binary_auc_at_cutoff(proba, lvef, 35); });
  std::vector<double> all_normal(n, 60.0);
  expect_code(ErrorCode::kOneClassOnly, [&] { binary_auc_at_cutoff(proba, all_normal, 50); });
}

TEST(Bootstrap, ConstantMetricAndDeterminism) {
  const auto c = bootstrap_ci(30, [](std::span<const std::size_t>) { return 0.42; }, 50, 0.05, 1);
  EXPECT_EQ(c.lo, 0.42);
  EXPECT_EQ(c.hi, 0.42);
  auto mean = [](std::span<const std::size_t> idx) {
    double s = 0;
    for (auto i : idx) s += static_cast<double>(i);
    return s / static_cast<double>(idx.size());
  };
  const auto a = bootstrap_ci(100, mean, 200, 0.05, 9);
  const auto b = bootstrap_ci(100, mean, 200, 0.05, 9);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  EXPECT_LT(a.lo, 49.5);
  EXPECT_GT(a.hi, 49.5);
  expect_code(ErrorCode::kInvalidArgument, [&] { bootstrap_ci(10, mean, 1, 0.05, 1); });
}

TEST(Bootstrap, IntervalContainsPointEstimate) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    std::vector<double> s(300);
    std::vector<int> y(300);
    for (std::size_t i = 0; i < s.size(); ++i) {
      y[i] = rng.bernoulli(0.3) ? 1 : 0;
      s[i] = rng.normal(y[i] * 1.0, 1.0);
    }
    auto metric = [&](std::span<const std::size_t> idx) {
      std::vector<double> ss;
      std::vector<int> yy;
      for (auto i : idx) ss.push_back(s[i]), yy.push_back(y[i]);
      return auroc_ovr(ss, yy, 1);
    };
    const double point = auroc_ovr(s, y, 1);
    const auto ci = bootstrap_ci(s.size(), metric, 1000, 0.05, seed);
    EXPECT_LE(ci.lo, point);
    EXPECT_GE(ci.hi, point);
  }
}

TEST(Bootstrap, DegenerateResamplesExhaustRedraws) {
  auto never = [](std::span<const std::size_t>) { return false; };
  expect_code(ErrorCode::kDegenerateResampling, [&] {
    bootstrap_ci(5, [](std::span<const std::size_t>) { return 0.0; }, 10, 0.05, 1, never);
  });
}

TEST(Evaluate, ReportShapeAndJson) {
  Rng rng(7);
  const std::size_t n = 400;
  std::vector<double> proba(n * kNumClasses), lvef(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    lvef[i] = rng.uniform(15, 70);
    labels[i] = static_cast<int>(map_lvef_class(lvef[i]));
    double sum = 0;
    for (int k = 0; k < kNumClasses; ++k) {
      sum += proba[i * kNumClasses + k] = rng.uniform() + (k == labels[i] ? 0.8 : 0.0);
    }
    for (int k = 0; k < kNumClasses; ++k) proba[i * kNumClasses + k] /= sum;
  }
  const auto thresholds = select_thresholds(proba, labels);
  EvalOptions opt;
  opt.bootstrap_resamples = 100;
  const auto r = evaluate(proba, labels, lvef, thresholds, opt, "multimodal", "internal_test");
  for (const auto& c : r.classes) {
    EXPECT_GT(c.auroc.point, 0.6);
    EXPECT_GE(c.auroc.ci.lo, 0.0);
    EXPECT_LE(c.auroc.ci.hi, 1.0);
    for (double v : {c.f1.point, c.sensitivity.point, c.specificity.point}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_EQ(r.binary_auc.size(), 3u);
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_EQ(j["modality"], "multimodal");
  EXPECT_EQ(j["cohort"], "internal_test");

  const auto path = std::filesystem::temp_directory_path() / "lvef_eval_roc.csv";
  write_roc_csv(r, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "class,threshold,fpr,tpr");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace lvef::eval

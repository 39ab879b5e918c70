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
#include "lvef/explain.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>

#include "json.hpp"

namespace lvef::explain {
namespace {

using gbt::GbtModel;
using gbt::RegressionTree;
using gbt::TreeNode;

TreeNode split(int feature, double threshold, int left, int right, double cover, bool default_left = true) {
  TreeNode n;
  n.feature = feature;
  n.threshold = threshold;
  n.default_left = default_left;
  n.left = left;
  n.right = right;
  n.cover = cover;
  n.gain = 1.0;
  return n;
}

TreeNode leaf(double weight, double cover) {
  TreeNode n;
  n.weight = weight;
  n.cover = cover;
  return n;
}

GbtModel two_class_model(std::size_t n_features) {
  GbtModel m;
  m.params.n_classes = 2;
  m.base_score = {0.1, -0.2};
  for (std::size_t j = 0; j < n_features; ++j) m.feature_names.push_back("f" + std::to_string(j));
  return m;
}

double conditional(const RegressionTree& t, int node, std::span<const double> x, unsigned mask) {
  const auto& n = t.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) return n.weight;
  if (mask & (1u << n.feature)) {
    const double v = x[static_cast<std::size_t>(n.feature)];
    return conditional(t, (is_missing(v) ? n.default_left : v < n.threshold) ? n.left : n.right, x, mask);
  }
  const auto& l = t.nodes[static_cast<std::size_t>(n.left)];
  const auto& r = t.nodes[static_cast<std::size_t>(n.right)];
  return (l.cover * conditional(t, n.left, x, mask) + r.cover * conditional(t, n.right, x, mask)) /
         (l.cover + r.cover);
}

TEST(TreeShap, SingleStumpClosedForm) {
  auto m = two_class_model(3);
  RegressionTree t;
  t.class_index = 0;
  t.nodes = {split(1, 0.5, 1, 2, 10.0), leaf(-1.0, 4.0), leaf(2.0, 6.0)};
  m.trees = {t, RegressionTree{{leaf(0.0, 10.0)}, 1}};
  const double expected = (4.0 * -1.0 + 6.0 * 2.0) / 10.0;
  for (double v : {0.0, 1.0}) {
    const std::vector<double> x = {7.0, v, -3.0};
    const auto a = tree_shap(m, x, 0);
    const double fx = v < 0.5 ? -1.0 : 2.0;
    EXPECT_NEAR(a.phi[1], fx - expected, 1e-15);
    EXPECT_EQ(a.phi[0], 0.0);
    EXPECT_EQ(a.phi[2], 0.0);
    EXPECT_NEAR(a.base, 0.1 + expected, 1e-15);
  }
}

// A depth-2 tree that reuses a feature on one path, plus a second tree.
GbtModel crafted_ensemble() {
  auto m = two_class_model(4);
  RegressionTree a;
  a.class_index = 0;
  a.nodes = {split(0, 0.0, 1, 2, 20.0, false), split(2, 1.0, 3, 4, 8.0), split(0, 2.0, 5, 6, 12.0),
             leaf(0.3, 3.0),  leaf(-0.4, 5.0), leaf(0.9, 7.0), leaf(-1.1, 5.0)};
  RegressionTree b;
  b.class_index = 0;
  b.nodes = {split(3, 0.5, 1, 2, 20.0), leaf(0.25, 15.0), split(2, -1.0, 3, 4, 5.0), leaf(-0.5, 2.0), leaf(0.7, 3.0)};
  RegressionTree c;
  c.class_index = 1;
  c.nodes = {split(1, 0.0, 1, 2, 20.0), leaf(0.2, 9.0), leaf(-0.3, 11.0)};
  m.trees = {a, c, b, RegressionTree{{leaf(0.0, 20.0)}, 1}};
  return m;
}

TEST(TreeShap, MatchesCoalitionEnumeration) {
  const auto m = crafted_ensemble();
  const std::vector<std::vector<double>> rows = {
      {-1, 0, 0, 0}, {1, 1, 2, 1}, {3, -1, -2, 1}, {kMissing, 0.5, 0.5, 0}, {0.5, kMissing, kMissing, 2}};
  const int M = 4;
  const double fact[] = {1, 1, 2, 6, 24};
  for (const auto& x : rows) {
    for (int k = 0; k < 2; ++k) {
      auto value = [&](unsigned S) {
        double v = m.base_score[static_cast<std::size_t>(k)];
        for (const auto& t : m.trees) {
          if (t.class_index == k) v += conditional(t, 0, x, S);
        }
        return v;
      };
      const auto a = tree_shap(m, x, k);
      EXPECT_NEAR(a.base, value(0), 1e-12);
      for (int f = 0; f < M; ++f) {
        double phi = 0;
        for (unsigned S = 0; S < 16; ++S) {
          if (S & (1u << f)) continue;
          const int s = std::popcount(S);
          phi += fact[s] * fact[M - s - 1] / fact[M] * (value(S | (1u << f)) - value(S));
        }
        EXPECT_NEAR(a.phi[static_cast<std::size_t>(f)], phi, 1e-12) << "feature " << f << " class " << k;
      }
    }
  }
}

TEST(TreeShap, LocalAccuracyNullPlayerAndClassConsistency) {
  const auto m = crafted_ensemble();
  const std::vector<double> x = {1.5, -2, 0.3, 0.9};
  const auto margin = m.predict_margin(x);
  double total = 0, total_margin = 0;
  for (int k = 0; k < 2; ++k) {
    const auto a = tree_shap(m, x, k);
    double s = a.base;
    for (double p : a.phi) s += p;
    EXPECT_NEAR(s, margin[static_cast<std::size_t>(k)], 1e-12);
    EXPECT_NEAR(a.base, expected_margin(m, k), 1e-12);
    for (double p : a.phi) total += p;
    total_margin += margin[static_cast<std::size_t>(k)] - a.base;
  }
  EXPECT_NEAR(total, total_margin, 1e-12);
  // Feature 1 appears only in class-1 trees.
  EXPECT_EQ(tree_shap(m, x, 0).phi[1], 0.0);
  EXPECT_EQ(tree_shap(m, x, 1).phi[0], 0.0);
  try {
    tree_shap(m, std::vector<double>{1, 2}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

ShapMatrix matrix_of(std::vector<std::string> names, std::vector<double> values) {
  ShapMatrix s;
  s.feature_names = std::move(names);
  s.values = std::move(values);
  for (std::size_t i = 0; i < s.values.size() / s.feature_names.size(); ++i) s.row_ids.push_back(std::to_string(i));
  return s;
}

TEST(GlobalImportance, RankingAndTies) {
  const auto s = matrix_of({"c", "a", "b"}, {0.1, -5, 0.2, -0.1, 4, -0.2, 0.1, -6, 0.2});
  const auto imp = global_importance(s);
  EXPECT_EQ(imp[0].feature, "a");
  EXPECT_NEAR(imp[0].mean_abs, 5.0, 1e-15);
  EXPECT_EQ(imp[1].feature, "b");
  EXPECT_EQ(imp[2].feature, "c");

  const auto zero = global_importance(matrix_of({"z", "y", "x"}, std::vector<double>(6, 0.0)));
  EXPECT_EQ(zero[0].feature, "x");
  EXPECT_EQ(zero[1].feature, "y");
  EXPECT_EQ(zero[2].feature, "z");
  for (const auto& e : zero) EXPECT_EQ(e.mean_abs, 0.0);

  ShapMatrix empty;
  empty.feature_names = {"a"};
  EXPECT_THROW(global_importance(empty), Error);
}

TEST(GlobalImportance, AgreesWithDirectColumnMeans) {
  Rng rng(3);
  std::vector<std::string> names;
  for (int j = 0; j < 15; ++j) names.push_back("f" + std::to_string(j));
  std::vector<double> v(40 * 15);
  for (auto& x : v) x = rng.normal() * (1 + rng.below(5));
  const auto s = matrix_of(names, v);
  for (const auto& e : global_importance(s)) {
    const std::size_t j = static_cast<std::size_t>(std::stoi(e.feature.substr(1)));
    double sum = 0;
    for (std::size_t i = 0; i < 40; ++i) sum += std::abs(s.at(i, j));
    EXPECT_NEAR(e.mean_abs, sum / 40, 1e-12);
  }
  // Integer weights equal explicit row duplication.
  std::vector<double> w(40, 0.0);
  w[3] = 2;
  w[7] = 1;
  const auto weighted = global_importance(s, w);
  for (const auto& e : weighted) {
    const std::size_t j = static_cast<std::size_t>(std::stoi(e.feature.substr(1)));
    EXPECT_NEAR(e.mean_abs, (2 * std::abs(s.at(3, j)) + std::abs(s.at(7, j))) / 3, 1e-12);
  }
}

TEST(Stability, NoResamplingGivesUnitJaccard) {
  Rng rng(4);
  std::vector<std::string> names;
  for (int j = 0; j < 30; ++j) names.push_back("f" + std::to_string(j));
  std::vector<double> v(50 * 30);
  for (auto& x : v) x = rng.normal();
  const auto s = matrix_of(names, v);
  StabilityOptions opt;
  opt.resample = false;
  const auto r = stability_from_resamples(s, draw_resamples(50, opt), opt);
  EXPECT_EQ(r.mean_jaccard, 1.0);
  EXPECT_EQ(r.min_jaccard, 1.0);
  ASSERT_EQ(r.frequency.size(), 10u);
  for (const auto& [f, freq] : r.frequency) EXPECT_EQ(freq, 1.0);
}

TEST(Stability, CraftedResamplesAndFrequencies) {
  // Rows 0 and 1 favour disjoint feature halves.
  std::vector<std::string> names;
  for (int j = 0; j < 20; ++j) names.push_back("f" + std::to_string(j));
  std::vector<double> v(2 * 20, 0.0);
  for (int j = 0; j < 10; ++j) v[j] = 1.0 + j;
  for (int j = 10; j < 20; ++j) v[20 + j] = 1.0 + j;
  const auto s = matrix_of(names, v);
  StabilityOptions opt;
  opt.resamples = 20;
  std::vector<std::vector<std::size_t>> res(20, std::vector<std::size_t>{0, 0});
  res[19] = {1, 1};
  const auto r = stability_from_resamples(s, res, opt);
  EXPECT_EQ(r.jaccard[0][19], 0.0);
  EXPECT_EQ(r.jaccard[0][1], 1.0);
  for (const auto& [f, freq] : r.frequency) {
    const int j = std::stoi(f.substr(1));
    EXPECT_DOUBLE_EQ(freq, j < 10 ? 0.95 : 0.05) << f;
  }
  EXPECT_EQ(jaccard({"a", "b", "c"}, {"b", "c", "d"}), 0.5);
}

TEST(Stability, DeterministicUnderSeed) {
  StabilityOptions opt;
  opt.seed = 11;
  EXPECT_EQ(draw_resamples(100, opt), draw_resamples(100, opt));
  auto other = opt;
  other.seed = 12;
  EXPECT_NE(draw_resamples(100, opt), draw_resamples(100, other));
}

TEST(Dependence, ExactAndDegenerateFits) {
  const std::vector<double> x = {0, 1, 2};
  const auto d = dependence_data(x, std::vector<double>{1, 3, 5}, "f");
  EXPECT_NEAR(d.fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(d.fit.intercept, 1.0, 1e-12);
  EXPECT_NEAR(d.fit.r2, 1.0, 1e-12);

  const std::vector<double> xs = {1, 2, kMissing, 4, 5};
  const auto twice = dependence_data(xs, std::vector<double>{2, 4, 99, 8, 10});
  EXPECT_EQ(twice.excluded_missing, 1u);
  EXPECT_EQ(twice.points.size(), 4u);
  EXPECT_NEAR(twice.fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(twice.fit.intercept, 0.0, 1e-12);

  EXPECT_EQ(dependence_data(xs, std::vector<double>(5, 0.3)).fit.slope, 0.0);
  try {
    dependence_data(std::vector<double>{1, kMissing}, std::vector<double>{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFewerThanTwoPoints);
  }
}

TEST(Labels, KnownFeatureAndPassThrough) {
  const auto l = display_label("I__qr_interval_amplitude__mean");
  EXPECT_TRUE(l.mapped);
  EXPECT_EQ(l.text, "Lead I QR-interval average amplitude");
  const auto u = display_label("not_a_feature");
  EXPECT_FALSE(u.mapped);
  EXPECT_EQ(u.text, "not_a_feature");
}

TEST(Labels, MappingIsInvertibleAndSurvivesCsv) {
  const auto& map = LabelMap::builtin();
  ASSERT_FALSE(map.entries().empty());
  for (const auto& [raw, text] : map.entries()) EXPECT_EQ(map.raw_name(map.label(raw).text), raw);
  const auto path = std::filesystem::temp_directory_path() / "lvef_labels.csv";
  map.write_csv(path);
  const auto back = LabelMap::from_csv(path);
  EXPECT_EQ(back.entries(), map.entries());
  std::filesystem::remove(path);
}

TEST(Labels, ShippedTableMatchesBuiltin) {
  const auto shipped = LabelMap::from_csv(std::filesystem::path(LVEF_DATA_DIR) / "display_labels.csv");
  EXPECT_EQ(shipped.entries(), LabelMap::builtin().entries());
}

TEST(ShapCsv, RoundTrip) {
  auto s = matrix_of({"a", "b"}, {0.125, -2.5, 1e-17, 3.0});
  s.base = -1.25;
  s.class_index = 2;
  const auto path = std::filesystem::temp_directory_path() / "lvef_shap.csv";
  write_shap_csv(s, path);
  const auto back = read_shap_csv(path);
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.feature_names, s.feature_names);
  EXPECT_EQ(back.row_ids, s.row_ids);
  std::filesystem::remove(path);
  std::filesystem::remove(metadata_path(path));
}

}  // namespace
}  // namespace lvef::explain

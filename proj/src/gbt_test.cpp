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
#include "lvef/gbt.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"

namespace lvef::gbt {
namespace {

struct Toy {
  FeatureMatrix X;
  std::vector<int> y;
};

// Four Gaussian blobs in the plane, one per class.
Toy blobs(std::size_t n, double spread, std::uint64_t seed, double missing_rate = 0.0) {
  Toy t{FeatureMatrix({"a", "b"}), {}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cx[] = {0, 3, 0, 3}, cy[] = {0, 0, 3, 3};
  for (std::size_t i = 0; i < n; ++i) {
    const int k = static_cast<int>(i % 4);
    double row[2] = {cx[k] + noise(rng), cy[k] + noise(rng)};
    for (double& v : row) {
      if (u(rng) < missing_rate) v = kMissing;
    }
    t.X.add_row("r" + std::to_string(i), row);
    t.y.push_back(k);
  }
  return t;
}

void expect_code(ErrorCode code, const auto& fn) {
  try {
    fn();
    FAIL() << "no error thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(Softmax, ClosedForm) {
  const std::vector<double> m = {std::log(2.0), 0, 0, 0};
  const auto p = softmax(m);
  EXPECT_NEAR(p[0], 0.4, 1e-15);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(p[k], 0.2, 1e-15);
  const auto big = softmax(std::vector<double>{1000, 0});
  EXPECT_NEAR(big[0], 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(big[1]));
}

TEST(Mlogloss, AnalyticValues) {
  const std::vector<double> uniform(8, 0.25);
  const std::vector<int> y = {0, 3};
  EXPECT_NEAR(mlogloss(uniform, y, 4), std::log(4.0), 1e-12);
  const std::vector<double> half = {0.5, 0.5};
  EXPECT_NEAR(mlogloss(half, std::vector<int>{1}, 2), std::log(2.0), 1e-12);
  const std::vector<double> onehot = {0, 1, 0, 1, 0, 0};
  EXPECT_LE(mlogloss(onehot, std::vector<int>{1, 0}, 3), 1e-14);
  // Zero probability on the true class is clipped rather than infinite.
  EXPECT_NEAR(mlogloss(std::vector<double>{1, 0}, std::vector<int>{1}, 2), -std::log(1e-15), 1e-9);
  expect_code(ErrorCode::kDimensionMismatch, [&] { mlogloss(uniform, std::vector<int>{0}, 4); });
}

TEST(Predict, ZeroRoundModelReturnsBaseScores) {
  GbtModel m;
  m.base_score = {0.0, 0.0, 0.0, 0.0};
  m.feature_names = {"a"};
  const std::vector<double> x = {1.0};
  EXPECT_EQ(m.predict_margin(x), m.base_score);
  for (double p : m.predict_proba(x)) EXPECT_NEAR(p, 0.25, 1e-15);
  expect_code(ErrorCode::kDimensionMismatch, [&] { m.predict_margin(std::vector<double>{1, 2}); });
}

TEST(Predict, DepthOneStump) {
  GbtModel m;
  m.params.n_classes = 2;
  m.base_score = {0.5, -0.5};
  m.feature_names = {"a"};
  RegressionTree t;
  t.nodes = {{.feature = 0, .threshold = 2.0, .default_left = false, .left = 1, .right = 2},
             {.weight = -1.0},
             {.weight = 1.0}};
  m.trees = {t, RegressionTree{{TreeNode{}}, 1}};
  EXPECT_DOUBLE_EQ(m.predict_margin(std::vector<double>{1.0})[0], -0.5);
  EXPECT_DOUBLE_EQ(m.predict_margin(std::vector<double>{2.0})[0], 1.5);
  EXPECT_DOUBLE_EQ(m.predict_margin(std::vector<double>{kMissing})[0], 1.5);
  EXPECT_DOUBLE_EQ(m.predict_margin(std::vector<double>{1.0})[1], -0.5);
}

TEST(Train, LossNonincreasingAndProbabilitiesNormalized) {
  const auto t = blobs(200, 0.6, 1);
  GbtParams p;
  p.n_rounds = 50;
  const auto m = train(t.X, t.y, p);
  ASSERT_EQ(m.completed_rounds(), 50);
  ASSERT_EQ(m.history.size(), 50u);
  for (std::size_t r = 1; r < m.history.size(); ++r) {
    EXPECT_LE(m.history[r].train_mlogloss, m.history[r - 1].train_mlogloss + 1e-12) << r;
  }
  const auto proba = m.predict_proba(t.X);
  for (std::size_t i = 0; i < t.X.rows(); ++i) {
    double s = 0;
    for (int k = 0; k < 4; ++k) {
      EXPECT_GT(proba[i * 4 + k], 0.0);
      s += proba[i * 4 + k];
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
    const auto direct = softmax(m.predict_margin(t.X.row(i)));
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(direct[k], proba[i * 4 + k]);
  }
}

TEST(Train, MarginsDriftTowardTrueClass) {
  const auto t = blobs(200, 0.6, 2);
  GbtParams p;
  p.n_rounds = 5;
  const auto early = train(t.X, t.y, p);
  p.n_rounds = 40;
  const auto late = train(t.X, t.y, p);
  double early_sum = 0, late_sum = 0;
  for (std::size_t i = 0; i < t.X.rows(); ++i) {
    early_sum += early.predict_proba(t.X.row(i))[t.y[i]];
    late_sum += late.predict_proba(t.X.row(i))[t.y[i]];
  }
  EXPECT_GT(late_sum, early_sum);
}

TEST(Train, StructuralInvariants) {
  const auto t = blobs(400, 1.2, 3, 0.1);
  GbtParams p;
  p.n_rounds = 20;
  const auto m = train(t.X, t.y, p);
  ASSERT_EQ(m.trees.size(), static_cast<std::size_t>(m.completed_rounds() * 4));
  for (std::size_t ti = 0; ti < m.trees.size(); ++ti) {
    const auto& tree = m.trees[ti];
    EXPECT_EQ(tree.class_index, static_cast<int>(ti % 4));
    EXPECT_LE(tree.depth(), p.max_depth);
    for (const auto& n : tree.nodes) {
      if (n.is_leaf()) {
        EXPECT_GE(n.cover, p.min_child_weight);
        continue;
      }
      ASSERT_GE(n.right, 0);
      EXPECT_LT(n.feature, 2);
      EXPECT_GT(n.gain, 0.0);
      EXPECT_NEAR(n.cover, tree.nodes[n.left].cover + tree.nodes[n.right].cover, 1e-9 * n.cover);
    }
  }
}

TEST(Train, BaseScoreIsLogPrior) {
  auto t = blobs(100, 0.5, 4);
  t.y[0] = 1;  // 24 / 26 / 25 / 25
  GbtParams p;
  p.n_rounds = 1;
  const auto m = train(t.X, t.y, p);
  EXPECT_NEAR(m.base_score[0], std::log(0.24), 1e-12);
  EXPECT_NEAR(m.base_score[1], std::log(0.26), 1e-12);
}

TEST(Train, RootSplitMatchesBruteForce) {
  // One round, depth one: the root split must be the exhaustive argmax of the
  // gain over all features and midpoint thresholds.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  FeatureMatrix X({"f0", "f1", "f2"});
  std::vector<int> y;
  for (int i = 0; i < 150; ++i) {
    const double row[3] = {std::round(z(rng) * 4) / 4, z(rng), z(rng)};
    X.add_row(std::to_string(i), row);
    y.push_back((row[0] + 0.5 * row[1] + z(rng) > 0) ? 1 : 0);
  }
  GbtParams p;
  p.n_classes = 2;
  p.n_rounds = 1;
  p.max_depth = 1;
  p.learning_rate = 1.0;
  const auto m = train(X, y, p);
  const auto& root = m.trees[0].nodes[0];
  ASSERT_FALSE(root.is_leaf());

  const double prior1 = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  const double p0 = 1.0 - prior1;
  std::vector<double> g(y.size()), h(y.size(), p0 * (1 - p0));
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = p0 - (y[i] == 0 ? 1.0 : 0.0);
  auto score = [&](double G, double H) { return G * G / (H + p.l2_lambda); };
  double best = 0, best_thr = 0;
  int best_f = -1;
  for (int f = 0; f < 3; ++f) {
    auto col = X.column(f);
    std::vector<double> u = col;
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    for (std::size_t j = 1; j < u.size(); ++j) {
      const double thr = u[j - 1] + (u[j] - u[j - 1]) / 2;
      double GL = 0, HL = 0, GR = 0, HR = 0;
      for (std::size_t i = 0; i < col.size(); ++i) {
        (col[i] < thr ? GL : GR) += g[i];
        (col[i] < thr ? HL : HR) += h[i];
      }
      if (HL < p.min_child_weight || HR < p.min_child_weight) continue;
      const double gain = 0.5 * (score(GL, HL) + score(GR, HR) - score(GL + GR, HL + HR));
      if (gain > best + 1e-12) best = gain, best_f = f, best_thr = thr;
    }
  }
  EXPECT_EQ(root.feature, best_f);
  EXPECT_DOUBLE_EQ(root.threshold, best_thr);
  EXPECT_NEAR(root.gain, best, 1e-9);
  const auto& left = m.trees[0].nodes[root.left];
  double GL = 0, HL = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (X.at(i, best_f) < best_thr) GL += g[i], HL += h[i];
  }
  EXPECT_NEAR(left.weight, -GL / (HL + p.l2_lambda), 1e-12);
  EXPECT_NEAR(left.cover, HL, 1e-9);
}

TEST(Train, MissingValuesFollowLearnedDirection) {
  // Missing entries belong to class 1 rows only; the learned default must
  // route them with the class-1 side.
  FeatureMatrix X({"a"});
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    const int k = i % 2;
    double v = k == 0 ? 1.0 + i * 0.001 : 5.0 + i * 0.001;
    if (k == 1 && i % 3 == 0) v = kMissing;
    X.add_row(std::to_string(i), std::span<const double>(&v, 1));
    y.push_back(k);
  }
  GbtParams p;
  p.n_classes = 2;
  p.n_rounds = 10;
  const auto m = train(X, y, p);
  const auto pm = m.predict_proba(std::vector<double>{kMissing});
  EXPECT_GT(pm[1], 0.8);
}

TEST(Train, OverfitsNoiselessRows) {
  const auto t = blobs(50, 0.0001, 6);
  GbtParams p;
  p.min_child_weight = 0.0;
  p.n_rounds = 100;
  p.learning_rate = 0.3;
  const auto m = train(t.X, t.y, p);
  for (std::size_t i = 0; i < t.X.rows(); ++i) {
    const auto pr = m.predict_proba(t.X.row(i));
    EXPECT_EQ(std::max_element(pr.begin(), pr.end()) - pr.begin(), t.y[i]);
  }
}

TEST(Train, DeterministicForFixedInput) {
  const auto t = blobs(300, 1.0, 7, 0.05);
  GbtParams p;
  p.n_rounds = 15;
  EXPECT_EQ(to_json(train(t.X, t.y, p)), to_json(train(t.X, t.y, p)));
}

TEST(Train, EarlyStoppingOnValidation) {
  const auto t = blobs(400, 2.5, 8);
  const auto v = blobs(200, 2.5, 9);
  GbtParams p;
  p.n_rounds = 300;
  p.early_stopping_rounds = 5;
  p.min_child_weight = 0.5;
  const auto m = train(t.X, t.y, p, &v.X, v.y);
  EXPECT_LT(m.completed_rounds(), 300);
  for (const auto& r : m.history) EXPECT_FALSE(is_missing(r.val_mlogloss));
}

TEST(Train, InputErrors) {
  const auto t = blobs(40, 0.5, 10);
  GbtParams p;
  std::vector<int> single(40, 2);
  expect_code(ErrorCode::kSingleClass, [&] { train(t.X, single, p); });
  expect_code(ErrorCode::kEmptyMatrix, [&] { train(FeatureMatrix({"a"}), std::vector<int>{}, p); });
  FeatureMatrix bad({"a"});
  for (int i = 0; i < 4; ++i) {
    const double v = i == 2 ? std::numeric_limits<double>::infinity() : i;
    bad.add_row(std::to_string(i), std::span<const double>(&v, 1));
  }
  expect_code(ErrorCode::kNonFiniteFeature, [&] { train(bad, std::vector<int>{0, 1, 0, 1}, p); });
  GbtParams q;
  q.learning_rate = 0.0;
  expect_code(ErrorCode::kInvalidArgument, [&] { q.validate(); });
  q = {};
  q.max_depth = 0;
  expect_code(ErrorCode::kInvalidArgument, [&] { q.validate(); });
}

TEST(Serialization, RoundTripIsBitExact) {
  const auto t = blobs(300, 1.0, 11, 0.05);
  GbtParams p;
  p.n_rounds = 10;
  const auto m = train(t.X, t.y, p);
  const auto path = std::filesystem::temp_directory_path() / "lvef_gbt_roundtrip.json";
  save_model(m, path);
  const auto back = load_model(path);
  // Node numbering may change (nested JSON is read depth-first); the
  // serialized form must not.
  EXPECT_EQ(to_json(back), to_json(m));
  EXPECT_EQ(back.params, m.params);
  ASSERT_EQ(back.history.size(), m.history.size());
  for (std::size_t r = 0; r < m.history.size(); ++r) {
    EXPECT_EQ(back.history[r].train_mlogloss, m.history[r].train_mlogloss);
  }
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z(1.5, 2.0);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x = {z(rng), i % 7 == 0 ? kMissing : z(rng)};
    EXPECT_EQ(back.predict_margin(x), m.predict_margin(x));
  }

  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  expect_code(ErrorCode::kCorruptModel, [&] { from_json(text.substr(0, text.size() / 2)); });
  auto j = nlohmann::json::parse(text);
  j["version"] = 99;
  expect_code(ErrorCode::kCorruptModel, [&] { from_json(j.dump()); });
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace lvef::gbt

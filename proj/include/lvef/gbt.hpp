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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvef/common.hpp"
#include "lvef/feature_matrix.hpp"

namespace lvef::gbt {

inline constexpr int kModelFormatVersion = 1;

struct GbtParams {
  double learning_rate = 0.08;
  int max_depth = 7;
  double min_child_weight = 5.0;  // hessian-sum units
  int n_rounds = 200;
  double l2_lambda = 1.0;
  int n_classes = 4;
  std::optional<int> early_stopping_rounds = 20;  // only used with a validation set
  std::uint64_t seed = 0;
  std::vector<double> class_weights;  // empty = unweighted; else one per class

  // Throws InvalidArgument.
  void validate() const;
  bool operator==(const GbtParams&) const = default;
};

struct TreeNode {
  // Internal nodes: x[feature] < threshold goes left; missing follows
  // default_left. Leaves have left == right == -1.
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaf margin increment (learning rate applied)
  double cover = 0.0;   // training hessian sum
  double gain = 0.0;    // split gain (internal nodes)

  bool is_leaf() const { return left < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int class_index = 0;

  int leaf_for(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes[leaf_for(x)].weight; }
  int depth() const;
  bool operator==(const RegressionTree&) const = default;
};

struct RoundRecord {
  int round = 0;
  double train_mlogloss = 0.0;
  double val_mlogloss = kMissing;
};

class GbtModel {
 public:
  GbtParams params;
  std::vector<double> base_score;  // per class
  std::vector<RegressionTree> trees;  // round-major: trees[r * K + k]
  std::vector<std::string> feature_names;
  std::vector<RoundRecord> history;

  int n_classes() const { return static_cast<int>(base_score.size()); }
  int completed_rounds() const {
    return n_classes() == 0 ? 0 : static_cast<int>(trees.size()) / n_classes();
  }

  // Throws DimensionMismatch.
  std::vector<double> predict_margin(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  // Row-major N x K.
  std::vector<double> predict_margin(const FeatureMatrix& X) const;
  std::vector<double> predict_proba(const FeatureMatrix& X) const;
};

std::vector<double> softmax(std::span<const double> margins);

// -(1/N) sum ln(clip(p[i, y_i], 1e-15, 1)); `proba` is row-major N x K.
double mlogloss(std::span<const double> proba, std::span<const int> labels, int n_classes);

// Exact greedy second-order boosting with the softmax objective. Per round
// and class: g = p_k - 1[y = k], h = p_k (1 - p_k) (times the class weight);
// every split must leave both children with hessian sum >= min_child_weight
// and positive gain; missing values go to the gain-optimal side. Ties are
// resolved toward the lowest feature index, then the lowest threshold.
GbtModel train(const FeatureMatrix& X, std::span<const int> y, const GbtParams& params,
               const FeatureMatrix* val_X = nullptr, std::span<const int> val_y = {});

// Versioned JSON with nested node objects. load(save(m)) predicts
// bit-identically. Throws CorruptModel on schema or version mismatch.
std::string to_json(const GbtModel& model);
GbtModel from_json(std::string_view text);
void save_model(const GbtModel& model, const std::filesystem::path& path);
GbtModel load_model(const std::filesystem::path& path);

}  // namespace lvef::gbt

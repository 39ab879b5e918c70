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

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace lvef::gbt {

void GbtParams::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "learning_rate must be in (0, 1]");
  }
  if (max_depth < 1) fail(ErrorCode::kInvalidArgument, "max_depth must be >= 1");
  if (!(min_child_weight >= 0.0)) fail(ErrorCode::kInvalidArgument, "min_child_weight must be >= 0");
  if (n_rounds < 0) fail(ErrorCode::kInvalidArgument, "n_rounds must be >= 0");
  if (!(l2_lambda >= 0.0)) fail(ErrorCode::kInvalidArgument, "l2_lambda must be >= 0");
  if (n_classes < 2) fail(ErrorCode::kInvalidArgument, "n_classes must be >= 2");
  if (early_stopping_rounds && *early_stopping_rounds < 1) {
    fail(ErrorCode::kInvalidArgument, "early_stopping_rounds must be >= 1");
  }
  if (!class_weights.empty()) {
    if (class_weights.size() != static_cast<std::size_t>(n_classes)) {
      fail(ErrorCode::kInvalidArgument, "class_weights needs one entry per class");
    }
    for (double w : class_weights) {
      if (!(w > 0.0)) fail(ErrorCode::kInvalidArgument, "class weights must be positive");
    }
  }
}

int RegressionTree::leaf_for(std::span<const double> x) const {
  int id = 0;
  while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    const double v = x[static_cast<std::size_t>(n.feature)];
    const bool go_left = is_missing(v) ? n.default_left : v < n.threshold;
    id = go_left ? n.left : n.right;
  }
  return id;
}

int RegressionTree::depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) continue;
    depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
    best = std::max(best, depth[i] + 1);
  }
  return best;
}

std::vector<double> softmax(std::span<const double> margins) {
  std::vector<double> p(margins.size());
  if (margins.empty()) return p;
  const double m = *std::max_element(margins.begin(), margins.end());
  double z = 0.0;
  for (std::size_t k = 0; k < margins.size(); ++k) {
    p[k] = std::exp(margins[k] - m);
    z += p[k];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> GbtModel::predict_margin(std::span<const double> x) const {
  if (x.size() != feature_names.size()) {
    fail(ErrorCode::kDimensionMismatch, "row has " + std::to_string(x.size()) +
                                            " features, model expects " +
                                            std::to_string(feature_names.size()));
  }
  std::vector<double> margin = base_score;
  for (const auto& t : trees) margin[static_cast<std::size_t>(t.class_index)] += t.predict(x);
  return margin;
}

std::vector<double> GbtModel::predict_proba(std::span<const double> x) const {
  return softmax(predict_margin(x));
}

std::vector<double> GbtModel::predict_margin(const FeatureMatrix& X) const {
  const auto K = static_cast<std::size_t>(n_classes());
  std::vector<double> out(X.rows() * K);
  parallel_for(X.rows(), [&](std::size_t i) {
    const auto m = predict_margin(X.row(i));
    std::copy(m.begin(), m.end(), out.begin() + static_cast<std::ptrdiff_t>(i * K));
  });
  return out;
}

std::vector<double> GbtModel::predict_proba(const FeatureMatrix& X) const {
  const auto K = static_cast<std::size_t>(n_classes());
  auto m = predict_margin(X);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const auto p = softmax(std::span<const double>(m.data() + i * K, K));
    std::copy(p.begin(), p.end(), m.begin() + static_cast<std::ptrdiff_t>(i * K));
  }
  return m;
}

double mlogloss(std::span<const double> proba, std::span<const int> labels, int n_classes) {
  const auto K = static_cast<std::size_t>(n_classes);
  if (K == 0 || proba.size() != labels.size() * K) {
    fail(ErrorCode::kDimensionMismatch, "mlogloss: probability matrix does not match labels");
  }
  if (labels.empty()) return kMissing;
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = proba[i * K + static_cast<std::size_t>(labels[i])];
    s -= std::log(std::clamp(p, 1e-15, 1.0));
  }
  return s / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------

namespace {

// Non-missing entry of a presorted column: the row and the rank of its value
// among the column's distinct values.
struct RankedRow {
  std::uint32_t row;
  std::uint32_t rank;
};

// Column-major presorted view of the training matrix, kept compact because
// the split scan is bound by memory traffic.
struct SortedColumns {
  std::vector<std::vector<RankedRow>> entries;  // ascending value
  std::vector<std::vector<double>> distinct;    // distinct values, ascending
  std::vector<std::vector<std::uint32_t>> missing;
};

SortedColumns presort(const FeatureMatrix& X) {
  const std::size_t n = X.rows(), f = X.cols();
  SortedColumns s;
  s.entries.resize(f);
  s.distinct.resize(f);
  s.missing.resize(f);
  parallel_for(f, [&](std::size_t j) {
    std::vector<std::pair<double, std::uint32_t>> col;
    col.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = X.at(i, j);
      if (is_missing(v)) {
        s.missing[j].push_back(static_cast<std::uint32_t>(i));
      } else {
        col.emplace_back(v, static_cast<std::uint32_t>(i));
      }
    }
    std::sort(col.begin(), col.end());
    s.entries[j].reserve(col.size());
    for (const auto& [v, i] : col) {
      if (s.distinct[j].empty() || v > s.distinct[j].back()) s.distinct[j].push_back(v);
      s.entries[j].push_back({i, static_cast<std::uint32_t>(s.distinct[j].size() - 1)});
    }
  });
  return s;
}

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  double left_g = 0.0, left_h = 0.0;

  bool valid() const { return feature >= 0; }
};

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
};

double split_score(double g, double h, double lambda) { return g * g / (h + lambda); }

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m > a ? m : b;
}

struct GradPair {
  double g;
  double h;
};

// One feature's non-missing rows in ascending value order, grouped by
// frontier node: rows of slot s occupy [offsets[s], offsets[s + 1]). The
// arrays keep the full column length; entries past offsets.back() are stale.
struct NodeGroupedColumn {
  std::vector<RankedRow> entries;
  std::vector<std::size_t> offsets;
};

class TreeGrower {
 public:
  TreeGrower(const FeatureMatrix& X, const SortedColumns& sorted, const GbtParams& params)
      : X_(X), sorted_(sorted), params_(params) {}

  // Fills `positions` with the final leaf id of every row.
  RegressionTree grow(const std::vector<double>& grad, const std::vector<double>& hess,
                      int class_index, std::vector<int>& positions) {
    const std::size_t n = grad.size();
    const std::size_t F = X_.cols();
    RegressionTree tree;
    tree.class_index = class_index;
    std::vector<NodeStats> stats(1);
    std::vector<GradPair> gh(n);
    for (std::size_t i = 0; i < n; ++i) {
      gh[i] = {grad[i], hess[i]};
      stats[0].g += grad[i];
      stats[0].h += hess[i];
    }
    tree.nodes.emplace_back();
    positions.assign(n, 0);

    // Nodes too light to give two children of min_child_weight stay leaves.
    auto drop_light = [&](std::vector<int>& ids) {
      std::erase_if(ids, [&](int id) {
        return stats[static_cast<std::size_t>(id)].h < 2.0 * params_.min_child_weight;
      });
    };
    std::vector<int> frontier = {0};
    drop_light(frontier);
    std::vector<int> row_slot(n, frontier.empty() ? -1 : 0);
    if (columns_.empty()) {
      columns_.resize(F);
      spare_.resize(F);
      for (std::size_t f = 0; f < F; ++f) {
        columns_[f].entries.resize(sorted_.entries[f].size());
        spare_[f].entries.resize(sorted_.entries[f].size());
      }
    }
    if (!frontier.empty()) {
      for (std::size_t f = 0; f < F; ++f) {
        auto& c = columns_[f];
        std::copy(sorted_.entries[f].begin(), sorted_.entries[f].end(), c.entries.begin());
        c.offsets = {0, c.entries.size()};
      }
    }

    for (int depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
      std::vector<std::vector<SplitCandidate>> per_feature(F);
      parallel_for(F, [&](std::size_t f) {
        per_feature[f] = best_splits_for_feature(f, frontier, stats, gh, row_slot, columns_[f]);
      });

      std::vector<int> next;
      std::vector<SplitCandidate> chosen(frontier.size());
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        for (std::size_t f = 0; f < F; ++f) {
          const auto& c = per_feature[f][s];
          if (c.valid() && c.gain > chosen[s].gain) chosen[s] = c;
        }
      }
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        const auto& c = chosen[s];
        if (!c.valid()) continue;
        const int id = frontier[s];
        const NodeStats parent = stats[static_cast<std::size_t>(id)];
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.push_back({c.left_g, c.left_h});
        stats.push_back({parent.g - c.left_g, parent.h - c.left_h});
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = c.feature;
        node.threshold = c.threshold;
        node.default_left = c.default_left;
        node.gain = c.gain;
        node.left = left;
        node.right = left + 1;
        next.push_back(left);
        next.push_back(left + 1);
      }
      if (next.empty()) break;
      for (std::size_t i = 0; i < n; ++i) {
        if (row_slot[i] < 0) continue;
        const auto& node = tree.nodes[static_cast<std::size_t>(positions[i])];
        if (node.is_leaf()) continue;
        const double v = X_.at(i, static_cast<std::size_t>(node.feature));
        const bool go_left = is_missing(v) ? node.default_left : v < node.threshold;
        positions[i] = go_left ? node.left : node.right;
      }
      drop_light(next);
      frontier = std::move(next);
      if (frontier.empty() || depth + 1 >= params_.max_depth) break;

      std::vector<int> slot_of(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
      }
      std::vector<std::size_t> slot_rows(frontier.size(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (row_slot[i] < 0) continue;
        row_slot[i] = slot_of[static_cast<std::size_t>(positions[i])];
        if (row_slot[i] >= 0) ++slot_rows[static_cast<std::size_t>(row_slot[i])];
      }
      parallel_for(F, [&](std::size_t f) { regroup(f, row_slot, slot_rows); });
    }

    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      auto& node = tree.nodes[id];
      node.cover = stats[id].h;
      if (node.is_leaf()) {
        node.weight = -stats[id].g / (stats[id].h + params_.l2_lambda) * params_.learning_rate;
      }
    }
    return tree;
  }

 private:
  // Stable counting sort by new slot; rows without a slot are dropped. Each
  // new slot's rows come from a single parent group, so value order holds.
  void regroup(std::size_t f, const std::vector<int>& row_slot, const std::vector<std::size_t>& slot_rows) {
    const std::size_t slots = slot_rows.size();
    std::vector<std::size_t> offsets(slots + 1, 0);
    for (std::size_t s = 0; s < slots; ++s) offsets[s + 1] = slot_rows[s];
    for (std::uint32_t i : sorted_.missing[f]) {
      if (row_slot[i] >= 0) --offsets[static_cast<std::size_t>(row_slot[i]) + 1];
    }
    for (std::size_t s = 0; s < slots; ++s) offsets[s + 1] += offsets[s];
    NodeGroupedColumn& from = columns_[f];
    NodeGroupedColumn& to = spare_[f];
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    const std::size_t used = from.offsets.back();
    for (std::size_t r = 0; r < used; ++r) {
      const int s = row_slot[from.entries[r].row];
      if (s < 0) continue;
      to.entries[cursor[static_cast<std::size_t>(s)]++] = from.entries[r];
    }
    to.offsets = std::move(offsets);
    std::swap(from, to);
  }

  std::vector<SplitCandidate> best_splits_for_feature(std::size_t f, const std::vector<int>& frontier,
                                                      const std::vector<NodeStats>& stats,
                                                      const std::vector<GradPair>& gh,
                                                      const std::vector<int>& row_slot,
                                                      const NodeGroupedColumn& col) const {
    const std::size_t slots = frontier.size();
    const double lambda = params_.l2_lambda;
    const double mcw = params_.min_child_weight;
    std::vector<SplitCandidate> best(slots);
    std::vector<NodeStats> miss(slots);
    std::vector<char> has_missing(slots, 0);
    for (std::uint32_t i : sorted_.missing[f]) {
      const int s = row_slot[i];
      if (s < 0) continue;
      miss[static_cast<std::size_t>(s)].g += gh[i].g;
      miss[static_cast<std::size_t>(s)].h += gh[i].h;
      has_missing[static_cast<std::size_t>(s)] = 1;
    }

    for (std::size_t s = 0; s < slots; ++s) {
      const NodeStats& total = stats[static_cast<std::size_t>(frontier[s])];
      const double parent_score = split_score(total.g, total.h, lambda);
      const NodeStats m = miss[s];
      SplitCandidate& b = best[s];
      NodeStats acc;
      auto evaluate = [&](double threshold) {
        if (acc.h + m.h < mcw || total.h - acc.h < mcw) return;
        for (bool missing_left : {true, false}) {
          const double lg = acc.g + (missing_left ? m.g : 0.0);
          const double lh = acc.h + (missing_left ? m.h : 0.0);
          const double rg = total.g - lg;
          const double rh = total.h - lh;
          if (lh < mcw || rh < mcw) continue;
          const double gain = 0.5 * (split_score(lg, lh, lambda) + split_score(rg, rh, lambda) - parent_score);
          if (gain > b.gain) b = {gain, static_cast<int>(f), threshold, missing_left, lg, lh};
        }
      };
      const auto& distinct = sorted_.distinct[f];
      const auto threshold = [&](std::size_t r) {
        return midpoint(distinct[col.entries[r - 1].rank], distinct[col.entries[r].rank]);
      };
      const std::size_t begin = col.offsets[s], end = col.offsets[s + 1];
      if (has_missing[s]) {
        for (std::size_t r = begin; r < end; ++r) {
          if (r > begin && col.entries[r].rank > col.entries[r - 1].rank) evaluate(threshold(r));
          const GradPair& p = gh[col.entries[r].row];
          acc.g += p.g;
          acc.h += p.h;
        }
        continue;
      }
      // No missing rows: a single direction, and the hessian prefix only
      // grows, so the scan ends once the right child gets too light.
      for (std::size_t r = begin; r < end; ++r) {
        if (r > begin && col.entries[r].rank > col.entries[r - 1].rank && acc.h >= mcw) {
          const double rh = total.h - acc.h;
          if (rh < mcw) break;
          const double rg = total.g - acc.g;
          const double gain =
              0.5 * (split_score(acc.g, acc.h, lambda) + split_score(rg, rh, lambda) - parent_score);
          if (gain > b.gain) b = {gain, static_cast<int>(f), threshold(r), true, acc.g, acc.h};
        }
        const GradPair& p = gh[col.entries[r].row];
        acc.g += p.g;
        acc.h += p.h;
      }
    }
    return best;
  }

  const FeatureMatrix& X_;
  const SortedColumns& sorted_;
  const GbtParams& params_;
  std::vector<NodeGroupedColumn> columns_, spare_;
};

void check_inputs(const FeatureMatrix& X, std::span<const int> y, int n_classes) {
  if (X.rows() == 0) fail(ErrorCode::kEmptyMatrix, "training matrix has no rows");
  if (y.size() != X.rows()) fail(ErrorCode::kDimensionMismatch, "labels and rows differ in count");
  for (int label : y) {
    if (label < 0 || label >= n_classes) {
      fail(ErrorCode::kInvalidArgument, "label " + std::to_string(label) + " out of range");
    }
  }
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (double v : X.row(i)) {
      if (!is_missing(v) && !std::isfinite(v)) {
        fail(ErrorCode::kNonFiniteFeature, "non-finite value in row " + X.row_ids()[i]);
      }
    }
  }
}

}  // namespace

GbtModel train(const FeatureMatrix& X, std::span<const int> y, const GbtParams& params,
               const FeatureMatrix* val_X, std::span<const int> val_y) {
  params.validate();
  const int K = params.n_classes;
  check_inputs(X, y, K);
  std::vector<std::size_t> counts(static_cast<std::size_t>(K), 0);
  for (int label : y) ++counts[static_cast<std::size_t>(label)];
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    fail(ErrorCode::kSingleClass, "training labels contain a single class");
  }
  if (val_X != nullptr) {
    if (val_X->cols() != X.cols()) fail(ErrorCode::kDimensionMismatch, "validation column count differs");
    check_inputs(*val_X, val_y, K);
  }

  const std::size_t n = X.rows();
  const auto Kz = static_cast<std::size_t>(K);
  GbtModel model;
  model.params = params;
  model.feature_names = X.column_names();
  model.base_score.resize(Kz);
  for (std::size_t k = 0; k < Kz; ++k) {
    // Classes absent from training get half an example of prior mass.
    const double c = counts[k] > 0 ? static_cast<double>(counts[k]) : 0.5;
    model.base_score[k] = std::log(c / static_cast<double>(n));
  }

  std::vector<double> margins(n * Kz);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(model.base_score.begin(), model.base_score.end(), margins.begin() + static_cast<std::ptrdiff_t>(i * Kz));
  }
  std::vector<double> val_margins;
  if (val_X != nullptr) val_margins = model.predict_margin(*val_X);

  const auto sorted = presort(X);
  TreeGrower grower(X, sorted, params);
  std::vector<double> grad(n), hess(n), proba(n * Kz);
  std::vector<int> positions;

  auto proba_of = [Kz](const std::vector<double>& m) {
    std::vector<double> p(m.size());
    for (std::size_t i = 0; i < m.size() / Kz; ++i) {
      const auto s = softmax(std::span<const double>(m.data() + i * Kz, Kz));
      std::copy(s.begin(), s.end(), p.begin() + static_cast<std::ptrdiff_t>(i * Kz));
    }
    return p;
  };

  const bool early = val_X != nullptr && params.early_stopping_rounds.has_value();
  double best_val = std::numeric_limits<double>::infinity();
  int best_round = -1;

  for (int round = 0; round < params.n_rounds; ++round) {
    proba = proba_of(margins);
    std::vector<RegressionTree> round_trees;
    std::vector<std::vector<int>> round_positions;
    for (std::size_t k = 0; k < Kz; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = proba[i * Kz + k];
        const double row_w = params.class_weights.empty()
                                 ? 1.0
                                 : params.class_weights[static_cast<std::size_t>(y[i])];
        grad[i] = row_w * (p - (y[i] == static_cast<int>(k) ? 1.0 : 0.0));
        hess[i] = row_w * std::max(p * (1.0 - p), 1e-16);
      }
      round_trees.push_back(grower.grow(grad, hess, static_cast<int>(k), positions));
      round_positions.push_back(positions);
    }
    for (std::size_t k = 0; k < Kz; ++k) {
      const auto& tree = round_trees[k];
      for (std::size_t i = 0; i < n; ++i) {
        margins[i * Kz + k] += tree.nodes[static_cast<std::size_t>(round_positions[k][i])].weight;
      }
    }
    RoundRecord rec;
    rec.round = round;
    rec.train_mlogloss = mlogloss(proba_of(margins), y, K);
    if (val_X != nullptr) {
      for (std::size_t i = 0; i < val_X->rows(); ++i) {
        const auto row = val_X->row(i);
        for (const auto& tree : round_trees) {
          val_margins[i * Kz + static_cast<std::size_t>(tree.class_index)] += tree.predict(row);
        }
      }
      rec.val_mlogloss = mlogloss(proba_of(val_margins), val_y, K);
    }
    for (auto& t : round_trees) model.trees.push_back(std::move(t));
    model.history.push_back(rec);

    if (early) {
      if (rec.val_mlogloss < best_val) {
        best_val = rec.val_mlogloss;
        best_round = round;
      } else if (round - best_round >= *params.early_stopping_rounds) {
        break;
      }
    }
  }
  if (early && best_round >= 0) {
    model.trees.resize(static_cast<std::size_t>(best_round + 1) * Kz);
    model.history.resize(static_cast<std::size_t>(best_round + 1));
  }
  return model;
}

// ---------------------------------------------------------------------------

namespace {

using ojson = nlohmann::ordered_json;

ojson node_to_json(const RegressionTree& tree, int id) {
  const auto& n = tree.nodes[static_cast<std::size_t>(id)];
  ojson j;
  if (n.is_leaf()) {
    j["leaf"] = n.weight;
    j["cover"] = n.cover;
    return j;
  }
  j["feature"] = n.feature;
  j["threshold"] = n.threshold;
  j["default_left"] = n.default_left;
  j["gain"] = n.gain;
  j["cover"] = n.cover;
  j["left"] = node_to_json(tree, n.left);
  j["right"] = node_to_json(tree, n.right);
  return j;
}

int node_from_json(const nlohmann::json& j, RegressionTree& tree, std::size_t n_features, int depth) {
  if (depth > 64) fail(ErrorCode::kCorruptModel, "tree too deep");
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  TreeNode node;
  node.cover = j.at("cover").get<double>();
  if (j.contains("leaf")) {
    node.weight = j.at("leaf").get<double>();
    tree.nodes[static_cast<std::size_t>(id)] = node;
    return id;
  }
  node.feature = j.at("feature").get<int>();
  if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features) {
    fail(ErrorCode::kCorruptModel, "split feature index out of range");
  }
  node.threshold = j.at("threshold").get<double>();
  node.default_left = j.at("default_left").get<bool>();
  node.gain = j.at("gain").get<double>();
  node.left = node_from_json(j.at("left"), tree, n_features, depth + 1);
  node.right = node_from_json(j.at("right"), tree, n_features, depth + 1);
  tree.nodes[static_cast<std::size_t>(id)] = node;
  return id;
}

}  // namespace

std::string to_json(const GbtModel& model) {
  ojson j;
  j["format"] = "lvef-gbt-model";
  j["version"] = kModelFormatVersion;
  const auto& p = model.params;
  j["params"] = {{"learning_rate", p.learning_rate},
                 {"max_depth", p.max_depth},
                 {"min_child_weight", p.min_child_weight},
                 {"n_rounds", p.n_rounds},
                 {"l2_lambda", p.l2_lambda},
                 {"n_classes", p.n_classes},
                 {"early_stopping_rounds",
                  p.early_stopping_rounds ? ojson(*p.early_stopping_rounds) : ojson(nullptr)},
                 {"seed", p.seed},
                 {"class_weights", p.class_weights}};
  j["base_score"] = model.base_score;
  j["feature_names"] = model.feature_names;
  auto& hist = j["history"] = ojson::array();
  for (const auto& r : model.history) {
    hist.push_back({{"round", r.round},
                    {"train_mlogloss", r.train_mlogloss},
                    {"val_mlogloss", is_missing(r.val_mlogloss) ? ojson(nullptr) : ojson(r.val_mlogloss)}});
  }
  auto& trees = j["trees"] = ojson::array();
  const int K = std::max(1, model.n_classes());
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    trees.push_back({{"round", static_cast<int>(t) / K},
                     {"class", model.trees[t].class_index},
                     {"root", node_to_json(model.trees[t], 0)}});
  }
  return j.dump(1);
}

GbtModel from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "lvef-gbt-model") {
      fail(ErrorCode::kCorruptModel, "not an lvef model file");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      fail(ErrorCode::kCorruptModel, "unsupported model version " + j.at("version").dump());
    }
    GbtModel m;
    const auto& p = j.at("params");
    m.params.learning_rate = p.at("learning_rate").get<double>();
    m.params.max_depth = p.at("max_depth").get<int>();
    m.params.min_child_weight = p.at("min_child_weight").get<double>();
    m.params.n_rounds = p.at("n_rounds").get<int>();
    m.params.l2_lambda = p.at("l2_lambda").get<double>();
    m.params.n_classes = p.at("n_classes").get<int>();
    if (p.at("early_stopping_rounds").is_null()) {
      m.params.early_stopping_rounds.reset();
    } else {
      m.params.early_stopping_rounds = p.at("early_stopping_rounds").get<int>();
    }
    m.params.seed = p.at("seed").get<std::uint64_t>();
    m.params.class_weights = p.at("class_weights").get<std::vector<double>>();
    m.base_score = j.at("base_score").get<std::vector<double>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (m.base_score.size() != static_cast<std::size_t>(m.params.n_classes)) {
      fail(ErrorCode::kCorruptModel, "base_score length does not match n_classes");
    }
    for (const auto& r : j.at("history")) {
      RoundRecord rec;
      rec.round = r.at("round").get<int>();
      rec.train_mlogloss = r.at("train_mlogloss").get<double>();
      rec.val_mlogloss = r.at("val_mlogloss").is_null() ? kMissing : r.at("val_mlogloss").get<double>();
      m.history.push_back(rec);
    }
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      tree.class_index = t.at("class").get<int>();
      if (tree.class_index < 0 || tree.class_index >= m.params.n_classes) {
        fail(ErrorCode::kCorruptModel, "tree class index out of range");
      }
      node_from_json(t.at("root"), tree, m.feature_names.size(), 0);
      m.trees.push_back(std::move(tree));
    }
    if (m.trees.size() % m.base_score.size() != 0) {
      fail(ErrorCode::kCorruptModel, "tree count is not a multiple of the class count");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptModel, std::string("malformed model: ") + e.what());
  }
}

void save_model(const GbtModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << to_json(model) << '\n';
}

GbtModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kUpstreamArtifactMissing, "model file " + path.string() + " not found");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace lvef::gbt

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

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lvef/ecg_features.hpp"
#include "lvef/ehr_features.hpp"
#include "lvef/signal.hpp"
#include "lvef/ts_features.hpp"

namespace lvef::explain {

namespace {

using gbt::RegressionTree;
using gbt::TreeNode;

double tree_expectation(const RegressionTree& tree, int id) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
  if (n.is_leaf()) return n.weight;
  const double wl = tree.nodes[static_cast<std::size_t>(n.left)].cover;
  const double wr = tree.nodes[static_cast<std::size_t>(n.right)].cover;
  return (wl * tree_expectation(tree, n.left) + wr * tree_expectation(tree, n.right)) / (wl + wr);
}

// Path bookkeeping of Lundberg et al.'s polynomial-time algorithm.
struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction, int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / static_cast<double>(depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - path[i].pweight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].pweight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = path[i].pweight - tmp * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      total += path[i].pweight / zero / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

void shap_recurse(const RegressionTree& tree, std::span<const double> x, double* phi, int node,
                  int depth, PathElement* parent_path, double parent_zero, double parent_one,
                  int parent_feature) {
  PathElement* path = parent_path + depth + 1;
  std::copy(parent_path, parent_path + depth + 1, path);
  extend_path(path, depth, parent_zero, parent_one, parent_feature);

  const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const double w = unwound_path_sum(path, depth, i);
      const auto& el = path[i];
      phi[el.feature] += w * (el.one_fraction - el.zero_fraction) * n.weight;
    }
    return;
  }

  const double v = x[static_cast<std::size_t>(n.feature)];
  const bool go_left = is_missing(v) ? n.default_left : v < n.threshold;
  const int hot = go_left ? n.left : n.right;
  const int cold = go_left ? n.right : n.left;
  const double w = n.cover;
  const double hot_zero = tree.nodes[static_cast<std::size_t>(hot)].cover / w;
  const double cold_zero = tree.nodes[static_cast<std::size_t>(cold)].cover / w;

  double incoming_zero = 1.0, incoming_one = 1.0;
  int k = 0;
  for (; k <= depth; ++k) {
    if (path[k].feature == n.feature) break;
  }
  if (k != depth + 1) {
    incoming_zero = path[k].zero_fraction;
    incoming_one = path[k].one_fraction;
    unwind_path(path, depth, k);
    depth -= 1;
  }
  shap_recurse(tree, x, phi, hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, n.feature);
  shap_recurse(tree, x, phi, cold, depth + 1, path, cold_zero * incoming_zero, 0.0, n.feature);
}

}  // namespace

double expected_margin(const gbt::GbtModel& model, int k) {
  if (k < 0 || k >= model.n_classes()) fail(ErrorCode::kInvalidArgument, "class index out of range");
  double base = model.base_score[static_cast<std::size_t>(k)];
  for (const auto& t : model.trees) {
    if (t.class_index == k) base += tree_expectation(t, 0);
  }
  return base;
}

Attribution tree_shap(const gbt::GbtModel& model, std::span<const double> x, int k) {
  if (x.size() != model.feature_names.size()) {
    fail(ErrorCode::kDimensionMismatch, "row has " + std::to_string(x.size()) + " features, model expects " +
                                            std::to_string(model.feature_names.size()));
  }
  Attribution out;
  out.phi.assign(x.size(), 0.0);
  out.base = expected_margin(model, k);
  std::vector<PathElement> buffer;
  for (const auto& t : model.trees) {
    if (t.class_index != k) continue;
    const auto d = static_cast<std::size_t>(t.depth());
    const std::size_t need = (d + 2) * (d + 3) / 2;
    if (buffer.size() < need) buffer.resize(need);
    shap_recurse(t, x, out.phi.data(), 0, 0, buffer.data(), 1.0, 1.0, -1);
  }
  return out;
}

ShapMatrix shap_matrix(const gbt::GbtModel& model, const FeatureMatrix& X, int k) {
  if (X.column_names() != model.feature_names) {
    fail(ErrorCode::kDimensionMismatch, "feature columns differ from the model's");
  }
  ShapMatrix m;
  m.class_index = k;
  m.base = expected_margin(model, k);
  m.feature_names = X.column_names();
  m.row_ids = X.row_ids();
  const std::size_t F = X.cols();
  m.values.assign(X.rows() * F, 0.0);
  parallel_for(X.rows(), [&](std::size_t i) {
    const auto a = tree_shap(model, X.row(i), k);
    std::copy(a.phi.begin(), a.phi.end(), m.values.begin() + static_cast<std::ptrdiff_t>(i * F));
  });
  return m;
}

void write_shap_csv(const ShapMatrix& shap, const std::filesystem::path& path) {
  FeatureMatrix fm(shap.feature_names);
  for (std::size_t i = 0; i < shap.rows(); ++i) {
    fm.add_row(shap.row_ids[i], std::span<const double>(shap.values.data() + i * shap.cols(), shap.cols()));
  }
  fm.metadata() = shap.provenance;
  fm.metadata()["class"] = std::string(kClassNames[static_cast<std::size_t>(shap.class_index)]);
  fm.metadata()["class_index"] = std::to_string(shap.class_index);
  fm.metadata()["base_value"] = format_double(shap.base);
  fm.metadata()["output"] = "margin";
  fm.write_csv(path);
}

ShapMatrix read_shap_csv(const std::filesystem::path& path) {
  const auto fm = FeatureMatrix::read_csv(path);
  ShapMatrix m;
  const auto& meta = fm.metadata();
  const auto ci = meta.find("class_index");
  const auto bv = meta.find("base_value");
  if (ci == meta.end() || bv == meta.end()) fail(ErrorCode::kParseError, "SHAP sidecar lacks class or base value");
  m.class_index = std::stoi(ci->second);
  m.base = parse_double(bv->second);
  m.feature_names = fm.column_names();
  m.row_ids = fm.row_ids();
  for (const auto& [key, value] : meta) {
    if (key != "class" && key != "class_index" && key != "base_value" && key != "output") m.provenance[key] = value;
  }
  m.values.reserve(fm.rows() * fm.cols());
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    const auto r = fm.row(i);
    m.values.insert(m.values.end(), r.begin(), r.end());
  }
  return m;
}

// ---------------------------------------------------------------------------

std::vector<Importance> global_importance(const ShapMatrix& shap, std::span<const double> row_weights) {
  if (shap.rows() == 0 || shap.cols() == 0) fail(ErrorCode::kEmptyMatrix, "no attributions to rank");
  if (row_weights.size() != shap.rows()) fail(ErrorCode::kDimensionMismatch, "one weight per row required");
  const double total = std::accumulate(row_weights.begin(), row_weights.end(), 0.0);
  if (!(total > 0.0)) fail(ErrorCode::kEmptyMatrix, "row weights sum to zero");
  std::vector<Importance> out(shap.cols());
  for (std::size_t j = 0; j < shap.cols(); ++j) out[j].feature = shap.feature_names[j];
  for (std::size_t i = 0; i < shap.rows(); ++i) {
    if (row_weights[i] == 0.0) continue;
    for (std::size_t j = 0; j < shap.cols(); ++j) out[j].mean_abs += row_weights[i] * std::abs(shap.at(i, j));
  }
  for (auto& o : out) o.mean_abs /= total;
  std::sort(out.begin(), out.end(), [](const Importance& a, const Importance& b) {
    if (a.mean_abs != b.mean_abs) return a.mean_abs > b.mean_abs;
    return a.feature < b.feature;
  });
  return out;
}

std::vector<Importance> global_importance(const ShapMatrix& shap) {
  const std::vector<double> w(shap.rows(), 1.0);
  return global_importance(shap, w);
}

double jaccard(std::vector<std::string> a, std::vector<std::string> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::string> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const double inter = static_cast<double>(common.size());
  return inter / (static_cast<double>(a.size() + b.size()) - inter);
}

std::vector<std::vector<std::size_t>> draw_resamples(std::size_t n, const StabilityOptions& options) {
  if (options.resamples < 1) fail(ErrorCode::kInvalidArgument, "stability needs at least one resample");
  if (n == 0) fail(ErrorCode::kEmptyMatrix, "cannot resample an empty set");
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(options.resamples),
                                            std::vector<std::size_t>(n));
  for (std::size_t b = 0; b < out.size(); ++b) {
    if (!options.resample) {
      std::iota(out[b].begin(), out[b].end(), std::size_t{0});
      continue;
    }
    Rng rng(derive_seed(options.seed, b));
    for (auto& i : out[b]) i = static_cast<std::size_t>(rng.below(n));
  }
  return out;
}

StabilityReport stability_from_resamples(const ShapMatrix& shap,
                                         const std::vector<std::vector<std::size_t>>& resamples,
                                         const StabilityOptions& options) {
  if (shap.rows() == 0) fail(ErrorCode::kEmptyMatrix, "no attributions to resample");
  if (options.top_k < 1) fail(ErrorCode::kInvalidArgument, "top_k must be >= 1");
  StabilityReport r;
  r.class_index = shap.class_index;
  r.options = options;
  r.options.resamples = static_cast<int>(resamples.size());
  const auto B = resamples.size();
  for (const auto& idx : resamples) {
    std::vector<double> w(shap.rows(), 0.0);
    for (std::size_t i : idx) {
      if (i >= shap.rows()) fail(ErrorCode::kInvalidArgument, "resample index out of range");
      w[i] += 1.0;
    }
    const auto ranked = global_importance(shap, w);
    std::vector<std::string> top;
    for (std::size_t j = 0; j < ranked.size() && top.size() < static_cast<std::size_t>(options.top_k); ++j) {
      top.push_back(ranked[j].feature);
    }
    r.top_sets.push_back(std::move(top));
  }
  r.jaccard.assign(B, std::vector<double>(B, 1.0));
  double sum = 0.0, lo = 1.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = i + 1; j < B; ++j) {
      const double v = jaccard(r.top_sets[i], r.top_sets[j]);
      r.jaccard[i][j] = r.jaccard[j][i] = v;
      sum += v;
      lo = std::min(lo, v);
      ++pairs;
    }
  }
  if (pairs > 0) {
    r.mean_jaccard = sum / static_cast<double>(pairs);
    r.min_jaccard = lo;
  }
  std::map<std::string, int> counts;
  for (const auto& s : r.top_sets) {
    for (const auto& f : std::set<std::string>(s.begin(), s.end())) ++counts[f];
  }
  for (const auto& [f, c] : counts) r.frequency.emplace_back(f, static_cast<double>(c) / static_cast<double>(B));
  std::stable_sort(r.frequency.begin(), r.frequency.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return r;
}

StabilityReport stability_analysis(const gbt::GbtModel& model, const FeatureMatrix& test, int k,
                                   const StabilityOptions& options) {
  if (test.rows() == 0) fail(ErrorCode::kEmptyMatrix, "stability analysis on an empty test set");
  const auto shap = shap_matrix(model, test, k);
  return stability_from_resamples(shap, draw_resamples(test.rows(), options), options);
}

namespace {
using ojson = nlohmann::ordered_json;
ojson num(double v) { return is_missing(v) ? ojson(nullptr) : ojson(v); }
}  // namespace

std::string to_json(const StabilityReport& r) {
  ojson j;
  j["class"] = std::string(kClassNames[static_cast<std::size_t>(r.class_index)]);
  j["resamples"] = r.options.resamples;
  j["top_k"] = r.options.top_k;
  j["seed"] = r.options.seed;
  j["resampling"] = r.options.resample;
  j["top_sets"] = r.top_sets;
  j["jaccard"] = r.jaccard;
  j["mean_jaccard"] = num(r.mean_jaccard);
  j["min_jaccard"] = num(r.min_jaccard);
  auto& freq = j["frequency"] = ojson::array();
  for (const auto& [f, v] : r.frequency) freq.push_back({{"feature", f}, {"frequency", v}});
  return j.dump(1) + "\n";
}

// ---------------------------------------------------------------------------

DependenceData dependence_data(std::span<const double> values, std::span<const double> phi,
                               std::string feature) {
  if (values.size() != phi.size()) fail(ErrorCode::kDimensionMismatch, "values and attributions differ in length");
  DependenceData d;
  d.feature = std::move(feature);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_missing(values[i])) {
      ++d.excluded_missing;
      continue;
    }
    d.points.emplace_back(values[i], phi[i]);
    xs.push_back(values[i]);
    ys.push_back(phi[i]);
  }
  d.fit = fit_line(xs, ys);
  return d;
}

std::string to_json(const DependenceData& d) {
  ojson j;
  j["feature"] = d.feature;
  j["n"] = d.points.size();
  j["excluded_missing"] = d.excluded_missing;
  j["fit"] = {{"slope", d.fit.slope}, {"intercept", d.fit.intercept}, {"r2", num(d.fit.r2)}};
  auto& pts = j["points"] = ojson::array();
  for (const auto& [x, y] : d.points) pts.push_back({x, y});
  return j.dump() + "\n";
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kPlaceholder = "{code}";

std::string pretty(std::string s) {
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::vector<std::pair<std::string, std::string>> builtin_entries() {
  std::vector<std::pair<std::string, std::string>> e = {
      {"rr__mean_ms", "Mean RR interval (ms)"},
      {"rr__std_ms", "RR interval standard deviation (ms)"},
      {"rr__min_ms", "Minimum RR interval (ms)"},
      {"rr__max_ms", "Maximum RR interval (ms)"},
      {"rr__median_ms", "Median RR interval (ms)"},
      {"rr__rmssd_ms", "RMSSD of RR intervals (ms)"},
      {"heart_rate__bpm", "Heart rate (bpm)"},
      {"beat__count", "Detected beat count"},
      {"pr_interval_ms__mean", "Average PR interval (ms)"},
      {"qt_interval_ms__mean", "Average QT interval (ms)"},
  };
  struct Component {
    const char* name;
    const char* wave;
    const char* quantity;
  };
  constexpr Component kComponents[] = {
      {"qr_interval_amplitude", "QR-interval", "amplitude"},
      {"rs_interval_voltage", "RS-interval", "voltage"},
      {"st_segment_voltage", "ST-segment", "voltage"},
      {"r_amplitude", "R-wave", "amplitude"},
      {"t_amplitude", "T-wave", "amplitude"},
      {"qrs_duration_ms", "QRS", "duration (ms)"},
  };
  for (auto lead : kTwelveLeads) {
    const std::string l(lead);
    for (const auto& c : kComponents) {
      for (const auto& [agg, word] : {std::pair{"mean", "average"}, std::pair{"median", "median"}}) {
        e.emplace_back(l + "__" + c.name + "__" + agg,
                       "Lead " + l + " " + c.wave + " " + word + " " + c.quantity);
      }
    }
    for (int k = 0; k < kAmplitudeBands; ++k) {
      e.emplace_back(l + "__amp_band__" + std::to_string(k),
                     "Lead " + l + " amplitude band " + std::to_string(k) + " occupancy");
    }
    for (const auto& d : TsDescriptorCatalog::default_catalog().descriptors()) {
      e.emplace_back(l + "__ts__" + d.name, "Lead " + l + " signal " + pretty(d.name));
    }
  }
  e.emplace_back("dx__{code}", "Diagnosis {code} (ICD-10)");
  e.emplace_back("med__{code}", "Medication {code}");
  const std::map<std::string, std::string> vitals = {{"bmi", "BMI"},
                                                     {"systolic_bp", "Systolic blood pressure"},
                                                     {"diastolic_bp", "Diastolic blood pressure"},
                                                     {"temperature_f", "Temperature (F)"},
                                                     {"pulse", "Pulse"}};
  for (auto v : kVitalNames) {
    const auto& text = vitals.at(std::string(v));
    e.emplace_back("vital__" + std::string(v), text + " (most recent)");
    e.emplace_back("vital__" + std::string(v) + "_observed", text + " recorded");
  }
  e.emplace_back("demo__age", "Age (years)");
  for (const auto& c : sex_categories()) e.emplace_back("demo__sex__" + c, "Sex: " + c);
  for (const auto& c : race_categories()) e.emplace_back("demo__race__" + c, "Race: " + c);
  for (const auto& c : smoking_categories()) e.emplace_back("demo__smoking_status__" + c, "Smoking status: " + c);
  return e;
}

// Matches `text` against a template with one placeholder; returns the code.
std::optional<std::string> match_template(std::string_view pattern, std::string_view text) {
  const auto pos = pattern.find(kPlaceholder);
  if (pos == std::string_view::npos) return std::nullopt;
  const auto prefix = pattern.substr(0, pos);
  const auto suffix = pattern.substr(pos + kPlaceholder.size());
  if (text.size() <= prefix.size() + suffix.size()) return std::nullopt;
  if (!text.starts_with(prefix) || !text.ends_with(suffix)) return std::nullopt;
  return std::string(text.substr(prefix.size(), text.size() - prefix.size() - suffix.size()));
}

std::string fill_template(std::string_view pattern, const std::string& code) {
  std::string out(pattern);
  out.replace(out.find(kPlaceholder), kPlaceholder.size(), code);
  return out;
}

}  // namespace

LabelMap::LabelMap(std::vector<std::pair<std::string, std::string>> entries) : entries_(std::move(entries)) {
  std::set<std::string> raws, labels;
  for (const auto& [raw, label] : entries_) {
    if (!raws.insert(raw).second) fail(ErrorCode::kInvalidArgument, "duplicate raw name in label map: " + raw);
    if (!labels.insert(label).second) fail(ErrorCode::kInvalidArgument, "duplicate display label: " + label);
    if ((raw.find(kPlaceholder) == std::string::npos) != (label.find(kPlaceholder) == std::string::npos)) {
      fail(ErrorCode::kInvalidArgument, "placeholder must appear on both sides: " + raw);
    }
  }
}

const LabelMap& LabelMap::builtin() {
  static const LabelMap map(builtin_entries());
  return map;
}

DisplayLabel LabelMap::label(std::string_view raw) const {
  for (const auto& [r, l] : entries_) {
    if (r == raw) return {l, true};
  }
  for (const auto& [r, l] : entries_) {
    if (auto code = match_template(r, raw)) return {fill_template(l, *code), true};
  }
  return {std::string(raw), false};
}

std::optional<std::string> LabelMap::raw_name(std::string_view label) const {
  for (const auto& [r, l] : entries_) {
    if (l == label) return r;
  }
  for (const auto& [r, l] : entries_) {
    if (auto code = match_template(l, label)) return fill_template(r, *code);
  }
  return std::nullopt;
}

LabelMap LabelMap::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "raw_name,display_label") {
    fail(ErrorCode::kParseError, "label table must start with raw_name,display_label");
  }
  std::vector<std::pair<std::string, std::string>> entries;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorCode::kParseError, "label row without a comma: " + line);
    entries.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  return LabelMap(std::move(entries));
}

void LabelMap::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << "raw_name,display_label\n";
  for (const auto& [r, l] : entries_) out << r << ',' << l << '\n';
}

DisplayLabel display_label(std::string_view raw) { return LabelMap::builtin().label(raw); }

}  // namespace lvef::explain

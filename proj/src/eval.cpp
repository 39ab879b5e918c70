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

#include <algorithm>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "lvef/signal.hpp"

namespace lvef::eval {

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) fail(ErrorCode::kDimensionMismatch, std::string(what) + ": scores and labels differ in length");
}

std::vector<char> one_vs_rest(std::span<const int> labels, int k) {
  std::vector<char> pos(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) pos[i] = labels[i] == k ? 1 : 0;
  return pos;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

void check_scores(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorCode::kNonFiniteFeature, "scores must be finite");
  }
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const char> positive) {
  check_sizes(scores.size(), positive.size(), "auroc");
  check_scores(scores);
  std::uint64_t n_pos = 0;
  for (char p : positive) n_pos += p ? 1 : 0;
  const std::uint64_t n_neg = positive.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorCode::kOneClassOnly, "AUROC needs positive and negative examples");

  // Twice the Mann-Whitney U, counted in integers over tie groups.
  const auto idx = order_by_score(scores);
  std::uint64_t twice_u = 0, neg_below = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::uint64_t p = 0, q = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (positive[idx[j]] ? p : q) += 1;
      ++j;
    }
    twice_u += p * (2 * neg_below + q);
    neg_below += q;
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auroc_ovr(std::span<const double> scores, std::span<const int> labels, int k) {
  check_sizes(scores.size(), labels.size(), "auroc_ovr");
  const auto pos = one_vs_rest(labels, k);
  return auroc(scores, pos);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels, int k) {
  check_sizes(scores.size(), labels.size(), "roc_curve");
  check_scores(scores);
  const auto pos = one_vs_rest(labels, k);
  const double n_pos = static_cast<double>(std::count(pos.begin(), pos.end(), 1));
  const double n_neg = static_cast<double>(pos.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorCode::kOneClassOnly, "ROC needs positive and negative examples");

  auto idx = order_by_score(scores);
  std::reverse(idx.begin(), idx.end());
  std::vector<RocPoint> out = {{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      (pos[idx[i]] ? tp : fp) += 1;
      ++i;
    }
    out.push_back({s, fp / n_neg, tp / n_pos});
  }
  return out;
}

ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels,
                                   int k, double threshold) {
  check_sizes(scores.size(), labels.size(), "threshold_metrics");
  ThresholdMetrics m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == k;
    if (predicted && actual) ++m.tp;
    else if (predicted) ++m.fp;
    else if (actual) ++m.fn;
    else ++m.tn;
  }
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  if (m.tp + m.fn > 0) m.sensitivity = d(m.tp) / d(m.tp + m.fn);
  if (m.tn + m.fp > 0) m.specificity = d(m.tn) / d(m.tn + m.fp);
  if (2 * m.tp + m.fp + m.fn > 0) m.f1 = 2.0 * d(m.tp) / d(2 * m.tp + m.fp + m.fn);
  return m;
}

ThresholdChoice select_f1_threshold(std::span<const double> scores, std::span<const int> labels,
                                    int k) {
  check_sizes(scores.size(), labels.size(), "select_f1_threshold");
  check_scores(scores);
  const auto pos = one_vs_rest(labels, k);
  const std::size_t n_pos = static_cast<std::size_t>(std::count(pos.begin(), pos.end(), 1));
  if (n_pos == 0) fail(ErrorCode::kOneClassOnly, "class has no positive examples");

  auto idx = order_by_score(scores);
  std::reverse(idx.begin(), idx.end());
  // Above the maximum nothing is predicted positive and F1 is 0.
  ThresholdChoice best{std::nextafter(scores[idx.front()], std::numeric_limits<double>::infinity()), 0.0};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      (pos[idx[i]] ? tp : fp) += 1;
      ++i;
    }
    const std::size_t fn = n_pos - tp;
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    // Descending scan: only a strict improvement replaces a larger threshold.
    if (f1 > best.f1) best = {s, f1};
  }
  return best;
}

double binary_auc_at_cutoff(std::span<const double> proba, std::span<const double> lvef,
                            double cutoff) {
  int below = 0;
  if (cutoff == 30.0) below = 1;
  else if (cutoff == 40.0) below = 2;
  else if (cutoff == 50.0) below = 3;
  else fail(ErrorCode::kMisalignedCutoff, "cutoff " + format_double(cutoff) + " is not a class boundary");
  const auto K = static_cast<std::size_t>(kNumClasses);
  if (proba.size() != lvef.size() * K) {
    fail(ErrorCode::kDimensionMismatch, "probability matrix does not match LVEF values");
  }
  std::vector<double> score(lvef.size(), 0.0);
  std::vector<char> pos(lvef.size());
  for (std::size_t i = 0; i < lvef.size(); ++i) {
    for (int c = 0; c < below; ++c) score[i] += proba[i * K + static_cast<std::size_t>(c)];
    pos[i] = lvef[i] < cutoff ? 1 : 0;
  }
  return auroc(score, pos);
}

// ---------------------------------------------------------------------------

std::vector<Interval> bootstrap_intervals(std::size_t n, const MultiMetric& metrics, int B,
                                          double alpha, std::uint64_t seed,
                                          const ResampleFilter& accept) {
  if (B < 2) fail(ErrorCode::kInvalidArgument, "bootstrap needs at least 2 resamples");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::kInvalidArgument, "alpha must be in (0, 1)");
  if (n == 0) fail(ErrorCode::kEmptyMatrix, "bootstrap over an empty set");
  constexpr int kMaxRedraws = 10;

  std::vector<std::vector<double>> values(static_cast<std::size_t>(B));
  parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
    std::vector<std::size_t> idx(n);
    for (int attempt = 0;; ++attempt) {
      Rng rng(derive_seed(derive_seed(seed, b), static_cast<std::uint64_t>(attempt)));
      for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
      if (!accept || accept(idx)) break;
      if (attempt == kMaxRedraws) {
        fail(ErrorCode::kDegenerateResampling,
             "resample " + std::to_string(b) + " stayed degenerate after " +
                 std::to_string(kMaxRedraws) + " redraws");
      }
    }
    values[b] = metrics(idx);
  });

  const std::size_t m = values.front().size();
  std::vector<Interval> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> col;
    col.reserve(values.size());
    for (const auto& v : values) {
      if (v.size() != m) fail(ErrorCode::kDimensionMismatch, "metric arity changed between resamples");
      if (!is_missing(v[j])) col.push_back(v[j]);
    }
    if (col.empty()) continue;
    out[j] = {quantile(col, alpha / 2.0), quantile(col, 1.0 - alpha / 2.0)};
  }
  return out;
}

Interval bootstrap_ci(std::size_t n, const std::function<double(std::span<const std::size_t>)>& metric,
                      int B, double alpha, std::uint64_t seed, const ResampleFilter& accept) {
  return bootstrap_intervals(
      n, [&](std::span<const std::size_t> idx) { return std::vector<double>{metric(idx)}; }, B,
      alpha, seed, accept)[0];
}

bool EstimateCi::point_outside_ci() const {
  if (is_missing(point) || is_missing(ci.lo) || is_missing(ci.hi)) return false;
  return point < ci.lo || point > ci.hi;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> class_scores(std::span<const double> proba, std::size_t n, int k) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = proba[i * kNumClasses + static_cast<std::size_t>(k)];
  return s;
}

bool has_both(std::span<const int> labels, int k) {
  bool pos = false, neg = false;
  for (int l : labels) (l == k ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

std::array<double, kNumClasses> select_thresholds(std::span<const double> proba,
                                                  std::span<const int> labels) {
  if (proba.size() != labels.size() * kNumClasses) {
    fail(ErrorCode::kDimensionMismatch, "probability matrix does not match labels");
  }
  std::array<double, kNumClasses> t{};
  for (int k = 0; k < kNumClasses; ++k) {
    const bool any = std::find(labels.begin(), labels.end(), k) != labels.end();
    t[static_cast<std::size_t>(k)] =
        any ? select_f1_threshold(class_scores(proba, labels.size(), k), labels, k).threshold : kMissing;
  }
  return t;
}

EvalReport evaluate(std::span<const double> proba, std::span<const int> labels,
                    std::span<const double> lvef, const std::array<double, kNumClasses>& thresholds,
                    const EvalOptions& options, std::string modality, std::string cohort) {
  const std::size_t n = labels.size();
  if (proba.size() != n * kNumClasses || lvef.size() != n) {
    fail(ErrorCode::kDimensionMismatch, "evaluate: inputs differ in length");
  }
  EvalReport report;
  report.modality = std::move(modality);
  report.cohort = std::move(cohort);
  report.n = n;
  report.options = options;

  for (int k = 0; k < kNumClasses; ++k) {
    auto& ce = report.classes[static_cast<std::size_t>(k)];
    ce.class_name = std::string(kClassNames[static_cast<std::size_t>(k)]);
    ce.n_positive = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), k));
    ce.threshold = thresholds[static_cast<std::size_t>(k)];
    if (!has_both(labels, k)) continue;
    const auto scores = class_scores(proba, n, k);
    ce.auroc.point = auroc_ovr(scores, labels, k);
    ce.roc = roc_curve(scores, labels, k);
    const bool thresholded = !is_missing(ce.threshold);
    if (thresholded) {
      const auto m = threshold_metrics(scores, labels, k, ce.threshold);
      ce.f1.point = m.f1;
      ce.sensitivity.point = m.sensitivity;
      ce.specificity.point = m.specificity;
    }
    const auto metric = [&](std::span<const std::size_t> idx) {
      std::vector<double> s(idx.size());
      std::vector<int> l(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        s[i] = scores[idx[i]];
        l[i] = labels[idx[i]];
      }
      std::vector<double> out = {auroc_ovr(s, l, k), kMissing, kMissing, kMissing};
      if (thresholded) {
        const auto m = threshold_metrics(s, l, k, ce.threshold);
        out[1] = m.f1;
        out[2] = m.sensitivity;
        out[3] = m.specificity;
      }
      return out;
    };
    const auto accept = [&](std::span<const std::size_t> idx) {
      bool pos = false, neg = false;
      for (std::size_t i : idx) (labels[i] == k ? pos : neg) = true;
      return pos && neg;
    };
    const auto ci = bootstrap_intervals(n, metric, options.bootstrap_resamples, options.alpha,
                                        derive_seed(options.seed, static_cast<std::uint64_t>(k)), accept);
    ce.auroc.ci = ci[0];
    ce.f1.ci = ci[1];
    ce.sensitivity.ci = ci[2];
    ce.specificity.ci = ci[3];
  }

  for (int cutoff : {30, 40, 50}) {
    std::size_t below = 0;
    for (double v : lvef) below += v < cutoff ? 1 : 0;
    if (below == 0 || below == n) continue;
    EstimateCi e;
    e.point = binary_auc_at_cutoff(proba, lvef, cutoff);
    const auto metric = [&](std::span<const std::size_t> idx) {
      std::vector<double> p(idx.size() * kNumClasses), v(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy_n(proba.begin() + static_cast<std::ptrdiff_t>(idx[i] * kNumClasses), kNumClasses,
                    p.begin() + static_cast<std::ptrdiff_t>(i * kNumClasses));
        v[i] = lvef[idx[i]];
      }
      return binary_auc_at_cutoff(p, v, cutoff);
    };
    const auto accept = [&](std::span<const std::size_t> idx) {
      bool pos = false, neg = false;
      for (std::size_t i : idx) (lvef[i] < cutoff ? pos : neg) = true;
      return pos && neg;
    };
    e.ci = bootstrap_ci(n, metric, options.bootstrap_resamples, options.alpha,
                        derive_seed(options.seed, 100 + static_cast<std::uint64_t>(cutoff)), accept);
    report.binary_auc[cutoff] = e;
  }
  return report;
}

namespace {

using ojson = nlohmann::ordered_json;

ojson num(double v) { return is_missing(v) ? ojson(nullptr) : ojson(v); }

ojson estimate_json(const EstimateCi& e) {
  return {{"point", num(e.point)},
          {"ci", {num(e.ci.lo), num(e.ci.hi)}},
          {"point_outside_ci", e.point_outside_ci()}};
}

}  // namespace

std::string to_json(const EvalReport& r) {
  ojson j;
  j["modality"] = r.modality;
  j["cohort"] = r.cohort;
  j["n"] = r.n;
  j["bootstrap"] = {{"resamples", r.options.bootstrap_resamples},
                    {"alpha", r.options.alpha},
                    {"seed", r.options.seed},
                    {"interval", "percentile"}};
  auto& classes = j["classes"] = ojson::array();
  for (const auto& c : r.classes) {
    ojson roc = ojson::array();
    for (const auto& p : c.roc) {
      roc.push_back({std::isinf(p.threshold) ? ojson("inf") : ojson(p.threshold), p.fpr, p.tpr});
    }
    classes.push_back({{"class", c.class_name},
                       {"n_positive", c.n_positive},
                       {"auroc", estimate_json(c.auroc)},
                       {"threshold", num(c.threshold)},
                       {"f1", estimate_json(c.f1)},
                       {"sensitivity", estimate_json(c.sensitivity)},
                       {"specificity", estimate_json(c.specificity)},
                       {"roc", std::move(roc)}});
  }
  auto& bin = j["binary_auc"] = ojson::object();
  for (const auto& [cutoff, e] : r.binary_auc) bin["lvef_lt_" + std::to_string(cutoff)] = estimate_json(e);
  j["provenance"] = r.provenance;
  return j.dump(1) + "\n";
}

void write_roc_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << "class,threshold,fpr,tpr\n";
  for (const auto& c : report.classes) {
    for (const auto& p : c.roc) {
      out << c.class_name << ',' << (std::isinf(p.threshold) ? "inf" : format_double(p.threshold)) << ','
          << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
    }
  }
}

}  // namespace lvef::eval

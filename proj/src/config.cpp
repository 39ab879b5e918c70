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

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lvef/synth.hpp"

namespace lvef {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::kConfigInvalid, what); }

// Reads one JSON object, rejecting keys that are never consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(where() + " must be an object");
  }


  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) invalid("unknown key " + qualified(key));
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) invalid(qualified(key) + " must be a number");
      out = v->get<double>();
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) invalid(qualified(key) + " must be an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned()) {
          out = static_cast<Int>(v->get<std::uint64_t>());
          return;
        }
        if (v->get<std::int64_t>() < 0) invalid(qualified(key) + " must be nonnegative");
      }
      out = static_cast<Int>(v->get<std::int64_t>());
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) invalid(qualified(key) + " must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) invalid(qualified(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void with_section(Section& parent, const std::string& key, Fn&& fn) {
  if (const json* v = parent.find(key)) {
    Section s(*v, parent.qualified(key));
    fn(s);
    s.finish();
  }
}

std::vector<double> number_array(const json& v, const std::string& name) {
  if (!v.is_array()) invalid(name + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) invalid(name + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) invalid(what);
}

void validate(const Config& c) {
  const auto& s = c.synth;
  require(s.n > 0, "synth.n must be positive");
  double total = 0.0;
  for (double p : s.prevalences) {
    require(p >= 0.0 && p <= 1.0, "synth.prevalences entries must be in [0, 1]");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, "synth.prevalences must sum to 1");
  for (double f : {s.repeat_patient_fraction, s.excluded_echo_fraction, s.decoy_ecg_fraction}) {
    require(f >= 0.0 && f <= 1.0, "synth fractions must be in [0, 1]");
  }
  for (const auto* d : {&s.start_date, &s.end_date, &s.external_start_date, &s.external_end_date}) {
    try {
      parse_timestamp(*d);
    } catch (const Error&) {
      invalid("synth dates must be ISO-8601 timestamps like 2016-01-01T00:00:00Z, got '" + *d + "'");
    }
  }
  require(parse_timestamp(s.start_date) < parse_timestamp(s.end_date), "synth.start_date must precede end_date");
  require(parse_timestamp(s.external_start_date) < parse_timestamp(s.external_end_date),
          "synth.external_start_date must precede external_end_date");

  try {
    c.preprocess.validate(kDefaultSamplingRate);
    c.gbt.validate();
  } catch (const Error& e) {
    invalid(e.what());
  }
  require(c.gbt.n_classes == kNumClasses, "gbt.n_classes must be 4");

  require(c.cohort.pairing_window_days > 0.0, "cohort.pairing_window_days must be positive");
  const auto& f = c.cohort.split;
  require(f.train > 0.0 && f.val >= 0.0 && f.test > 0.0, "cohort.split fractions must be positive");
  require(std::abs(f.train + f.val + f.test - 1.0) <= 1e-9, "cohort.split fractions must sum to 1");

  require(c.ehr.dx_top_k > 0 && c.ehr.med_top_k > 0, "ehr top-k values must be positive");
  require(c.ehr.lookback_days > 0.0, "ehr.lookback_days must be positive");

  require(c.eval.bootstrap_resamples >= 2, "eval.bootstrap_resamples must be >= 2");
  require(c.eval.alpha > 0.0 && c.eval.alpha < 1.0, "eval.alpha must be in (0, 1)");

  require(c.explain.resamples >= 1, "explain.resamples must be >= 1");
  require(c.explain.top_k >= 1, "explain.top_k must be >= 1");
  require(c.explain.dependence_features >= 0, "explain.dependence_features must be >= 0");
}

ordered split_json(const SplitFractions& f) {
  return ordered{{"train", f.train}, {"val", f.val}, {"test", f.test}};
}

}  // namespace

Config::Config() { synth.prevalences = synth::kReferencePrevalences; }

std::string Config::canonical_json() const {
  ordered j;
  j["seed"] = seed;
  j["synth"] = ordered{{"n", synth.n},
                       {"external_n", synth.external_n},
                       {"prevalences", synth.prevalences},
                       {"repeat_patient_fraction", synth.repeat_patient_fraction},
                       {"excluded_echo_fraction", synth.excluded_echo_fraction},
                       {"decoy_ecg_fraction", synth.decoy_ecg_fraction},
                       {"class_effects", synth.class_effects},
                       {"start_date", synth.start_date},
                       {"end_date", synth.end_date},
                       {"external_start_date", synth.external_start_date},
                       {"external_end_date", synth.external_end_date}};
  j["preprocess"] = ordered{{"highpass_cutoff", preprocess.highpass_cutoff},
                            {"filter_order", preprocess.filter_order},
                            {"powerline_freq", preprocess.powerline_freq},
                            {"notch_bandwidth", preprocess.notch_bandwidth},
                            {"standardize", preprocess.standardize},
                            {"zero_phase", preprocess.zero_phase},
                            {"write_signals", write_preprocessed_signals}};
  j["cohort"] = ordered{{"pairing_window_days", cohort.pairing_window_days}, {"split", split_json(cohort.split)}};
  j["ehr"] = ordered{{"dx_top_k", ehr.dx_top_k},
                     {"med_top_k", ehr.med_top_k},
                     {"exclusions", ehr.exclusions},
                     {"lookback_days", ehr.lookback_days}};
  j["gbt"] = ordered{{"learning_rate", gbt.learning_rate},
                     {"max_depth", gbt.max_depth},
                     {"min_child_weight", gbt.min_child_weight},
                     {"n_rounds", gbt.n_rounds},
                     {"l2_lambda", gbt.l2_lambda},
                     {"n_classes", gbt.n_classes},
                     {"early_stopping_rounds", gbt.early_stopping_rounds
                                                   ? ordered(*gbt.early_stopping_rounds)
                                                   : ordered(nullptr)},
                     {"class_weights", gbt.class_weights}};
  j["eval"] = ordered{{"bootstrap_resamples", eval.bootstrap_resamples}, {"alpha", eval.alpha}};
  j["explain"] = ordered{{"resamples", explain.resamples},
                         {"top_k", explain.top_k},
                         {"resample", explain.resample},
                         {"dependence_features", explain.dependence_features},
                         {"label_map", explain.label_map}};
  return j.dump(1) + "\n";
}

std::string Config::hash() const { return hex64(fnv1a64(canonical_json())); }

Config parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    invalid(std::string("config is not valid JSON: ") + e.what());
  }
  Config c;
  Section top(root, "");
  top.integer("seed", c.seed);
  with_section(top, "synth", [&](Section& s) {
    s.integer("n", c.synth.n);
    s.integer("external_n", c.synth.external_n);
    if (const json* v = s.find("prevalences")) {
      const auto p = number_array(*v, "synth.prevalences");
      if (p.size() != kNumClasses) invalid("synth.prevalences needs 4 entries (severe, moderate, mild, normal)");
      std::copy(p.begin(), p.end(), c.synth.prevalences.begin());
    }
    s.number("repeat_patient_fraction", c.synth.repeat_patient_fraction);
    s.number("excluded_echo_fraction", c.synth.excluded_echo_fraction);
    s.number("decoy_ecg_fraction", c.synth.decoy_ecg_fraction);
    s.boolean("class_effects", c.synth.class_effects);
    s.string("start_date", c.synth.start_date);
    s.string("end_date", c.synth.end_date);
    s.string("external_start_date", c.synth.external_start_date);
    s.string("external_end_date", c.synth.external_end_date);
  });
  with_section(top, "preprocess", [&](Section& s) {
    s.number("highpass_cutoff", c.preprocess.highpass_cutoff);
    s.integer("filter_order", c.preprocess.filter_order);
    s.number("powerline_freq", c.preprocess.powerline_freq);
    s.number("notch_bandwidth", c.preprocess.notch_bandwidth);
    s.boolean("standardize", c.preprocess.standardize);
    s.boolean("zero_phase", c.preprocess.zero_phase);
    s.boolean("write_signals", c.write_preprocessed_signals);
  });
  with_section(top, "cohort", [&](Section& s) {
    s.number("pairing_window_days", c.cohort.pairing_window_days);
    with_section(s, "split", [&](Section& f) {
      f.number("train", c.cohort.split.train);
      f.number("val", c.cohort.split.val);
      f.number("test", c.cohort.split.test);
    });
  });
  with_section(top, "ehr", [&](Section& s) {
    s.integer("dx_top_k", c.ehr.dx_top_k);
    s.integer("med_top_k", c.ehr.med_top_k);
    if (const json* v = s.find("exclusions")) {
      if (!v->is_array()) invalid("ehr.exclusions must be an array of strings");
      c.ehr.exclusions.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) invalid("ehr.exclusions must be an array of strings");
        c.ehr.exclusions.push_back(e.get<std::string>());
      }
    }
    s.number("lookback_days", c.ehr.lookback_days);
  });
  with_section(top, "gbt", [&](Section& s) {
    s.number("learning_rate", c.gbt.learning_rate);
    s.integer("max_depth", c.gbt.max_depth);
    s.number("min_child_weight", c.gbt.min_child_weight);
    s.integer("n_rounds", c.gbt.n_rounds);
    s.number("l2_lambda", c.gbt.l2_lambda);
    s.integer("n_classes", c.gbt.n_classes);
    if (const json* v = s.find("early_stopping_rounds")) {
      if (v->is_null()) {
        c.gbt.early_stopping_rounds.reset();
      } else if (v->is_number_integer()) {
        c.gbt.early_stopping_rounds = v->get<int>();
      } else {
        invalid("gbt.early_stopping_rounds must be an integer or null");
      }
    }
    if (const json* v = s.find("class_weights")) c.gbt.class_weights = number_array(*v, "gbt.class_weights");
  });
  with_section(top, "eval", [&](Section& s) {
    s.integer("bootstrap_resamples", c.eval.bootstrap_resamples);
    s.number("alpha", c.eval.alpha);
  });
  with_section(top, "explain", [&](Section& s) {
    s.integer("resamples", c.explain.resamples);
    s.integer("top_k", c.explain.top_k);
    s.boolean("resample", c.explain.resample);
    s.integer("dependence_features", c.explain.dependence_features);
    s.string("label_map", c.explain.label_map);
  });
  top.finish();
  validate(c);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace lvef

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
#include "lvef/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <array>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lvef/config.hpp"
#include "lvef/ecg_features.hpp"
#include "lvef/explain.hpp"
#include "lvef/synth.hpp"
#include "lvef/ts_features.hpp"

namespace lvef::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr std::string_view kToolVersion = "1.0.0";

// Stage seed streams.
constexpr std::uint64_t kSeedSynthInternal = 1;
constexpr std::uint64_t kSeedSynthExternal = 2;
constexpr std::uint64_t kSeedSplit = 3;
constexpr std::uint64_t kSeedTrain = 4;
constexpr std::uint64_t kSeedEval = 5;
constexpr std::uint64_t kSeedExplain = 6;

enum class CohortKind { kInternal, kExternal };

std::string_view name_of(CohortKind c) { return c == CohortKind::kInternal ? "internal" : "external"; }

struct Options {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out_dir = "out";
  std::string cohort = "internal";
  std::string modality;
};

class Stage {
 public:
  Stage(Config config, const Options& opts, std::ostream& err)
      : cfg_(std::move(config)), root_(opts.out_dir), err_(err) {
    cohort_ = opts.cohort == "external" ? CohortKind::kExternal : CohortKind::kInternal;
    if (!opts.modality.empty()) modality_ = pipeline::parse_modality(opts.modality);
    summary_["config_hash"] = cfg_.hash();
    summary_["seed"] = cfg_.seed;
  }

  ojson run(const std::string& command) {
    summary_["command"] = command;
    if (command == "synth") synth();
    else if (command == "preprocess") preprocess();
    else if (command == "extract") extract();
    else if (command == "cohort") cohort();
    else if (command == "train") train();
    else if (command == "evaluate") evaluate();
    else if (command == "explain") explain();
    else if (command == "report") report();
    summary_["status"] = "ok";
    summary_["artifacts"] = artifacts_;
    return summary_;
  }

 private:
  // ---- layout -------------------------------------------------------------
  fs::path raw_dir(CohortKind c) const { return root_ / "raw" / name_of(c); }
  fs::path stage_dir(CohortKind c, std::string_view stage) const { return root_ / name_of(c) / stage; }
  fs::path models_dir() const { return root_ / "models"; }
  fs::path model_path(pipeline::Modality m) const {
    return models_dir() / (std::string(pipeline::to_string(m)) + ".model.json");
  }
  fs::path thresholds_path(pipeline::Modality m) const {
    return models_dir() / (std::string(pipeline::to_string(m)) + ".thresholds.json");
  }

  // ---- helpers ------------------------------------------------------------
  void log(const std::string& msg) const { err_ << "[lvef] " << msg << '\n'; }

  std::map<std::string, std::string> provenance(std::string_view stage) const {
    return {{"config_hash", cfg_.hash()},
            {"seed", std::to_string(cfg_.seed)},
            {"clinical_catalog", std::string(kClinicalCatalogVersion)},
            {"ts_catalog", std::string(kTsCatalogVersion)},
            {"stage", std::string(stage)},
            {"tool_version", std::string(kToolVersion)}};
  }

  void emitted(const fs::path& p) { artifacts_.push_back(fs::relative(p, root_).generic_string()); }

  void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) fail(ErrorCode::kIoError, "cannot write " + p.string());
    out << text;
    if (!out) fail(ErrorCode::kIoError, "write failed for " + p.string());
    emitted(p);
  }

  // Sidecar `<file>.meta.json` for artifacts whose own format has no room
  // for provenance.
  void write_sidecar(const fs::path& p, std::string_view stage) {
    ojson j(provenance(stage));
    std::ofstream out(metadata_path(p), std::ios::binary);
    out << j.dump(2) << '\n';
  }

  static std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::kIoError, "cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static void require_upstream(const fs::path& p, std::string_view producer) {
    if (!fs::exists(p)) {
      fail(ErrorCode::kUpstreamArtifactMissing,
           "missing " + p.string() + " (run `" + std::string(producer) + "` first)");
    }
  }

  std::vector<fs::path> raw_ecg_files(CohortKind c) const {
    const auto dir = raw_dir(c) / "ecg";
    require_upstream(dir, "synth");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(ErrorCode::kUpstreamArtifactMissing, "no ECG records under " + dir.string());
    return files;
  }

  std::vector<pipeline::Modality> modalities() const {
    if (modality_) return {*modality_};
    return {pipeline::kModalities.begin(), pipeline::kModalities.end()};
  }

  std::string cohort_tag(CohortKind c) const {
    return c == CohortKind::kInternal ? "internal_test" : "temporal_external";
  }

  // Fused features and examples of a cohort, restricted to its evaluation
  // rows (the test split internally, everything externally).
  pipeline::SplitData evaluation_rows(CohortKind c) const {
    const auto dir = stage_dir(c, "cohort");
    require_upstream(dir / "features.csv", "cohort --cohort " + std::string(name_of(c)));
    require_upstream(dir / "cohort.csv", "cohort --cohort " + std::string(name_of(c)));
    const auto fused = FeatureMatrix::read_csv(dir / "features.csv");
    const auto examples = read_cohort_csv(dir / "cohort.csv");
    return pipeline::take_split(fused, examples, c == CohortKind::kInternal ? Split::kTest : Split::kExternal);
  }

  pipeline::TrainedModel load_trained(pipeline::Modality m) const {
    require_upstream(model_path(m), "train");
    require_upstream(thresholds_path(m), "train");
    pipeline::TrainedModel t;
    t.modality = m;
    t.model = gbt::load_model(model_path(m));
    t.thresholds = pipeline::thresholds_from_json(read_text(thresholds_path(m)));
    return t;
  }

  // ---- stages -------------------------------------------------------------
  void synth() {
    auto profiles = synth::default_profiles();
    if (!cfg_.synth.class_effects) {
      for (int k = 0; k < kNumClasses; ++k) {
        profiles[static_cast<std::size_t>(k)] = profiles[static_cast<std::size_t>(LvefClass::kNormal)];
        profiles[static_cast<std::size_t>(k)].label = static_cast<LvefClass>(k);
      }
    }
    for (auto& p : profiles) p.powerline_hz = cfg_.preprocess.powerline_freq;

    ojson counts;
    for (CohortKind c : {CohortKind::kInternal, CohortKind::kExternal}) {
      synth::CohortOptions o;
      const bool internal = c == CohortKind::kInternal;
      o.n = internal ? cfg_.synth.n : cfg_.synth.external_n;
      if (o.n == 0) continue;
      o.prevalences = cfg_.synth.prevalences;
      o.seed = cfg_.stage_seed(internal ? kSeedSynthInternal : kSeedSynthExternal);
      o.id_prefix = internal ? "" : "X";
      o.start_date = internal ? cfg_.synth.start_date : cfg_.synth.external_start_date;
      o.end_date = internal ? cfg_.synth.end_date : cfg_.synth.external_end_date;
      o.repeat_patient_fraction = cfg_.synth.repeat_patient_fraction;
      o.excluded_echo_fraction = cfg_.synth.excluded_echo_fraction;
      o.decoy_ecg_fraction = cfg_.synth.decoy_ecg_fraction;
      o.pairing_window_days = cfg_.cohort.pairing_window_days;
      log("generating " + std::string(name_of(c)) + " cohort (" + std::to_string(o.n) + " examples)");
      const auto cohort = synth::generate_cohort(o, profiles);
      const auto dir = raw_dir(c);
      fs::remove_all(dir);
      synth::write_cohort(cohort, dir);

      ojson manifest;
      manifest["cohort"] = std::string(name_of(c));
      manifest["examples"] = o.n;
      manifest["ecg_records"] = cohort.records.size();
      manifest["echos"] = cohort.echos.size();
      manifest["patients"] = cohort.snapshots.size();
      manifest["provenance"] = provenance("synth");
      write_text(dir / "manifest.json", manifest.dump(1) + "\n");
      for (const char* f : {"echo.csv", "ehr.ndjson"}) {
        write_sidecar(dir / f, "synth");
        emitted(dir / f);
      }
      emitted(dir / "ecg");
      counts[std::string(name_of(c))] = {{"ecg_records", cohort.records.size()}, {"echos", cohort.echos.size()}};
    }
    summary_["details"] = counts;
  }

  void preprocess() {
    const auto files = raw_ecg_files(cohort_);
    const auto dir = stage_dir(cohort_, "preprocess");
    fs::remove_all(dir);
    fs::create_directories(dir);
    const bool signals = cfg_.write_preprocessed_signals;
    if (signals) fs::create_directories(dir / "signals");
    log("preprocessing " + std::to_string(files.size()) + " records");

    std::vector<std::string> rows(files.size());
    parallel_for(files.size(), [&](std::size_t i) {
      const auto twelve = derive_limb_leads(read_ecg(files[i]));
      const auto pre = preprocess_record(twelve, cfg_.preprocess);
      std::string derived, degenerate;
      for (const auto& lead : pre.leads()) {
        if (lead.source == LeadSource::kDerived) derived += (derived.empty() ? "" : "|") + lead.name;
        if (lead.degenerate) degenerate += (degenerate.empty() ? "" : "|") + lead.name;
      }
      rows[i] = pre.meta().record_id + "," + std::to_string(pre.samples_per_lead()) + "," +
                std::to_string(pre.leads().size()) + "," + derived + "," + degenerate;
      if (signals) write_ecg(pre, dir / "signals" / files[i].filename());
    });
    std::string text = "record_id,samples,leads,derived_leads,degenerate_leads\n";
    std::size_t degenerate_records = 0;
    for (const auto& r : rows) {
      text += r + "\n";
      if (r.back() != ',') ++degenerate_records;
    }
    write_text(dir / "qc.csv", text);
    write_sidecar(dir / "qc.csv", "preprocess");
    if (signals) emitted(dir / "signals");
    summary_["details"] = {{"records", files.size()}, {"records_with_degenerate_leads", degenerate_records}};
  }

  void extract() {
    require_upstream(stage_dir(cohort_, "preprocess") / "qc.csv",
                     "preprocess --cohort " + std::string(name_of(cohort_)));
    const auto files = raw_ecg_files(cohort_);
    log("extracting clinical and time-series features from " + std::to_string(files.size()) + " records");
    auto ecg = pipeline::extract_ecg_matrix(
        files.size(), [&](std::size_t i) { return read_ecg(files[i]); }, cfg_.preprocess);
    for (const auto& [k, v] : provenance("extract")) ecg.metadata()[k] = v;
    ecg.metadata()["modality"] = "ecg";
    const auto out = stage_dir(cohort_, "features") / "ecg.csv";
    fs::create_directories(out.parent_path());
    ecg.write_csv(out);
    emitted(out);

    const auto catalogs = stage_dir(cohort_, "features");
    write_text(catalogs / "clinical_catalog.json",
               catalog_manifest_json("clinical", kClinicalCatalogVersion, clinical_catalog()));
    const auto& ts = TsDescriptorCatalog::default_catalog();
    write_text(catalogs / "ts_catalog.json", catalog_manifest_json("time_series", kTsCatalogVersion, ts.feature_specs()));
    summary_["details"] = {{"records", ecg.rows()}, {"features", ecg.cols()}};
  }

  void cohort() {
    const auto raw = raw_dir(cohort_);
    const auto ecg_path = stage_dir(cohort_, "features") / "ecg.csv";
    require_upstream(ecg_path, "extract --cohort " + std::string(name_of(cohort_)));
    require_upstream(raw / "echo.csv", "synth");
    require_upstream(raw / "ehr.ndjson", "synth");
    const bool internal = cohort_ == CohortKind::kInternal;
    const auto internal_dir = stage_dir(CohortKind::kInternal, "cohort");
    if (!internal) {
      require_upstream(internal_dir / "vocab_dx.json", "cohort --cohort internal");
      require_upstream(internal_dir / "vocab_med.json", "cohort --cohort internal");
    }

    const auto files = raw_ecg_files(cohort_);
    std::vector<EcgMetadata> metas(files.size());
    parallel_for(files.size(), [&](std::size_t i) { metas[i] = read_ecg_metadata(files[i]); });
    const auto echos = read_echo_csv(raw / "echo.csv");
    auto paired = pair_ecg_echo(metas, echos, cfg_.cohort.pairing_window_days);
    if (paired.examples.empty()) fail(ErrorCode::kInsufficientData, "no echo could be paired with an ECG");
    if (internal) {
      const auto splits = stratified_patient_split(paired.examples, cfg_.cohort.split, cfg_.stage_seed(kSeedSplit));
      for (std::size_t i = 0; i < splits.size(); ++i) paired.examples[i].split = splits[i];
    } else {
      for (auto& ex : paired.examples) ex.split = Split::kExternal;
    }
    log(std::to_string(paired.examples.size()) + " examples, " + std::to_string(paired.exclusions.size()) +
        " exclusions");

    const auto snapshots = read_ehr_ndjson(raw / "ehr.ndjson");
    const auto index = pipeline::index_snapshots(snapshots);
    pipeline::Vocabularies vocab;
    if (internal) {
      std::vector<CohortExample> train;
      for (const auto& ex : paired.examples) {
        if (ex.split == Split::kTrain) train.push_back(ex);
      }
      vocab = pipeline::fit_vocabularies(train, index, cfg_.ehr);
    } else {
      vocab.dx = CodeVocabulary::from_json(read_text(internal_dir / "vocab_dx.json"));
      vocab.med = CodeVocabulary::from_json(read_text(internal_dir / "vocab_med.json"));
    }
    const auto ehr = pipeline::build_ehr_matrix(paired.examples, index, vocab, cfg_.ehr);
    const auto ecg = FeatureMatrix::read_csv(ecg_path);
    auto fused = pipeline::fuse(paired.examples, ecg, ehr);
    for (const auto& [k, v] : provenance("cohort")) fused.metadata()[k] = v;
    fused.metadata()["ecg_columns"] = std::to_string(ecg.cols());
    fused.metadata()["ehr_columns"] = std::to_string(ehr.cols());

    const auto dir = stage_dir(cohort_, "cohort");
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_cohort_csv(paired.examples, dir / "cohort.csv");
    write_sidecar(dir / "cohort.csv", "cohort");
    emitted(dir / "cohort.csv");
    write_exclusions_csv(paired.exclusions, dir / "exclusions.csv");
    write_sidecar(dir / "exclusions.csv", "cohort");
    emitted(dir / "exclusions.csv");
    if (internal) {
      write_text(dir / "vocab_dx.json", vocab.dx.to_json());
      write_text(dir / "vocab_med.json", vocab.med.to_json());
    }
    fused.write_csv(dir / "features.csv");
    emitted(dir / "features.csv");

    std::vector<LvefClass> labels;
    for (const auto& ex : paired.examples) labels.push_back(ex.label);
    ojson summary;
    summary["cohort"] = std::string(name_of(cohort_));
    summary["examples"] = paired.examples.size();
    summary["patients"] = [&] {
      std::set<std::string> p;
      for (const auto& ex : paired.examples) p.insert(ex.patient_id);
      return p.size();
    }();
    auto& by_class = summary["class_counts"] = ojson::object();
    for (int k = 0; k < kNumClasses; ++k) {
      by_class[std::string(kClassNames[static_cast<std::size_t>(k)])] =
          std::count(labels.begin(), labels.end(), static_cast<LvefClass>(k));
    }
    auto& by_split = summary["split_counts"] = ojson::object();
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest, Split::kExternal}) {
      const auto n = std::count_if(paired.examples.begin(), paired.examples.end(),
                                   [s](const CohortExample& e) { return e.split == s; });
      if (n > 0) by_split[std::string(to_string(s))] = n;
    }
    auto& reasons = summary["exclusions"] = ojson::object();
    for (const auto& e : paired.exclusions) {
      reasons[e.reason] = reasons.value(e.reason, 0) + 1;
    }
    const auto nonempty = std::count_if(by_class.begin(), by_class.end(), [](const ojson& v) { return v.get<int>() > 0; });
    summary["ehr_statistics"] =
        nonempty >= 2 ? ojson::parse(summary_to_json(cohort_summary_stats(ehr, labels))) : ojson(nullptr);
    summary["provenance"] = provenance("cohort");
    write_text(dir / "summary.json", summary.dump(1) + "\n");
    summary_["details"] = {{"examples", paired.examples.size()},
                           {"exclusions", paired.exclusions.size()},
                           {"columns", fused.cols()}};
  }

  void train() {
    const auto dir = stage_dir(CohortKind::kInternal, "cohort");
    require_upstream(dir / "features.csv", "cohort");
    require_upstream(dir / "cohort.csv", "cohort");
    const auto fused = FeatureMatrix::read_csv(dir / "features.csv");
    const auto examples = read_cohort_csv(dir / "cohort.csv");
    auto params = cfg_.gbt;
    params.seed = cfg_.stage_seed(kSeedTrain);
    fs::create_directories(models_dir());
    ojson details;
    for (auto m : modalities()) {
      const std::string name(pipeline::to_string(m));
      log("training " + name);
      const auto trained = pipeline::train_modality(fused, examples, m, params);
      gbt::save_model(trained.model, model_path(m));
      write_sidecar(model_path(m), "train");
      emitted(model_path(m));
      write_text(thresholds_path(m), pipeline::thresholds_to_json(trained));
      write_sidecar(thresholds_path(m), "train");
      const auto& h = trained.model.history;
      details[name] = {{"rounds", trained.model.completed_rounds()},
                       {"features", trained.model.feature_names.size()},
                       {"final_train_mlogloss", h.empty() ? ojson(nullptr) : ojson(h.back().train_mlogloss)}};
    }
    summary_["details"] = details;
  }

  void evaluate() {
    const auto data = evaluation_rows(cohort_);
    eval::EvalOptions options;
    options.bootstrap_resamples = cfg_.eval.bootstrap_resamples;
    options.alpha = cfg_.eval.alpha;
    options.seed = cfg_.stage_seed(kSeedEval);
    const auto dir = stage_dir(cohort_, "eval");
    fs::create_directories(dir);
    ojson details;
    for (auto m : modalities()) {
      const std::string name(pipeline::to_string(m));
      log("evaluating " + name + " on the " + std::string(name_of(cohort_)) + " cohort");
      auto report = pipeline::evaluate_model(load_trained(m), data, options, cohort_tag(cohort_));
      report.provenance = provenance("evaluate");
      write_text(dir / (name + ".report.json"), eval::to_json(report));
      eval::write_roc_csv(report, dir / (name + ".roc.csv"));
      write_sidecar(dir / (name + ".roc.csv"), "evaluate");
      emitted(dir / (name + ".roc.csv"));
      auto& d = details[name];
      for (const auto& c : report.classes) d[c.class_name] = c.auroc.point;
    }
    summary_["details"] = {{"auroc", details}, {"n", data.y.size()}};
  }

  void explain() {
    const auto m = modality_.value_or(pipeline::Modality::kMultimodal);
    const std::string name(pipeline::to_string(m));
    const auto trained = load_trained(m);
    const auto data = evaluation_rows(cohort_);
    const auto X = pipeline::select_modality(data.X, m);
    if (X.rows() == 0) fail(ErrorCode::kEmptyMatrix, "no rows to explain");
    const auto labels = cfg_.explain.label_map.empty() ? explain::LabelMap::builtin()
                                                       : explain::LabelMap::from_csv(cfg_.explain.label_map);
    const auto dir = stage_dir(cohort_, "explain") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    log("explaining " + name + " on " + std::to_string(X.rows()) + " rows");

    ojson details;
    for (int k = 0; k < kNumClasses; ++k) {
      const std::string cls(kClassNames[static_cast<std::size_t>(k)]);
      auto shap = explain::shap_matrix(trained.model, X, k);
      shap.provenance = provenance("explain");
      explain::write_shap_csv(shap, dir / ("shap_" + cls + ".csv"));
      emitted(dir / ("shap_" + cls + ".csv"));

      const auto ranking = explain::global_importance(shap);
      std::string csv = "rank,feature,display_label,mapped,mean_abs_shap\n";
      for (std::size_t r = 0; r < ranking.size(); ++r) {
        const auto label = labels.label(ranking[r].feature);
        std::string text = label.text;
        if (text.find_first_of(",\"") != std::string::npos) {
          std::string quoted = "\"";
          for (char ch : text) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          text = quoted + "\"";
        }
        csv += std::to_string(r + 1) + "," + ranking[r].feature + "," + text + "," + (label.mapped ? "1" : "0") +
               "," + format_double(ranking[r].mean_abs) + "\n";
      }
      write_text(dir / ("importance_" + cls + ".csv"), csv);
      write_sidecar(dir / ("importance_" + cls + ".csv"), "explain");

      explain::StabilityOptions so;
      so.resamples = cfg_.explain.resamples;
      so.top_k = cfg_.explain.top_k;
      so.resample = cfg_.explain.resample;
      so.seed = derive_seed(cfg_.stage_seed(kSeedExplain), static_cast<std::uint64_t>(k));
      const auto resamples = explain::draw_resamples(shap.rows(), so);
      auto stability = explain::stability_from_resamples(shap, resamples, so);
      stability.class_index = k;
      auto sj = ojson::parse(explain::to_json(stability));
      sj["provenance"] = provenance("explain");
      write_text(dir / ("stability_" + cls + ".json"), sj.dump(1) + "\n");

      ojson dependence = ojson::array();
      const auto top = std::min<std::size_t>(static_cast<std::size_t>(cfg_.explain.dependence_features), ranking.size());
      for (std::size_t r = 0; r < top; ++r) {
        const auto j = *X.column_index(ranking[r].feature);
        std::vector<double> phi(shap.rows());
        for (std::size_t i = 0; i < shap.rows(); ++i) phi[i] = shap.at(i, j);
        try {
          auto d = ojson::parse(explain::to_json(explain::dependence_data(X.column(j), phi, ranking[r].feature)));
          d["display_label"] = labels.label(ranking[r].feature).text;
          dependence.push_back(std::move(d));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kFewerThanTwoPoints) throw;
          log("no dependence data for " + ranking[r].feature + ": " + e.what());
        }
      }
      ojson dj{{"class", cls}, {"features", dependence}, {"provenance", provenance("explain")}};
      write_text(dir / ("dependence_" + cls + ".json"), dj.dump() + "\n");

      ojson top_features = ojson::array();
      for (std::size_t r = 0; r < std::min<std::size_t>(static_cast<std::size_t>(so.top_k), ranking.size()); ++r) {
        top_features.push_back(ranking[r].feature);
      }
      details[cls] = {{"base", shap.base}, {"top_features", top_features}, {"mean_jaccard", stability.mean_jaccard}};
    }
    summary_["details"] = {{"modality", name}, {"rows", X.rows()}, {"classes", details}};
  }

  void report() {
    auto load_report = [&](CohortKind c, pipeline::Modality m) {
      const auto p = stage_dir(c, "eval") / (std::string(pipeline::to_string(m)) + ".report.json");
      require_upstream(p, "evaluate --cohort " + std::string(name_of(c)));
      return ojson::parse(read_text(p));
    };
    auto estimate = [](const ojson& e) {
      return ojson{{"point", e.at("point")}, {"ci_lower", e.at("ci").at(0)}, {"ci_upper", e.at("ci").at(1)}};
    };
    auto auroc_table = [&](CohortKind c) {
      ojson t = ojson::object();
      for (auto m : pipeline::kModalities) {
        const auto r = load_report(c, m);
        auto& row = t[std::string(pipeline::to_string(m))];
        for (const auto& cls : r.at("classes")) row[cls.at("class").get<std::string>()] = estimate(cls.at("auroc"));
      }
      return t;
    };
    auto threshold_table = [&](CohortKind c) {
      const auto r = load_report(c, pipeline::Modality::kMultimodal);
      ojson t = ojson::object();
      for (const auto& cls : r.at("classes")) {
        t[cls.at("class").get<std::string>()] = {{"threshold", cls.at("threshold")},
                                                  {"f1", estimate(cls.at("f1"))},
                                                  {"sensitivity", estimate(cls.at("sensitivity"))},
                                                  {"specificity", estimate(cls.at("specificity"))}};
      }
      return t;
    };

    ojson j;
    j["table1_internal_auroc"] = auroc_table(CohortKind::kInternal);
    j["table2_internal_multimodal_operating_points"] = threshold_table(CohortKind::kInternal);
    j["table3_external_auroc"] = auroc_table(CohortKind::kExternal);
    j["table4_external_multimodal_operating_points"] = threshold_table(CohortKind::kExternal);
    for (CohortKind c : {CohortKind::kInternal, CohortKind::kExternal}) {
      const auto p = stage_dir(c, "cohort") / "summary.json";
      require_upstream(p, "cohort --cohort " + std::string(name_of(c)));
      auto s = ojson::parse(read_text(p));
      s.erase("ehr_statistics");
      s.erase("provenance");
      j["cohorts"][std::string(name_of(c))] = s;
    }
    j["provenance"] = provenance("report");
    const auto dir = root_ / "report";
    write_text(dir / "tables.json", j.dump(1) + "\n");
    write_text(dir / "tables.md", markdown(j));
  }

  static std::string cell(const ojson& e) {
    auto f = [](const ojson& v) {
      if (v.is_null()) return std::string("NA");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", v.get<double>());
      return std::string(buf);
    };
    return f(e.at("point")) + " [" + f(e.at("ci_lower")) + "-" + f(e.at("ci_upper")) + "]";
  }

  static std::string markdown(const ojson& j) {
    std::ostringstream md;
    const std::array<std::string, 4> classes = {"severe", "moderate", "mild", "normal"};
    auto auroc = [&](const char* title, const ojson& t) {
      md << "## " << title << "\n\n| Modality | Severe | Moderate | Mild | Normal |\n|---|---|---|---|---|\n";
      for (const auto& [modality, row] : t.items()) {
        md << "| " << modality;
        for (const auto& c : classes) md << " | " << cell(row.at(c));
        md << " |\n";
      }
      md << "\n";
    };
    auto points = [&](const char* title, const ojson& t) {
      md << "## " << title << "\n\n| Class | F1 | Sensitivity | Specificity |\n|---|---|---|---|\n";
      for (const auto& c : classes) {
        const auto& r = t.at(c);
        md << "| " << c << " | " << cell(r.at("f1")) << " | " << cell(r.at("sensitivity")) << " | "
           << cell(r.at("specificity")) << " |\n";
      }
      md << "\n";
    };
    md << "# LVEF classification summary\n\n";
    md << "Bootstrapped " << "95% intervals in brackets. Synthetic data.\n\n";
    auroc("Table 1. AUROC, internal held-out test set", j.at("table1_internal_auroc"));
    points("Table 2. Multimodal operating points, internal test set (F1-optimal thresholds from validation)",
           j.at("table2_internal_multimodal_operating_points"));
    auroc("Table 3. AUROC, temporal external cohort", j.at("table3_external_auroc"));
    points("Table 4. Multimodal operating points, temporal external cohort",
           j.at("table4_external_multimodal_operating_points"));
    md << "Config hash " << j.at("provenance").at("config_hash").get<std::string>() << "\n";
    return md.str();
  }

  Config cfg_;
  fs::path root_;
  std::ostream& err_;
  CohortKind cohort_ = CohortKind::kInternal;
  std::optional<pipeline::Modality> modality_;
  ojson summary_;
  ojson artifacts_ = ojson::array();
};

bool is_validation_error(ErrorCode code) {
  return code == ErrorCode::kConfigInvalid || code == ErrorCode::kInvalidArgument;
}

void print_error(std::ostream& out, std::ostream& err, const std::string& command, std::string_view code,
                 const std::string& message) {
  err << "[lvef] error: " << message << '\n';
  ojson j;
  j["command"] = command;
  j["status"] = "error";
  j["error"] = {{"code", std::string(code)}, {"message", message}};
  out << j.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options opts;
  CLI::App app{"Multimodal LVEF classification pipeline"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  app.add_option("--config", opts.config_path, "JSON config file (defaults apply when omitted)");
  app.add_option("--seed", opts.seed, "Override the config seed");
  app.add_option("--threads", opts.threads, "Worker thread cap (0 = hardware concurrency)");
  app.add_option("--out-dir", opts.out_dir, "Artifact root directory");
  app.add_option("--cohort", opts.cohort, "Cohort for preprocess/extract/cohort/evaluate/explain")
      ->check(CLI::IsMember({"internal", "external"}));
  app.add_option("--modality", opts.modality, "Restrict train/evaluate/explain to one modality")
      ->check(CLI::IsMember({"ehr_only", "ecg_only", "multimodal"}));
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "Generate the internal and external synthetic cohorts"},
      {"preprocess", "Derive limb leads, filter, and write per-record QC"},
      {"extract", "Extract clinical and time-series ECG features"},
      {"cohort", "Pair ECGs with echos, label, split, and fuse EHR features"},
      {"train", "Train one GBT per modality on the development cohort"},
      {"evaluate", "Evaluate saved models with bootstrap confidence intervals"},
      {"explain", "TreeSHAP attributions, importance, stability and dependence data"},
      {"report", "Collate Tables 1-4 and cohort summaries"}};
  for (const auto& [name, help] : commands) {
    app.add_subcommand(name, help)->callback([&opts, name = name] { opts.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(out, err, opts.command, "UsageError", e.what());
    return kExitValidation;
  }

  try {
    Config cfg = opts.config_path.empty() ? parse_config("{}") : load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.threads > 0) set_max_threads(opts.threads);
    Stage stage(std::move(cfg), opts, err);
    out << stage.run(opts.command).dump() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    print_error(out, err, opts.command, error_code_name(e.code()), e.what());
    return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    print_error(out, err, opts.command, "RuntimeError", e.what());
    return kExitRuntime;
  }
}

}  // namespace lvef::cli

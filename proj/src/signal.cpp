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
#include "lvef/signal.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lvef {

EcgRecord::EcgRecord(EcgMetadata meta, std::vector<Lead> leads)
    : meta_(std::move(meta)), leads_(std::move(leads)) {
  if (!(meta_.sampling_rate > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "sampling_rate must be positive");
  }
  for (const auto& l : leads_) {
    if (l.samples.size() != leads_.front().samples.size()) {
      fail(ErrorCode::kLengthMismatch, "lead " + l.name + " has " +
                                           std::to_string(l.samples.size()) + " samples, expected " +
                                           std::to_string(leads_.front().samples.size()));
    }
  }
}

const Lead* EcgRecord::find(std::string_view name) const {
  for (const auto& l : leads_) {
    if (l.name == name) return &l;
  }
  return nullptr;
}

const Lead& EcgRecord::lead(std::string_view name) const {
  const Lead* l = find(name);
  if (l == nullptr) {
    fail(ErrorCode::kMissingLead, "lead " + std::string(name) + " absent from record " +
                                      meta_.record_id);
  }
  return *l;
}

std::size_t EcgRecord::samples_per_lead() const {
  return leads_.empty() ? 0 : leads_.front().samples.size();
}

void EcgRecord::validate_measured() const {
  for (auto name : kMeasuredLeads) {
    if (lead(name).samples.size() != samples_per_lead()) {
      fail(ErrorCode::kLengthMismatch, "uneven lead lengths in record " + meta_.record_id);
    }
  }
}

TwelveLeadEcg derive_limb_leads(const EcgRecord& ecg) {
  const Lead& lead_i = ecg.lead("I");
  const Lead& lead_ii = ecg.lead("II");
  const auto& a = lead_i.samples;
  const auto& b = lead_ii.samples;
  if (a.size() != b.size()) {
    fail(ErrorCode::kLengthMismatch, "leads I and II differ in length");
  }
  const std::size_t n = a.size();
  Lead iii{"III", std::vector<double>(n), LeadSource::kDerived};
  Lead avr{"aVR", std::vector<double>(n), LeadSource::kDerived};
  Lead avl{"aVL", std::vector<double>(n), LeadSource::kDerived};
  Lead avf{"aVF", std::vector<double>(n), LeadSource::kDerived};
  for (std::size_t t = 0; t < n; ++t) {
    iii.samples[t] = b[t] - a[t];
    avr.samples[t] = -(a[t] + b[t]) / 2.0;
    avl.samples[t] = a[t] - b[t] / 2.0;
    avf.samples[t] = b[t] - a[t] / 2.0;
  }

  std::vector<Lead> out;
  out.reserve(kTwelveLeads.size());
  for (auto name : kTwelveLeads) {
    if (name == "III") {
      out.push_back(std::move(iii));
    } else if (name == "aVR") {
      out.push_back(std::move(avr));
    } else if (name == "aVL") {
      out.push_back(std::move(avl));
    } else if (name == "aVF") {
      out.push_back(std::move(avf));
    } else if (const Lead* m = ecg.find(name)) {
      Lead copy = *m;
      copy.source = LeadSource::kMeasured;
      out.push_back(std::move(copy));
    }
  }
  return TwelveLeadEcg(ecg.meta(), std::move(out));
}

// ---------------------------------------------------------------------------

void PreprocessConfig::validate(double fs) const {
  if (filter_order < 1) fail(ErrorCode::kInvalidArgument, "filter_order must be >= 1");
  if (!(highpass_cutoff > 0.0 && highpass_cutoff < powerline_freq && powerline_freq < fs / 2.0)) {
    fail(ErrorCode::kInvalidArgument,
         "require 0 < highpass_cutoff < powerline_freq < sampling_rate / 2");
  }
  if (!(notch_bandwidth > 0.0)) fail(ErrorCode::kInvalidArgument, "notch_bandwidth must be > 0");
}

std::vector<double> filter_lead(std::span<const double> x, double fs, const PreprocessConfig& cfg) {
  cfg.validate(fs);
  if (x.size() < 10 * static_cast<std::size_t>(cfg.filter_order)) {
    fail(ErrorCode::kInvalidArgument, "signal shorter than 10 x filter_order samples");
  }
  const auto highpass = filter::butterworth_highpass(cfg.filter_order, cfg.highpass_cutoff, fs);
  const auto notch = filter::iir_notch(cfg.powerline_freq, cfg.notch_bandwidth, fs);
  if (cfg.zero_phase) {
    auto y = filter::filtfilt(highpass, x);
    return filter::filtfilt(notch, y);
  }
  auto y = filter::sosfilt(highpass, x);
  return filter::sosfilt(notch, y);
}

PreprocessedLead standardize(std::span<const double> x) {
  PreprocessedLead out;
  out.samples.assign(x.begin(), x.end());
  if (x.empty()) {
    out.degenerate = true;
    return out;
  }
  const double m = mean(x);
  const double sd = std::sqrt(variance(x));
  // Filter round-off leaves ~1e-16 residue on constant inputs.
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (!(sd > 1e-12 * std::max(1.0, scale)) || !std::isfinite(sd)) {
    std::fill(out.samples.begin(), out.samples.end(), 0.0);
    out.degenerate = true;
    return out;
  }
  for (double& v : out.samples) v = (v - m) / sd;
  return out;
}

PreprocessedLead preprocess_lead(std::span<const double> x, double fs, const PreprocessConfig& cfg) {
  auto filtered = filter_lead(x, fs, cfg);
  if (!cfg.standardize) return {std::move(filtered), false};
  return standardize(filtered);
}

TwelveLeadEcg preprocess_record(const TwelveLeadEcg& ecg, const PreprocessConfig& cfg) {
  std::vector<Lead> out;
  out.reserve(ecg.leads().size());
  for (const auto& l : ecg.leads()) {
    auto p = preprocess_lead(l.samples, ecg.meta().sampling_rate, cfg);
    out.push_back(Lead{l.name, std::move(p.samples), l.source, p.degenerate});
  }
  return TwelveLeadEcg(ecg.meta(), std::move(out));
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  if (is_missing(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail(ErrorCode::kIoError, "cannot format double");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return kMissing;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorCode::kParseError, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write_ecg(const EcgRecord& ecg, const std::filesystem::path& csv_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) fail(ErrorCode::kIoError, "cannot write " + csv_path.string());
  const auto& leads = ecg.leads();
  for (std::size_t j = 0; j < leads.size(); ++j) {
    csv << (j ? "," : "") << leads[j].name;
  }
  csv << '\n';
  std::string line;
  for (std::size_t t = 0; t < ecg.samples_per_lead(); ++t) {
    line.clear();
    for (std::size_t j = 0; j < leads.size(); ++j) {
      if (j) line += ',';
      line += format_double(leads[j].samples[t]);
    }
    line += '\n';
    csv << line;
  }

  nlohmann::ordered_json meta;
  meta["record_id"] = ecg.meta().record_id;
  meta["patient_id"] = ecg.meta().patient_id;
  meta["acquired_at"] = format_timestamp(ecg.meta().acquired_at);
  meta["sampling_rate"] = ecg.meta().sampling_rate;
  std::ofstream side(sidecar_path(csv_path), std::ios::binary);
  if (!side) fail(ErrorCode::kIoError, "cannot write sidecar for " + csv_path.string());
  side << meta.dump(2) << '\n';
}

EcgMetadata read_ecg_metadata(const std::filesystem::path& csv_path) {
  const auto text = read_file(sidecar_path(csv_path));
  try {
    const auto j = nlohmann::json::parse(text);
    EcgMetadata meta;
    meta.record_id = j.at("record_id").get<std::string>();
    meta.patient_id = j.at("patient_id").get<std::string>();
    meta.acquired_at = parse_timestamp(j.at("acquired_at").get<std::string>());
    meta.sampling_rate = j.at("sampling_rate").get<double>();
    return meta;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, "bad ECG sidecar for " + csv_path.string() + ": " + e.what());
  }
}

EcgRecord read_ecg(const std::filesystem::path& csv_path) {
  EcgMetadata meta = read_ecg_metadata(csv_path);
  const auto text = read_file(csv_path);
  std::string_view view(text);
  auto next_line = [&view]() -> std::optional<std::string_view> {
    if (view.empty()) return std::nullopt;
    auto nl = view.find('\n');
    auto line = view.substr(0, nl);
    view = nl == std::string_view::npos ? std::string_view{} : view.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };
  auto header = next_line();
  if (!header) fail(ErrorCode::kParseError, "empty ECG file " + csv_path.string());
  std::vector<Lead> leads;
  for (auto name : split_commas(*header)) leads.push_back(Lead{std::string(name), {}});
  while (auto line = next_line()) {
    if (line->empty()) continue;
    auto cells = split_commas(*line);
    if (cells.size() != leads.size()) {
      fail(ErrorCode::kParseError, "ragged row in " + csv_path.string());
    }
    for (std::size_t j = 0; j < cells.size(); ++j) leads[j].samples.push_back(parse_double(cells[j]));
  }
  const bool twelve = std::any_of(leads.begin(), leads.end(), [](const Lead& l) {
    return l.name == "III" || l.name == "aVR" || l.name == "aVL" || l.name == "aVF";
  });
  if (twelve) {
    for (auto& l : leads) {
      if (l.name == "III" || l.name == "aVR" || l.name == "aVL" || l.name == "aVF") {
        l.source = LeadSource::kDerived;
      }
    }
  }
  return EcgRecord(std::move(meta), std::move(leads));
}

}  // namespace lvef

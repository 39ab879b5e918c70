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
#include "lvef/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <numbers>

namespace lvef::synth {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kInvalidProfile, what);
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void SynthProfile::validate() const {
  require(hr_mean_bpm > 0.0 && std::isfinite(hr_mean_bpm), "hr_mean_bpm must be positive");
  require(hr_sd_bpm >= 0.0, "hr_sd_bpm must be nonnegative");
  require(rr_jitter_ms >= 0.0, "rr_jitter_ms must be nonnegative");
  for (double s : lead_scale) require(s > 0.0, "lead scales must be positive");
  require(qrs_width_ms > 0.0, "qrs_width_ms must be positive");
  require(qrs_sd_ms >= 0.0, "qrs_sd_ms must be nonnegative");
  require(t_scale > 0.0, "t_scale must be positive");
  require(noise_sd >= 0.0, "noise_sd must be nonnegative");
  require(powerline_amp >= 0.0, "powerline_amp must be nonnegative");
  require(powerline_hz > 0.0, "powerline_hz must be positive");
  require(baseline_wander_amp >= 0.0, "baseline_wander_amp must be nonnegative");
  require(amplitude_sd >= 0.0, "amplitude_sd must be nonnegative");
  require(wave_sd >= 0.0, "wave_sd must be nonnegative");
  for (const auto& [code, p] : diagnosis_priors) require(probability(p), "diagnosis prior out of [0, 1]: " + code);
  for (const auto& [name, p] : medication_priors) require(probability(p), "medication prior out of [0, 1]: " + name);
  for (const auto& [name, v] : vitals) {
    require(std::find(kVitalNames.begin(), kVitalNames.end(), name) != kVitalNames.end(), "unknown vital " + name);
    require(v.sd >= 0.0 && probability(v.p_observed), "invalid prior for vital " + name);
  }
  require(age_sd >= 0.0, "age_sd must be nonnegative");
  require(probability(p_male) && probability(p_current_smoker), "demographic probabilities out of [0, 1]");
}

namespace {

struct CodePrior {
  const char* code;
  double normal;
  double severe;
};

// Reduced-EF classes interpolate toward the severe value.
constexpr std::array<double, kNumClasses> kSeverityWeight = {1.0, 0.7, 0.4, 0.0};

constexpr CodePrior kDiagnoses[] = {
    {"I10", 0.45, 0.65},    {"E11.9", 0.22, 0.35},  {"E78.5", 0.35, 0.45},  {"I48.91", 0.08, 0.35},
    {"N18.3", 0.06, 0.25},  {"I25.10", 0.12, 0.45}, {"Z95.0", 0.02, 0.30},  {"Z95.810", 0.01, 0.15},
    {"I50.22", 0.02, 0.75}, {"J44.9", 0.08, 0.15},  {"E66.9", 0.15, 0.18},  {"I42.0", 0.005, 0.35},
    {"R06.00", 0.05, 0.25}, {"Z79.01", 0.05, 0.30}, {"I34.0", 0.03, 0.15},  {"K21.9", 0.12, 0.12},
    {"M54.5", 0.10, 0.09},  {"F32.9", 0.08, 0.10},  {"G47.33", 0.07, 0.12}, {"E03.9", 0.08, 0.10},
    {"D64.9", 0.06, 0.15},  {"N39.0", 0.04, 0.06},  {"J45.909", 0.06, 0.06}, {"M17.11", 0.05, 0.05},
    {"I73.9", 0.03, 0.07},  {"R00.0", 0.03, 0.08},  {"I47.2", 0.005, 0.08}, {"E87.1", 0.02, 0.08},
    {"Z00.00", 0.20, 0.20}, {"Z23", 0.15, 0.15},    {"R51.9", 0.05, 0.05},  {"L30.9", 0.04, 0.04},
    {"H52.4", 0.05, 0.05},  {"R10.9", 0.06, 0.06},  {"J06.9", 0.07, 0.06},  {"M79.1", 0.04, 0.04},
    {"R53.83", 0.06, 0.12}, {"Z12.11", 0.08, 0.06}, {"E55.9", 0.07, 0.07},  {"R73.03", 0.06, 0.05},
    {"G43.909", 0.03, 0.02}, {"F41.9", 0.07, 0.07}, {"N40.0", 0.05, 0.07},  {"M81.0", 0.04, 0.04},
    {"K59.00", 0.04, 0.06}, {"R42", 0.04, 0.06},    {"Z87.891", 0.10, 0.18}, {"E83.42", 0.01, 0.06},
    {"R60.0", 0.03, 0.30},  {"I95.9", 0.01, 0.08},  {"Z68.41", 0.03, 0.03}, {"B34.9", 0.03, 0.03},
    {"H91.90", 0.03, 0.04}, {"L57.0", 0.02, 0.02},  {"Z13.6", 0.05, 0.03},  {"R94.31", 0.02, 0.15},
};

constexpr CodePrior kMedications[] = {
    {"FUROSEMIDE 40 MG TABLET", 0.04, 0.70},
    {"CARVEDILOL 12.5 MG TABLET", 0.03, 0.50},
    {"METOPROLOL SUCCINATE ER 50 MG", 0.12, 0.35},
    {"LISINOPRIL 10 MG TABLET", 0.20, 0.30},
    {"SACUBITRIL-VALSARTAN 49-51 MG", 0.002, 0.30},
    {"SPIRONOLACTONE 25 MG TABLET", 0.02, 0.35},
    {"ATORVASTATIN 40 MG TABLET", 0.30, 0.50},
    {"ASPIRIN 81 MG CHEWABLE", 0.30, 0.50},
    {"APIXABAN 5 MG TABLET", 0.05, 0.30},
    {"WARFARIN 5 MG TABLET", 0.02, 0.10},
    {"METFORMIN 500 MG TABLET", 0.15, 0.20},
    {"AMLODIPINE 5 MG TABLET", 0.20, 0.15},
    {"HYDROCHLOROTHIAZIDE 25 MG TABLET", 0.15, 0.08},
    {"INSULIN GLARGINE 100 UNIT/ML", 0.05, 0.12},
    {"LEVOTHYROXINE 50 MCG TABLET", 0.10, 0.10},
    {"OMEPRAZOLE 20 MG CAPSULE", 0.15, 0.15},
    {"GABAPENTIN 300 MG CAPSULE", 0.07, 0.08},
    {"SERTRALINE 50 MG TABLET", 0.06, 0.06},
    {"DIGOXIN 125 MCG TABLET", 0.005, 0.10},
    {"POTASSIUM CHLORIDE ER 20 MEQ", 0.03, 0.30},
    {"ALBUTEROL HFA 90 MCG", 0.08, 0.10},
    {"PREDNISONE 10 MG TABLET", 0.04, 0.05},
    {"TAMSULOSIN 0.4 MG CAPSULE", 0.05, 0.07},
    {"MONTELUKAST 10 MG TABLET", 0.04, 0.04},
    {"CETIRIZINE 10 MG TABLET", 0.06, 0.05},
    {"TRAMADOL 50 MG TABLET", 0.04, 0.05},
    {"BUMETANIDE 1 MG TABLET", 0.005, 0.12},
    {"HYDRALAZINE 25 MG TABLET", 0.01, 0.10},
    {"ISOSORBIDE MONONITRATE ER 30 MG", 0.02, 0.15},
    {"CLOPIDOGREL 75 MG TABLET", 0.04, 0.20},
};

struct Interp {
  double w;
  double operator()(double normal, double severe) const { return normal + w * (severe - normal); }
};

}  // namespace

std::array<SynthProfile, kNumClasses> default_profiles() {
  // Effect sizes are tuned so that each modality alone separates the severe
  // class moderately well and the two carry independent evidence.
  constexpr double kEhrStrength = 0.7;
  std::array<SynthProfile, kNumClasses> out;
  for (int k = 0; k < kNumClasses; ++k) {
    const Interp f{kSeverityWeight[static_cast<std::size_t>(k)]};
    const Interp e{kSeverityWeight[static_cast<std::size_t>(k)] * kEhrStrength};
    SynthProfile& p = out[static_cast<std::size_t>(k)];
    p.label = static_cast<LvefClass>(k);
    p.hr_mean_bpm = f(68.0, 75.0);
    p.hr_sd_bpm = 10.0;
    p.rr_jitter_ms = f(15.0, 22.0);
    // Lateral leads (I, V5, V6) lose amplitude with worsening function.
    const double lateral = f(1.0, 0.8);
    p.lead_scale = {lateral, 1.0, 1.0, 1.0, f(1.0, 0.9), f(1.0, 0.85), lateral, lateral};
    p.qrs_width_ms = f(92.0, 99.0);
    p.qrs_sd_ms = 9.0;
    p.t_scale = f(1.0, 0.85);
    p.noise_sd = 0.02;
    p.powerline_amp = 0.02;
    p.baseline_wander_amp = 0.08;
    p.amplitude_sd = 0.2;
    p.wave_sd = 0.25;
    for (const auto& d : kDiagnoses) p.diagnosis_priors[d.code] = e(d.normal, d.severe);
    for (const auto& m : kMedications) p.medication_priors[m.code] = e(m.normal, m.severe);
    p.vitals["bmi"] = {e(29.0, 30.0), 6.0, 0.85};
    p.vitals["systolic_bp"] = {e(132.0, 120.0), 17.0, 0.9};
    p.vitals["diastolic_bp"] = {e(78.0, 73.0), 10.0, 0.9};
    p.vitals["temperature_f"] = {98.1, 0.5, 0.7};
    p.vitals["pulse"] = {e(72.0, 82.0), 12.0, 0.9};
    p.age_mean = e(60.0, 67.0);
    p.age_sd = 13.0;
    p.p_male = e(0.45, 0.65);
    p.p_current_smoker = e(0.13, 0.20);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Per-lead wave amplitudes (mV) for I, II, V1..V6.
struct LeadMorphology {
  double p, q, r, s, t;
};
constexpr std::array<LeadMorphology, 8> kMorphology = {{
    {0.08, -0.05, 0.60, -0.15, 0.20},
    {0.15, -0.08, 1.10, -0.25, 0.30},
    {0.05, -0.02, 0.30, -1.00, -0.10},
    {0.06, -0.02, 0.60, -1.20, 0.30},
    {0.07, -0.03, 0.90, -0.80, 0.40},
    {0.08, -0.06, 1.30, -0.50, 0.40},
    {0.09, -0.08, 1.50, -0.30, 0.35},
    {0.08, -0.08, 1.20, -0.20, 0.30},
}};

constexpr double kEdgeMs = 250.0;

// Adds amp_j * exp(-(t - center)^2 / (2 sd^2)) to every lead j.
void add_wave(std::vector<std::vector<double>>& leads, const std::array<double, 8>& amps, double center,
              double sd) {
  const auto n = static_cast<std::ptrdiff_t>(leads.front().size());
  const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(center - 5.0 * sd)));
  const auto hi = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(std::ceil(center + 5.0 * sd)));
  for (std::ptrdiff_t t = lo; t <= hi; ++t) {
    const double z = (static_cast<double>(t) - center) / sd;
    const double g = std::exp(-0.5 * z * z);
    for (std::size_t j = 0; j < leads.size(); ++j) leads[j][static_cast<std::size_t>(t)] += amps[j] * g;
  }
}

}  // namespace

SynthRecord generate_record(const SynthProfile& profile, std::uint64_t seed, EcgMetadata meta) {
  profile.validate();
  if (!(meta.sampling_rate > 0.0)) meta.sampling_rate = kDefaultSamplingRate;
  const double fs = meta.sampling_rate;
  const auto n = static_cast<std::size_t>(std::llround(kDefaultDurationSeconds * fs));
  const double ms = fs / 1000.0;  // samples per millisecond
  Rng rng(seed);

  std::array<double, 8> gain{};
  for (std::size_t j = 0; j < gain.size(); ++j) {
    gain[j] = profile.lead_scale[j] * std::exp(profile.amplitude_sd * rng.normal());
  }
  const double hr = std::clamp(rng.normal(profile.hr_mean_bpm, profile.hr_sd_bpm), 35.0, 170.0);
  const double rr_base = 60000.0 / hr;
  const double qrs = std::clamp(rng.normal(profile.qrs_width_ms, profile.qrs_sd_ms), 60.0, 180.0);

  SynthRecord out;
  double r_ms = kEdgeMs + rng.uniform() * rr_base;
  const double end_ms = kDefaultDurationSeconds * 1000.0 - kEdgeMs;
  std::vector<std::size_t> r_samples;
  while (r_ms <= end_ms) {
    r_samples.push_back(static_cast<std::size_t>(std::llround(r_ms * ms)));
    const double rr = std::max(300.0, rr_base + profile.rr_jitter_ms * rng.normal());
    r_ms += rr;
  }

  std::vector<std::vector<double>> leads(8, std::vector<double>(n, 0.0));
  const auto amps = [&](double LeadMorphology::*wave, double scale) {
    scale *= std::exp(profile.wave_sd * rng.normal());
    std::array<double, 8> a{};
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = kMorphology[j].*wave * gain[j] * scale;
    return a;
  };
  const auto p_amp = amps(&LeadMorphology::p, 1.0);
  const auto q_amp = amps(&LeadMorphology::q, 1.0);
  const auto r_amp = amps(&LeadMorphology::r, 1.0);
  const auto s_amp = amps(&LeadMorphology::s, 1.0);
  const auto t_amp = amps(&LeadMorphology::t, profile.t_scale);

  // Rendered from neighbours of the visible R peaks too, so edge beats are
  // complete waveforms rather than truncated templates.
  const double q_offset = qrs * 4.0 / 9.0;
  for (std::size_t b = 0; b < r_samples.size(); ++b) {
    const double r = static_cast<double>(r_samples[b]);
    const double rr_ms = b + 1 < r_samples.size() ? (static_cast<double>(r_samples[b + 1]) - r) / ms
                         : b > 0                  ? (r - static_cast<double>(r_samples[b - 1])) / ms
                                                  : rr_base;
    const double t_offset = std::clamp(300.0 * std::sqrt(rr_ms / 1000.0), 220.0, 340.0);
    const double p_c = r - 170.0 * ms;
    const double q_c = r - q_offset * ms;
    const double s_c = r + q_offset * ms;
    const double t_c = r + t_offset * ms;
    add_wave(leads, p_amp, p_c, 22.0 * ms);
    add_wave(leads, q_amp, q_c, qrs / 14.0 * ms);
    add_wave(leads, r_amp, r, qrs / 10.0 * ms);
    add_wave(leads, s_amp, s_c, qrs / 14.0 * ms);
    add_wave(leads, t_amp, t_c, 45.0 * ms);
    GroundTruthBeat gt;
    gt.p_peak = static_cast<std::size_t>(std::llround(p_c));
    gt.q = static_cast<std::size_t>(std::llround(q_c));
    gt.r = r_samples[b];
    gt.s = static_cast<std::size_t>(std::llround(s_c));
    gt.t_peak = static_cast<std::size_t>(std::llround(t_c));
    out.beats.push_back(gt);
    if (b > 0) out.rr_ms.push_back(static_cast<double>(r_samples[b] - r_samples[b - 1]) / ms);
  }

  const double wander_hz = rng.uniform(0.1, 0.4);
  const double wander_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double mains_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (std::size_t t = 0; t < n; ++t) {
    const double sec = static_cast<double>(t) / fs;
    const double common =
        profile.baseline_wander_amp * std::sin(2.0 * std::numbers::pi * wander_hz * sec + wander_phase) +
        profile.powerline_amp * std::sin(2.0 * std::numbers::pi * profile.powerline_hz * sec + mains_phase);
    for (auto& lead : leads) lead[t] += common;
  }
  std::vector<Lead> out_leads;
  for (std::size_t j = 0; j < leads.size(); ++j) {
    auto& x = leads[j];
    if (profile.noise_sd > 0.0) {
      for (double& v : x) v += profile.noise_sd * rng.normal();
    }
    // 1 uV resolution, as from an acquisition ADC.
    for (double& v : x) v = std::round(v * 1000.0) / 1000.0;
    out_leads.push_back({std::string(kMeasuredLeads[j]), std::move(x), LeadSource::kMeasured, false});
  }
  out.ecg = EcgRecord(std::move(meta), std::move(out_leads));
  return out;
}

// ---------------------------------------------------------------------------

std::array<std::size_t, kNumClasses> class_counts(std::size_t n,
                                                  const std::array<double, kNumClasses>& prevalences) {
  double total = 0.0;
  for (double p : prevalences) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kInvalidPrevalence, "prevalences must lie in [0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidPrevalence, "prevalences sum to " + format_double(total) + ", not 1");
  }
  std::array<std::size_t, kNumClasses> counts{};
  std::array<double, kNumClasses> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double exact = static_cast<double>(n) * prevalences[k];
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::array<std::size_t, kNumClasses> order = {0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % order.size()]];
  return counts;
}

namespace {

constexpr std::array<std::pair<double, double>, kNumClasses> kLvefBands = {
    {{10.0, 30.0}, {30.0, 40.0}, {40.0, 50.0}, {50.0, 75.0}}};

double draw_lvef(Rng& rng, LvefClass c) {
  const auto [lo, hi] = kLvefBands[static_cast<std::size_t>(c)];
  // One decimal, truncated so the value stays inside [lo, hi).
  double v = std::floor(rng.uniform(lo, hi) * 10.0) / 10.0;
  return std::clamp(v, lo, hi);
}

std::string make_id(const std::string& prefix, const char* kind, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06zu", kind, i);
  return prefix + buf;
}

Timestamp add_days(Timestamp t, double days) {
  return t + std::chrono::seconds(static_cast<long long>(std::llround(days * 86400.0)));
}

struct PatientPlan {
  std::string id;
  LvefClass label = LvefClass::kNormal;
  std::vector<Timestamp> index_dates;
};

EhrSnapshot draw_snapshot(const PatientPlan& patient, const SynthProfile& p, std::uint64_t seed) {
  Rng rng(seed);
  EhrSnapshot s;
  s.patient_id = patient.id;
  s.age = std::round(std::clamp(rng.normal(p.age_mean, p.age_sd), 18.0, 98.0));
  s.sex = rng.bernoulli(p.p_male) ? "Male" : "Female";
  static const std::array<std::pair<const char*, double>, 6> kRace = {
      {{"White", 0.55}, {"Black", 0.2}, {"Hispanic", 0.12}, {"Asian", 0.06}, {"Other", 0.04}, {"", 0.03}}};
  double u = rng.uniform();
  for (const auto& [name, w] : kRace) {
    s.race = name;
    if ((u -= w) < 0.0) break;
  }
  const double smoke = rng.uniform();
  s.smoking_status = smoke < p.p_current_smoker          ? "Current"
                     : smoke < p.p_current_smoker + 0.3 ? "Former"
                     : smoke < 0.95                     ? "Never"
                                                        : "";

  for (Timestamp index : patient.index_dates) {
    const auto draw_events = [&](const std::map<std::string, double>& priors, std::vector<CodeEvent>& out) {
      for (const auto& [code, prob] : priors) {
        if (rng.bernoulli(prob)) out.push_back({code, add_days(index, -rng.uniform(1.0, 180.0))});
        // Older history and post-index events must not reach the features.
        if (rng.bernoulli(0.5 * prob)) out.push_back({code, add_days(index, -rng.uniform(200.0, 900.0))});
        if (rng.bernoulli(0.03)) out.push_back({code, add_days(index, rng.uniform(1.0, 30.0))});
      }
    };
    draw_events(p.diagnosis_priors, s.diagnoses);
    draw_events(p.medication_priors, s.medications);
    for (auto name : kVitalNames) {
      const auto it = p.vitals.find(std::string(name));
      if (it == p.vitals.end()) continue;
      const VitalPrior& v = it->second;
      const auto value = [&] { return std::round(rng.normal(v.mean, v.sd) * 10.0) / 10.0; };
      if (rng.bernoulli(v.p_observed)) s.vitals.push_back({std::string(name), value(), add_days(index, -rng.uniform(1.0, 90.0))});
      if (rng.bernoulli(0.5)) s.vitals.push_back({std::string(name), value(), add_days(index, -rng.uniform(200.0, 600.0))});
    }
  }
  const auto by_date = [](const auto& a, const auto& b) { return a.date < b.date; };
  std::stable_sort(s.diagnoses.begin(), s.diagnoses.end(), by_date);
  std::stable_sort(s.medications.begin(), s.medications.end(), by_date);
  std::stable_sort(s.vitals.begin(), s.vitals.end(), by_date);
  return s;
}

}  // namespace

SynthRecord SynthCohort::record(std::size_t i) const {
  const auto& plan = records.at(i);
  return generate_record(profiles[static_cast<std::size_t>(plan.label)], plan.seed, plan.meta);
}

SynthCohort generate_cohort(const CohortOptions& o, const std::array<SynthProfile, kNumClasses>& profiles) {
  for (const auto& p : profiles) p.validate();
  const auto counts = class_counts(o.n, o.prevalences);
  if (!(o.pairing_window_days > 0.0)) fail(ErrorCode::kInvalidArgument, "pairing window must be positive");
  for (double f : {o.repeat_patient_fraction, o.excluded_echo_fraction, o.decoy_ecg_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) fail(ErrorCode::kInvalidArgument, "cohort fractions must lie in [0, 1]");
  }
  const Timestamp start = parse_timestamp(o.start_date);
  const Timestamp end = parse_timestamp(o.end_date);
  const double span_days = days_between(start, end);
  if (!(span_days > 0.0)) fail(ErrorCode::kInvalidArgument, "end_date must follow start_date");

  SynthCohort cohort;
  cohort.profiles = profiles;
  Rng rng(derive_seed(o.seed, 1));

  std::vector<LvefClass> labels;
  for (int k = 0; k < kNumClasses; ++k) labels.insert(labels.end(), counts[static_cast<std::size_t>(k)], static_cast<LvefClass>(k));
  rng.shuffle(labels);

  // Group examples into patients: within each class, a leading share of the
  // examples is paired into two-visit patients.
  std::vector<PatientPlan> patients;
  std::vector<std::size_t> patient_of(labels.size());
  std::array<std::size_t, kNumClasses> seen{};
  std::array<std::size_t, kNumClasses> open_patient{};
  std::array<bool, kNumClasses> has_open{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    const auto repeat_budget = static_cast<std::size_t>(std::floor(static_cast<double>(counts[c]) * o.repeat_patient_fraction / 2.0)) * 2;
    const bool repeat = seen[c] < repeat_budget;
    ++seen[c];
    if (repeat && has_open[c]) {
      patient_of[i] = open_patient[c];
      has_open[c] = false;
      continue;
    }
    patients.push_back({make_id(o.id_prefix, "pat", patients.size() + 1), labels[i], {}});
    patient_of[i] = patients.size() - 1;
    if (repeat) {
      open_patient[c] = patients.size() - 1;
      has_open[c] = true;
    }
  }

  std::size_t ecg_counter = 0, echo_counter = 0;
  const auto add_ecg = [&](const PatientPlan& patient, Timestamp when) {
    RecordPlan plan;
    plan.meta.record_id = make_id(o.id_prefix, "ecg", ++ecg_counter);
    plan.meta.patient_id = patient.id;
    plan.meta.acquired_at = when;
    plan.meta.sampling_rate = kDefaultSamplingRate;
    plan.label = patient.label;
    plan.seed = derive_seed(o.seed, 1'000'000 + ecg_counter);
    cohort.records.push_back(std::move(plan));
  };
  const auto window = 0.95 * o.pairing_window_days;

  for (std::size_t i = 0; i < labels.size(); ++i) {
    PatientPlan& patient = patients[patient_of[i]];
    Timestamp echo_at;
    if (patient.index_dates.empty()) {
      echo_at = add_days(start, std::floor(rng.uniform(0.0, span_days)) + rng.uniform(0.3, 0.7));
    } else {
      echo_at = add_days(patient.index_dates.back(), rng.uniform(60.0, 400.0));
    }
    patient.index_dates.push_back(echo_at);
    EchoResult echo;
    echo.echo_id = make_id(o.id_prefix, "echo", ++echo_counter);
    echo.patient_id = patient.id;
    echo.performed_at = echo_at;
    echo.lvef = draw_lvef(rng, labels[i]);
    cohort.echos.push_back(std::move(echo));
    add_ecg(patient, add_days(echo_at, rng.uniform(-window, window)));
    if (rng.bernoulli(o.decoy_ecg_fraction)) {
      const double gap = rng.uniform(o.pairing_window_days + 16.0, o.pairing_window_days + 120.0);
      add_ecg(patient, add_days(echo_at, rng.bernoulli(0.5) ? gap : -gap));
    }
  }

  // Extra echos that the cohort builder must exclude, cycling through the
  // exclusion reasons.
  const auto n_excluded = static_cast<std::size_t>(std::llround(static_cast<double>(o.n) * o.excluded_echo_fraction));
  for (std::size_t e = 0; e < n_excluded; ++e) {
    patients.push_back({make_id(o.id_prefix, "pat", patients.size() + 1), LvefClass::kNormal, {}});
    PatientPlan& patient = patients.back();
    const Timestamp echo_at = add_days(start, std::floor(rng.uniform(0.0, span_days)) + 0.5);
    patient.index_dates.push_back(echo_at);
    EchoResult echo;
    echo.echo_id = make_id(o.id_prefix, "echo", ++echo_counter);
    echo.patient_id = patient.id;
    echo.performed_at = echo_at;
    echo.lvef = draw_lvef(rng, LvefClass::kNormal);
    switch (e % 3) {
      case 0:
        echo.quality_flags = {"poor quality"};
        add_ecg(patient, add_days(echo_at, rng.uniform(-window, window)));
        break;
      case 1:
        echo.lvef = 100.0 + rng.uniform(1.0, 20.0);
        add_ecg(patient, add_days(echo_at, rng.uniform(-window, window)));
        break;
      default:
        add_ecg(patient, add_days(echo_at, o.pairing_window_days + rng.uniform(20.0, 60.0)));
        break;
    }
    cohort.echos.push_back(std::move(echo));
  }

  cohort.snapshots.resize(patients.size());
  parallel_for(patients.size(), [&](std::size_t i) {
    cohort.snapshots[i] = draw_snapshot(patients[i], profiles[static_cast<std::size_t>(patients[i].label)],
                                        derive_seed(o.seed, 2'000'000 + i));
  });
  return cohort;
}

void write_cohort(const SynthCohort& cohort, const std::filesystem::path& dir) {
  const auto ecg_dir = dir / "ecg";
  std::filesystem::create_directories(ecg_dir);
  parallel_for(cohort.records.size(), [&](std::size_t i) {
    const auto rec = cohort.record(i);
    write_ecg(rec.ecg, ecg_dir / (rec.ecg.meta().record_id + ".csv"));
  });
  write_ehr_ndjson(cohort.snapshots, dir / "ehr.ndjson");
  write_echo_csv(cohort.echos, dir / "echo.csv");
}

}  // namespace lvef::synth

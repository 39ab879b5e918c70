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
#include "lvef/ecg_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lvef {
namespace {

std::size_t ms_to_samples(double ms, double fs) {
  return static_cast<std::size_t>(std::lround(ms * fs / 1000.0));
}

double median_of(std::vector<double> v) { return v.empty() ? kMissing : median(std::move(v)); }
double mean_of(const std::vector<double>& v) { return v.empty() ? kMissing : mean(v); }

double segment_mean(std::span<const double> x, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t t = from; t <= to; ++t) s += x[t];
  return s / static_cast<double>(to - from + 1);
}

bool strict_min(std::span<const double> x, std::size_t t) {
  return x[t] < x[t - 1] && x[t] < x[t + 1];
}
bool strict_max(std::span<const double> x, std::size_t t) {
  return x[t] > x[t - 1] && x[t] > x[t + 1];
}

// Open window (center - lo, center + hi) expressed as signed offsets; returns
// false when any part falls outside [1, n-2].
bool window(std::size_t n, std::size_t r, long lo_off, long hi_off, std::size_t* first,
            std::size_t* last) {
  const long a = static_cast<long>(r) + lo_off + 1;
  const long b = static_cast<long>(r) + hi_off - 1;
  if (a < 1 || b > static_cast<long>(n) - 2 || a > b) return false;
  *first = static_cast<std::size_t>(a);
  *last = static_cast<std::size_t>(b);
  return true;
}

}  // namespace

RPeakResult detect_r_peaks(std::span<const double> x, double fs) {
  RPeakResult result;
  const std::size_t n = x.size();
  if (n < 3 || !(fs > 0.0)) {
    result.undetectable = true;
    return result;
  }

  std::vector<double> energy(n, 0.0);
  for (std::size_t t = 1; t + 1 < n; ++t) {
    const double d = 0.5 * (x[t + 1] - x[t - 1]);
    energy[t] = d * d;
  }
  const std::size_t half = ms_to_samples(75.0, fs);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + energy[t];
  std::vector<double> integ(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t a = t >= half ? t - half : 0;
    const std::size_t b = std::min(n, t + half + 1);
    integ[t] = (prefix[b] - prefix[a]) / static_cast<double>(2 * half + 1);
  }

  const double peak_max = *std::max_element(integ.begin(), integ.end());
  if (!(peak_max > 0.0) || !std::isfinite(peak_max)) {
    result.undetectable = true;
    return result;
  }

  struct Candidate {
    std::size_t index;
    double height;
  };
  std::vector<Candidate> candidates;
  for (std::size_t t = 1; t + 1 < n; ++t) {
    if (integ[t] > integ[t - 1] && integ[t] >= integ[t + 1] && integ[t] > 1e-9 * peak_max) {
      candidates.push_back({t, integ[t]});
    }
  }

  // Non-maximum suppression over the refractory period.
  const std::size_t refractory = ms_to_samples(200.0, fs);
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.height != b.height ? a.height > b.height : a.index < b.index;
  });
  std::vector<Candidate> kept;
  for (const auto& c : candidates) {
    const bool clear = std::none_of(kept.begin(), kept.end(), [&](const Candidate& k) {
      return (c.index > k.index ? c.index - k.index : k.index - c.index) < refractory;
    });
    if (clear) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end(),
            [](const Candidate& a, const Candidate& b) { return a.index < b.index; });
  if (kept.empty()) {
    result.undetectable = true;
    return result;
  }

  // Seed the running level with the strongest peak in the first two seconds.
  const std::size_t seed_end = ms_to_samples(2000.0, fs);
  double seed_level = 0.0;
  for (const auto& c : kept) {
    if (c.index < seed_end) seed_level = std::max(seed_level, c.height);
  }
  if (seed_level == 0.0) seed_level = kept.front().height;
  std::vector<double> history{seed_level};
  std::vector<std::size_t> accepted;
  for (const auto& c : kept) {
    const std::size_t from = history.size() > 8 ? history.size() - 8 : 0;
    const double level =
        median(std::vector<double>(history.begin() + static_cast<std::ptrdiff_t>(from), history.end()));
    if (c.height >= 0.5 * level) {
      accepted.push_back(c.index);
      history.push_back(c.height);
    }
  }

  const std::size_t search = ms_to_samples(75.0, fs);
  for (std::size_t c : accepted) {
    const std::size_t a = c >= search ? c - search : 0;
    const std::size_t b = std::min(n - 1, c + search);
    std::size_t best = a;
    for (std::size_t t = a + 1; t <= b; ++t) {
      if (x[t] > x[best]) best = t;
    }
    if (!result.indices.empty() && best < result.indices.back() + refractory) {
      if (x[best] > x[result.indices.back()]) result.indices.back() = best;
      continue;
    }
    result.indices.push_back(best);
  }
  result.undetectable = result.indices.size() < 2;
  return result;
}

std::vector<BeatFiducials> delineate_beats(std::span<const double> x,
                                           std::span<const std::size_t> r_peaks, double fs) {
  const std::size_t n = x.size();
  const auto ms = [fs](double v) { return static_cast<long>(ms_to_samples(v, fs)); };
  std::vector<BeatFiducials> beats;
  beats.reserve(r_peaks.size());
  for (std::size_t r : r_peaks) {
    BeatFiducials b;
    b.r = r;
    std::size_t first = 0, last = 0;

    if (window(n, r, -ms(80), 0, &first, &last)) {
      for (std::size_t t = first; t <= last; ++t) {
        if (strict_min(x, t) && (!b.q || x[t] < x[*b.q])) b.q = t;
      }
    }
    if (window(n, r, 0, ms(80), &first, &last)) {
      for (std::size_t t = first; t <= last; ++t) {
        if (strict_min(x, t) && (!b.s || x[t] < x[*b.s])) b.s = t;
      }
    }
    if (window(n, r, ms(100), ms(400), &first, &last)) {
      for (std::size_t t = first; t <= last; ++t) {
        if ((strict_min(x, t) || strict_max(x, t)) &&
            (!b.t_peak || std::abs(x[t]) > std::abs(x[*b.t_peak]))) {
          b.t_peak = t;
        }
      }
    }
    if (window(n, r, -ms(300), -ms(100), &first, &last)) {
      for (std::size_t t = first; t <= last; ++t) {
        if (strict_max(x, t) && (!b.p_peak || x[t] > x[*b.p_peak])) b.p_peak = t;
      }
    }

    const std::size_t flank = ms_to_samples(150.0, fs);
    if (b.p_peak && *b.p_peak > flank + 1) {
      const std::size_t lo = *b.p_peak - flank;
      std::size_t steepest = *b.p_peak;
      double slope_max = 0.0;
      for (std::size_t t = lo; t <= *b.p_peak; ++t) {
        const double s = std::abs(x[t] - x[t - 1]);
        if (s > slope_max) {
          slope_max = s;
          steepest = t;
        }
      }
      for (std::size_t t = steepest; slope_max > 0.0 && t >= lo; --t) {
        if (std::abs(x[t] - x[t - 1]) < 0.1 * slope_max) {
          b.p_onset = t;
          break;
        }
      }
    }
    if (b.t_peak && *b.t_peak + flank + 1 < n) {
      const std::size_t hi = *b.t_peak + flank;
      std::size_t steepest = *b.t_peak;
      double slope_max = 0.0;
      for (std::size_t t = *b.t_peak + 1; t <= hi; ++t) {
        const double s = std::abs(x[t] - x[t - 1]);
        if (s > slope_max) {
          slope_max = s;
          steepest = t;
        }
      }
      for (std::size_t t = steepest; slope_max > 0.0 && t <= hi; ++t) {
        if (std::abs(x[t] - x[t - 1]) < 0.1 * slope_max) {
          b.t_offset = t;
          break;
        }
      }
    }
    beats.push_back(b);
  }
  return beats;
}

std::vector<double> amplitude_band_occupancy(std::span<const double> x) {
  std::vector<double> occ(kAmplitudeBands, 0.0);
  if (x.empty()) return occ;
  const double width = (kAmplitudeBandHigh - kAmplitudeBandLow) / kAmplitudeBands;
  for (double v : x) {
    if (!(v >= kAmplitudeBandLow && v <= kAmplitudeBandHigh)) continue;
    auto k = static_cast<int>(std::floor((v - kAmplitudeBandLow) / width));
    occ[static_cast<std::size_t>(std::min(k, kAmplitudeBands - 1))] += 1.0;
  }
  for (double& o : occ) o /= static_cast<double>(x.size());
  return occ;
}

// ---------------------------------------------------------------------------

namespace {

struct LeadComponent {
  const char* name;
  const char* unit;
  const char* definition;
  bool with_median;
};

constexpr LeadComponent kLeadComponents[] = {
    {"qr_interval_amplitude", "standardized units",
     "mean signal value over the Q-to-R segment of each beat (inclusive)", true},
    {"rs_interval_voltage", "standardized units",
     "mean signal value over the R-to-S segment of each beat (inclusive)", true},
    {"st_segment_voltage", "standardized units",
     "mean signal value over [S+20 ms, S+80 ms] of each beat", true},
    {"r_amplitude", "standardized units", "signal value at R", true},
    {"t_amplitude", "standardized units", "signal value at the T peak", false},
    {"qrs_duration_ms", "ms", "S minus Q", false},
};

std::vector<FeatureSpec> build_catalog() {
  std::vector<FeatureSpec> c = {
      {"rr__mean_ms", "ms", "mean RR interval on the detection lead"},
      {"rr__std_ms", "ms", "population standard deviation of RR intervals"},
      {"rr__min_ms", "ms", "minimum RR interval"},
      {"rr__max_ms", "ms", "maximum RR interval"},
      {"rr__median_ms", "ms", "median RR interval"},
      {"rr__rmssd_ms", "ms", "root mean square of successive RR differences"},
      {"heart_rate__bpm", "1/min", "60000 / rr__mean_ms"},
      {"beat__count", "count", "number of detected R peaks"},
      {"pr_interval_ms__mean", "ms", "mean P onset to Q on lead II"},
      {"qt_interval_ms__mean", "ms", "mean Q to T offset on lead II"},
  };
  for (auto lead : kTwelveLeads) {
    const std::string prefix = std::string(lead) + "__";
    for (const auto& comp : kLeadComponents) {
      c.push_back({prefix + comp.name + "__mean", comp.unit,
                   std::string(comp.definition) + "; mean across beats"});
      if (comp.with_median) {
        c.push_back({prefix + comp.name + "__median", comp.unit,
                     std::string(comp.definition) + "; median across beats"});
      }
    }
    const double width = (kAmplitudeBandHigh - kAmplitudeBandLow) / kAmplitudeBands;
    for (int k = 0; k < kAmplitudeBands; ++k) {
      const double lo = kAmplitudeBandLow + width * k;
      const std::string closing = k == kAmplitudeBands - 1 ? "]" : ")";
      c.push_back({prefix + "amp_band__" + std::to_string(k), "fraction",
                   "fraction of samples in [" + format_double(lo) + ", " +
                       format_double(lo + width) + closing + " standardized units"});
    }
  }
  return c;
}

struct BeatSeries {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
};

}  // namespace

const std::vector<FeatureSpec>& clinical_catalog() {
  static const std::vector<FeatureSpec> catalog = build_catalog();
  return catalog;
}

std::vector<std::string> clinical_feature_names() {
  std::vector<std::string> names;
  for (const auto& s : clinical_catalog()) names.push_back(s.name);
  return names;
}

FeatureVector extract_clinical_features(const TwelveLeadEcg& ecg) {
  const double fs = ecg.meta().sampling_rate;
  FeatureVector out;
  out.names = clinical_feature_names();
  out.values.assign(out.names.size(), kMissing);
  std::size_t slot = 0;
  auto put = [&](double v) { out.values[slot++] = v; };

  const Lead* detection = ecg.find("II");
  if (detection == nullptr || detection->degenerate) {
    detection = nullptr;
    for (auto name : kTwelveLeads) {
      const Lead* l = ecg.find(name);
      if (l != nullptr && !l->degenerate) {
        detection = l;
        break;
      }
    }
  }
  RPeakResult peaks;
  if (detection != nullptr) peaks = detect_r_peaks(detection->samples, fs);

  std::vector<double> rr;
  for (std::size_t i = 1; i < peaks.indices.size(); ++i) {
    rr.push_back(static_cast<double>(peaks.indices[i] - peaks.indices[i - 1]) * 1000.0 / fs);
  }
  if (!rr.empty()) {
    const double rr_mean = mean(rr);
    put(rr_mean);
    put(std::sqrt(variance(rr)));
    put(*std::min_element(rr.begin(), rr.end()));
    put(*std::max_element(rr.begin(), rr.end()));
    put(median(rr));
    if (rr.size() >= 2) {
      double ss = 0.0;
      for (std::size_t i = 1; i < rr.size(); ++i) ss += (rr[i] - rr[i - 1]) * (rr[i] - rr[i - 1]);
      put(std::sqrt(ss / static_cast<double>(rr.size() - 1)));
    } else {
      put(kMissing);
    }
    put(60000.0 / rr_mean);
  } else {
    slot += 7;
  }
  put(static_cast<double>(peaks.indices.size()));

  // Lead II intervals.
  {
    std::vector<double> pr, qt;
    const Lead* lead_ii = ecg.find("II");
    if (lead_ii != nullptr && !lead_ii->degenerate && !peaks.indices.empty()) {
      for (const auto& b : delineate_beats(lead_ii->samples, peaks.indices, fs)) {
        if (b.p_onset && b.q) pr.push_back(static_cast<double>(*b.q - *b.p_onset) * 1000.0 / fs);
        if (b.q && b.t_offset) qt.push_back(static_cast<double>(*b.t_offset - *b.q) * 1000.0 / fs);
      }
    }
    put(mean_of(pr));
    put(mean_of(qt));
  }

  const std::size_t per_lead = clinical_catalog().size() - slot;
  const std::size_t lead_block = per_lead / kTwelveLeads.size();
  const std::size_t snap = ms_to_samples(40.0, fs);
  for (auto name : kTwelveLeads) {
    const Lead* lead = ecg.find(name);
    if (lead == nullptr || lead->degenerate) {
      slot += lead_block;
      continue;
    }
    const auto& x = lead->samples;
    const std::size_t n = x.size();
    std::vector<std::size_t> local_r;
    for (std::size_t r : peaks.indices) {
      const std::size_t a = r >= snap ? r - snap : 0;
      const std::size_t b = std::min(n - 1, r + snap);
      std::size_t best = a;
      for (std::size_t t = a + 1; t <= b; ++t) {
        if (x[t] > x[best]) best = t;
      }
      if (local_r.empty() || best > local_r.back()) local_r.push_back(best);
    }
    BeatSeries qr, rs, st, r_amp, t_amp, qrs;
    const std::size_t st_lo = ms_to_samples(20.0, fs);
    const std::size_t st_hi = ms_to_samples(80.0, fs);
    for (const auto& b : delineate_beats(x, local_r, fs)) {
      if (b.q) qr.add(segment_mean(x, *b.q, b.r));
      if (b.s) rs.add(segment_mean(x, b.r, *b.s));
      if (b.s && *b.s + st_hi < n) st.add(segment_mean(x, *b.s + st_lo, *b.s + st_hi));
      r_amp.add(x[b.r]);
      if (b.t_peak) t_amp.add(x[*b.t_peak]);
      if (b.q && b.s) qrs.add(static_cast<double>(*b.s - *b.q) * 1000.0 / fs);
    }
    for (auto* series : {&qr, &rs, &st, &r_amp}) {
      put(mean_of(series->values));
      put(median_of(series->values));
    }
    put(mean_of(t_amp.values));
    put(mean_of(qrs.values));
    for (double occ : amplitude_band_occupancy(x)) put(occ);
  }
  return out;
}

}  // namespace lvef

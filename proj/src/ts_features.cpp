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
#include "lvef/ts_features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "lvef/fft.hpp"

namespace lvef {
namespace {

constexpr std::array<std::size_t, 5> kAutocorrLags = {1, 2, 3, 5, 10};
constexpr std::array<double, 5> kBandEdgesHz = {1.0, 5.0, 15.0, 40.0, 100.0};
constexpr std::size_t kFftCoefficients = 10;
constexpr std::size_t kVarianceWindows = 10;

}  // namespace

TsDescriptorCatalog::TsDescriptorCatalog() {
  auto add = [this](std::string name, std::string unit, std::string def) {
    descriptors_.push_back({std::move(name), std::move(unit), std::move(def)});
  };
  // Statistical moments and order statistics.
  add("mean", "u", "arithmetic mean");
  add("median", "u", "median");
  add("variance", "u^2", "population variance");
  add("standard_deviation", "u", "population standard deviation");
  add("skewness", "1", "third standardized moment (population)");
  add("kurtosis", "1", "excess fourth standardized moment (population)");
  add("minimum", "u", "minimum");
  add("maximum", "u", "maximum");
  add("quantile_q10", "u", "10th percentile (linear interpolation)");
  add("quantile_q25", "u", "25th percentile");
  add("quantile_q75", "u", "75th percentile");
  add("quantile_q90", "u", "90th percentile");
  add("root_mean_square", "u", "sqrt(mean(x^2))");
  add("sum_values", "u", "sum of samples");
  add("abs_energy", "u^2", "sum of squares");
  add("mean_abs_change", "u", "mean |x[t+1]-x[t]|");
  add("mean_change", "u", "mean x[t+1]-x[t]");
  add("absolute_sum_of_changes", "u", "sum |x[t+1]-x[t]|");
  add("mean_second_derivative_central", "u", "mean (x[t+2]-2x[t+1]+x[t])/2");
  // Autocorrelation.
  for (auto lag : kAutocorrLags) {
    add("autocorrelation_lag_" + std::to_string(lag), "1",
        "sum (x[t]-m)(x[t+lag]-m) / ((n-lag) var)");
  }
  // Stationarity proxies.
  add("variance_first_differences", "u^2", "population variance of x[t+1]-x[t]");
  add("windowed_variance_ratio", "1", "variance of second half / variance of first half");
  add("variance_of_window_means", "u^2", "variance of the means of 10 equal windows");
  // Information-theoretic.
  add("binned_entropy_10", "nat", "Shannon entropy of a 10-bin equal-width histogram");
  add("spectral_entropy", "1", "normalized entropy of the Hann-windowed periodogram");
  add("permutation_entropy_3", "1", "normalized entropy of order-3 ordinal patterns");
  // Model-based.
  add("linear_trend_slope", "u/sample", "least-squares slope against sample index");
  add("linear_trend_intercept", "u", "least-squares intercept");
  add("linear_trend_r2", "1", "coefficient of determination of the linear trend");
  // Frequency domain.
  for (std::size_t k = 0; k < kFftCoefficients; ++k) {
    add("fft_abs_" + std::to_string(k), "u", "|X_k| of the unnormalized real DFT");
  }
  add("band_energy_0_1hz", "u^2", "signal energy in [0, 1) Hz (Parseval)");
  add("band_energy_1_5hz", "u^2", "signal energy in [1, 5) Hz");
  add("band_energy_5_15hz", "u^2", "signal energy in [5, 15) Hz");
  add("band_energy_15_40hz", "u^2", "signal energy in [15, 40) Hz");
  add("band_energy_40_100hz", "u^2", "signal energy in [40, 100) Hz");
  add("band_energy_100hz_nyquist", "u^2", "signal energy in [100 Hz, Nyquist]");
  add("spectral_centroid", "Hz", "power-weighted mean frequency");
  add("dominant_frequency", "Hz", "frequency of the largest non-DC power bin");
  add("spectral_rolloff_85", "Hz", "lowest frequency below which 85% of power lies");
  // Counting.
  add("count_above_mean", "count", "samples strictly above the mean");
  add("count_below_mean", "count", "samples strictly below the mean");
  add("longest_strike_above_mean", "count", "longest run strictly above the mean");
  add("longest_strike_below_mean", "count", "longest run strictly below the mean");
  add("number_zero_crossings", "count", "sign changes of x");
  add("number_mean_crossings", "count", "sign changes of x - mean");
  add("number_peaks_support_5", "count", "samples larger than all neighbours within 5");
  add("ratio_beyond_1_sigma", "1", "fraction with |x-m| > 1 sd");
  // Energy and complexity.
  add("ratio_beyond_2_sigma", "1", "fraction with |x-m| > 2 sd");
  add("ratio_beyond_3_sigma", "1", "fraction with |x-m| > 3 sd");
  add("cid_ce", "u", "sqrt(sum (x[t+1]-x[t])^2)");
  add("c3_lag_1", "u^3", "mean x[t+2] x[t+1] x[t]");
  add("time_reversal_asymmetry_lag_1", "u^3", "mean x[t+2]^2 x[t+1] - x[t+1] x[t]^2");
}

const TsDescriptorCatalog& TsDescriptorCatalog::default_catalog() {
  static const TsDescriptorCatalog catalog;
  return catalog;
}

std::vector<std::string> TsDescriptorCatalog::feature_names() const {
  std::vector<std::string> names;
  names.reserve(kTwelveLeads.size() * size());
  for (auto lead : kTwelveLeads) {
    for (const auto& d : descriptors_) names.push_back(std::string(lead) + "__ts__" + d.name);
  }
  return names;
}

std::vector<FeatureSpec> TsDescriptorCatalog::feature_specs() const {
  std::vector<FeatureSpec> specs;
  for (auto lead : kTwelveLeads) {
    for (const auto& d : descriptors_) {
      specs.push_back({std::string(lead) + "__ts__" + d.name, d.unit,
                       d.definition + " (lead " + std::string(lead) + ")"});
    }
  }
  return specs;
}

// ---------------------------------------------------------------------------

double spectral_entropy_of_power(std::span<const double> power) {
  double total = 0.0;
  for (double p : power) total += p;
  if (!(total > 0.0)) fail(ErrorCode::kZeroPower, "spectral entropy of a zero-power signal");
  if (power.size() < 2) return 0.0;
  double h = 0.0;
  for (double p : power) {
    if (p > 0.0) {
      const double q = p / total;
      h -= q * std::log(q);
    }
  }
  return std::clamp(h / std::log(static_cast<double>(power.size())), 0.0, 1.0);
}

namespace {

std::vector<double> periodogram(std::span<const double> x) {
  const std::size_t n = x.size();
  const double m = mean(x);
  thread_local std::vector<double> hann;
  if (hann.size() != n) {
    hann.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      hann[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n));
    }
  }
  std::vector<double> w(n);
  for (std::size_t t = 0; t < n; ++t) w[t] = (x[t] - m) * hann[t];
  auto p = fft::power_spectrum(w);
  // One-sided: interior bins carry both the positive and negative frequency.
  const std::size_t last = p.size() - 1;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (!(k == last && n % 2 == 0)) p[k] *= 2.0;
  }
  return p;
}

}  // namespace

double spectral_entropy(std::span<const double> x, double /*fs*/) {
  if (x.size() < 64) fail(ErrorCode::kInvalidArgument, "spectral entropy needs >= 64 samples");
  bool all_zero = std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
  if (all_zero) fail(ErrorCode::kZeroPower, "spectral entropy of an all-zero signal");
  return spectral_entropy_of_power(periodogram(x));
}

namespace {

double autocorrelation_with(std::span<const double> x, std::size_t lag, double m, double var) {
  const std::size_t n = x.size();
  if (lag >= n || !(var > 0.0)) return kMissing;
  double s = 0.0;
  for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - m) * (x[t + lag] - m);
  return s / (static_cast<double>(n - lag) * var);
}

}  // namespace

double autocorrelation(std::span<const double> x, std::size_t lag) {
  if (lag >= x.size()) return kMissing;
  return autocorrelation_with(x, lag, mean(x), variance(x));
}

namespace {

// Per-bin share of sum(x^2) for the one-sided DFT: |X_k|^2 / n, doubled for
// bins that stand for a +-k pair.
std::vector<double> energy_per_bin(const std::vector<std::complex<double>>& spec, std::size_t n) {
  std::vector<double> e(spec.size());
  const std::size_t last = spec.size() - 1;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const bool single = k == 0 || (k == last && n % 2 == 0);
    e[k] = (spec[k].real() * spec[k].real() + spec[k].imag() * spec[k].imag()) * (single ? 1.0 : 2.0) / static_cast<double>(n);
  }
  return e;
}

std::vector<double> bands_from_bins(std::span<const double> e, std::size_t n, double fs,
                                    std::span<const double> edges_hz) {
  std::vector<double> bands(edges_hz.size() + 1, 0.0);
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    const auto b = static_cast<std::size_t>(
        std::upper_bound(edges_hz.begin(), edges_hz.end(), f) - edges_hz.begin());
    bands[b] += e[k];
  }
  return bands;
}

}  // namespace

std::vector<double> band_energies(std::span<const double> x, double fs,
                                  std::span<const double> edges_hz) {
  if (x.empty()) return std::vector<double>(edges_hz.size() + 1, 0.0);
  const auto e = energy_per_bin(fft::rfft(x), x.size());
  return bands_from_bins(e, x.size(), fs, edges_hz);
}

std::vector<double> compute_ts_descriptors(std::span<const double> x, double fs) {
  const std::size_t n = x.size();
  std::vector<double> out;
  out.reserve(TsDescriptorCatalog::default_catalog().size());
  auto put = [&out](double v) { out.push_back(v); };
  if (n < 2) {
    out.assign(TsDescriptorCatalog::default_catalog().size(), kMissing);
    return out;
  }

  const double m = mean(x);
  const double var = variance(x);
  const double sd = std::sqrt(var);
  // Order statistics by successive selection; a full sort dominates the
  // descriptor cost otherwise.
  std::vector<double> work(x.begin(), x.end());
  const auto [min_it, max_it] = std::minmax_element(work.begin(), work.end());
  const double x_min = *min_it, x_max = *max_it;
  std::array<double, 5> quantiles{};
  {
    constexpr std::array<double, 5> kProbs = {0.10, 0.25, 0.50, 0.75, 0.90};
    auto begin = work.begin();
    for (std::size_t i = 0; i < kProbs.size(); ++i) {
      const double pos = kProbs[i] * static_cast<double>(n - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(lo);
      const auto nth = work.begin() + static_cast<std::ptrdiff_t>(lo);
      std::nth_element(begin, nth, work.end());
      const double a = *nth;
      const double b = lo + 1 < n ? *std::min_element(nth + 1, work.end()) : a;
      quantiles[i] = a + frac * (b - a);
      begin = nth;
    }
  }
  auto q = [&quantiles](double p) {
    if (p == 0.10) return quantiles[0];
    if (p == 0.25) return quantiles[1];
    if (p == 0.50) return quantiles[2];
    if (p == 0.75) return quantiles[3];
    return quantiles[4];
  };
  double m3 = 0.0, m4 = 0.0, energy = 0.0, sum = 0.0;
  for (double v : x) {
    const double d = v - m;
    m3 += d * d * d;
    m4 += d * d * d * d;
    energy += v * v;
    sum += v;
  }
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  double abs_change = 0.0, change = 0.0, second = 0.0, diff_sq = 0.0;
  std::vector<double> diffs(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    diffs[t] = x[t + 1] - x[t];
    abs_change += std::abs(diffs[t]);
    change += diffs[t];
    diff_sq += diffs[t] * diffs[t];
  }
  for (std::size_t t = 0; t + 2 < n; ++t) second += (x[t + 2] - 2.0 * x[t + 1] + x[t]) / 2.0;

  put(m);
  put(q(0.5));
  put(var);
  put(sd);
  put(var > 0.0 ? m3 / std::pow(var, 1.5) : kMissing);
  put(var > 0.0 ? m4 / (var * var) - 3.0 : kMissing);
  put(x_min);
  put(x_max);
  put(q(0.10));
  put(q(0.25));
  put(q(0.75));
  put(q(0.90));
  put(std::sqrt(energy / static_cast<double>(n)));
  put(sum);
  put(energy);
  put(abs_change / static_cast<double>(n - 1));
  put(change / static_cast<double>(n - 1));
  put(abs_change);
  put(n > 2 ? second / static_cast<double>(n - 2) : kMissing);

  for (auto lag : kAutocorrLags) put(autocorrelation_with(x, lag, m, var));

  put(variance(diffs));
  {
    const std::size_t h = n / 2;
    const double v1 = variance(x.subspan(0, h));
    const double v2 = variance(x.subspan(h));
    put(v1 > 0.0 ? v2 / v1 : kMissing);
  }
  if (n >= kVarianceWindows) {
    std::vector<double> means;
    const std::size_t w = n / kVarianceWindows;
    for (std::size_t i = 0; i < kVarianceWindows; ++i) means.push_back(mean(x.subspan(i * w, w)));
    put(variance(means));
  } else {
    put(kMissing);
  }

  {
    // Binned entropy with 10 equal-width bins between min and max.
    const double lo = x_min, hi = x_max;
    std::array<double, 10> counts{};
    for (double v : x) {
      std::size_t b = 0;
      if (hi > lo) b = std::min<std::size_t>(9, static_cast<std::size_t>((v - lo) / (hi - lo) * 10.0));
      counts[b] += 1.0;
    }
    double h = 0.0;
    for (double c : counts) {
      if (c > 0.0) {
        const double p = c / static_cast<double>(n);
        h -= p * std::log(p);
      }
    }
    put(h);
  }
  const bool nonzero = std::any_of(x.begin(), x.end(), [](double v) { return v != 0.0; });
  if (n >= 64 && var > 0.0 && nonzero) {
    put(spectral_entropy_of_power(periodogram(x)));
  } else {
    put(kMissing);
  }
  {
    std::array<double, 6> patterns{};
    std::size_t total = 0;
    for (std::size_t t = 0; t + 2 < n; ++t) {
      const double a = x[t], b = x[t + 1], c = x[t + 2];
      int code;
      if (a <= b && b <= c) code = 0;
      else if (a <= c && c < b) code = 1;
      else if (c < a && a <= b) code = 2;
      else if (b < a && a <= c) code = 3;
      else if (b <= c && c < a) code = 4;
      else code = 5;
      patterns[static_cast<std::size_t>(code)] += 1.0;
      ++total;
    }
    double h = 0.0;
    for (double c : patterns) {
      if (c > 0.0) {
        const double p = c / static_cast<double>(total);
        h -= p * std::log(p);
      }
    }
    put(total ? h / std::log(6.0) : kMissing);
  }

  {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i);
    const auto fit = fit_line(t, x);
    put(fit.slope);
    put(fit.intercept);
    put(fit.r2);
  }

  const auto spec = fft::rfft(x);
  for (std::size_t k = 0; k < kFftCoefficients; ++k) put(k < spec.size() ? std::abs(spec[k]) : kMissing);
  const auto bin_energy = energy_per_bin(spec, n);
  for (double e : bands_from_bins(bin_energy, n, fs, kBandEdgesHz)) put(e);
  {
    double total = 0.0, weighted = 0.0;
    std::size_t dominant = 1;
    for (std::size_t k = 0; k < bin_energy.size(); ++k) {
      const double f = static_cast<double>(k) * fs / static_cast<double>(n);
      total += bin_energy[k];
      weighted += f * bin_energy[k];
      if (k >= 1 && bin_energy[k] > bin_energy[dominant]) dominant = k;
    }
    if (total > 0.0 && bin_energy.size() > 1) {
      put(weighted / total);
      put(static_cast<double>(dominant) * fs / static_cast<double>(n));
      double cum = 0.0;
      std::size_t k = 0;
      for (; k < bin_energy.size(); ++k) {
        cum += bin_energy[k];
        if (cum >= 0.85 * total) break;
      }
      put(static_cast<double>(std::min(k, bin_energy.size() - 1)) * fs / static_cast<double>(n));
    } else {
      put(kMissing);
      put(kMissing);
      put(kMissing);
    }
  }

  {
    double above = 0, below = 0, run_above = 0, run_below = 0, best_above = 0, best_below = 0;
    for (double v : x) {
      if (v > m) {
        ++above;
        ++run_above;
        run_below = 0;
      } else if (v < m) {
        ++below;
        ++run_below;
        run_above = 0;
      } else {
        run_above = run_below = 0;
      }
      best_above = std::max(best_above, run_above);
      best_below = std::max(best_below, run_below);
    }
    put(above);
    put(below);
    put(best_above);
    put(best_below);
  }
  {
    double zero = 0, mean_cross = 0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
      if ((x[t] < 0.0) != (x[t + 1] < 0.0)) ++zero;
      if ((x[t] < m) != (x[t + 1] < m)) ++mean_cross;
    }
    put(zero);
    put(mean_cross);
  }
  {
    constexpr std::size_t support = 5;
    double peaks = 0;
    for (std::size_t t = support; t + support < n; ++t) {
      bool peak = true;
      for (std::size_t j = 1; j <= support && peak; ++j) {
        peak = x[t] > x[t - j] && x[t] > x[t + j];
      }
      if (peak) ++peaks;
    }
    put(peaks);
  }
  for (double r : {1.0, 2.0, 3.0}) {
    double beyond = 0;
    for (double v : x) {
      if (std::abs(v - m) > r * sd) ++beyond;
    }
    put(beyond / static_cast<double>(n));
  }
  put(std::sqrt(diff_sq));
  if (n > 2) {
    double c3 = 0.0, tra = 0.0;
    for (std::size_t t = 0; t + 2 < n; ++t) {
      c3 += x[t + 2] * x[t + 1] * x[t];
      tra += x[t + 2] * x[t + 2] * x[t + 1] - x[t + 1] * x[t] * x[t];
    }
    put(c3 / static_cast<double>(n - 2));
    put(tra / static_cast<double>(n - 2));
  } else {
    put(kMissing);
    put(kMissing);
  }
  return out;
}

FeatureVector extract_ts_features(const TwelveLeadEcg& ecg, const TsDescriptorCatalog& catalog) {
  FeatureVector out;
  out.names = catalog.feature_names();
  out.values.reserve(out.names.size());
  for (auto name : kTwelveLeads) {
    const Lead* lead = ecg.find(name);
    if (lead == nullptr) {
      out.values.insert(out.values.end(), catalog.size(), kMissing);
      continue;
    }
    auto v = compute_ts_descriptors(lead->samples, ecg.meta().sampling_rate);
    out.values.insert(out.values.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace lvef

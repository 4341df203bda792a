// Copyright 2026 The Slugwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SLUGWATCH_SYNTHETIC_HPP_
#define SLUGWATCH_SYNTHETIC_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "slugwatch/dataset.hpp"
#include "slugwatch/error.hpp"

namespace slugwatch {

/// Generator settings. Noise scales follow default_feature_names() order.
struct SyntheticConfig {
  std::int64_t duration = 4000;  // steps
  Minutes sampling_period = kDefaultSamplingPeriod;
  std::uint64_t seed = 7;
  double slug_episode_rate = 8.0;  // expected episodes per 1000 steps
  std::int64_t episode_length_min = 6;
  std::int64_t episode_length_max = 36;
  std::array<double, 6> noise_scale = {1.5, 1.0, 2.0, 0.08, 5.0, 1.5};
  double baseline_drift = 1.0;
  Minutes start_time = 28401120;  // 2024-01-01T00:00
};

struct SyntheticResult {
  Dataset dataset;
  std::vector<TimeInterval> episodes;  // ground truth, in time order
};

namespace synthetic_detail {

// Steady-state operating point per feature.
inline constexpr std::array<double, 6> kBaseline = {45.0, 30.0, 60.0, 1.2, 100.0, 15.0};
// Drift amplitude per unit of baseline_drift; slow sinusoid, period kDriftPeriod.
inline constexpr std::array<double, 6> kDriftGain = {1.0, 0.6, 3.0, 0.05, 4.0, 0.4};
inline constexpr double kDriftPeriod = 1500.0;
// Mean shift applied at full slug intensity.
inline constexpr std::array<double, 6> kSlugShift = {6.0, -1.0, 0.0, 0.8, -25.0, 3.0};
// Oscillation amplitude at full slug intensity (inlet and differential pressure).
inline constexpr double kInletOscillation = 2.0;
inline constexpr double kDiffOscillation = 4.0;
// Episodes are separated by at least this many non-slug steps.
inline constexpr std::int64_t kMinGap = 12;
// Brief non-slug pressure transients (inlet and differential only).
inline constexpr double kTransientRate = 4.0;  // per 1000 steps
inline constexpr double kTransientInlet = 5.0;
inline constexpr double kTransientDiff = 3.0;

}  // namespace synthetic_detail

/// Seeded oil-well series with slug episodes. Deterministic for a fixed
/// config; the label track is exactly the union of the returned episodes.
///
/// During an episode inlet pressure rises and oscillates, gas flow drops,
/// the vessel level rises and differential pressure oscillates around a
/// raised mean. The first and last step of each episode run at half
/// intensity, and short non-slug pressure transients act as confounders.
inline SyntheticResult generate_synthetic(const SyntheticConfig& config) {
  using namespace synthetic_detail;
  if (config.duration <= 0) throw invalid_argument("duration must be positive");
  if (config.sampling_period <= 0) throw invalid_argument("sampling period must be positive");
  if (config.slug_episode_rate < 0) throw invalid_argument("episode rate must be non-negative");
  if (config.episode_length_min < 1 || config.episode_length_min > config.episode_length_max) {
    throw invalid_argument("episode length range must satisfy 1 <= min <= max");
  }
  if (config.episode_length_max > config.duration) {
    throw invalid_argument("episode length exceeds duration");
  }
  for (double s : config.noise_scale) {
    if (!(s >= 0)) throw invalid_argument("noise scale must be non-negative");
  }

  std::mt19937_64 rng(config.seed);
  const auto n = static_cast<std::size_t>(config.duration);

  // Episode placement: renewal process whose mean cycle length is
  // 1000 / rate steps (gap + episode).
  std::vector<std::pair<std::int64_t, std::int64_t>> steps;  // [begin, end)
  if (config.slug_episode_rate > 0) {
    std::uniform_int_distribution<std::int64_t> length_dist(config.episode_length_min,
                                                            config.episode_length_max);
    const double mean_length =
        0.5 * static_cast<double>(config.episode_length_min + config.episode_length_max);
    const double mean_extra_gap = std::max(
        1.0, 1000.0 / config.slug_episode_rate - mean_length - static_cast<double>(kMinGap));
    std::exponential_distribution<double> gap_dist(1.0 / mean_extra_gap);
    std::int64_t cursor = 0;
    while (true) {
      cursor += kMinGap + static_cast<std::int64_t>(gap_dist(rng));
      if (cursor >= config.duration) break;
      const std::int64_t end = std::min(cursor + length_dist(rng), config.duration);
      steps.emplace_back(cursor, end);
      cursor = end;
    }
  }

  std::vector<double> intensity(n, 0.0);
  std::vector<double> phase(n, 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto [b, e] : steps) {
    const double period = 4.0 + 4.0 * unit(rng);
    const double offset = 2.0 * std::numbers::pi * unit(rng);
    for (auto t = b; t < e; ++t) {
      const bool edge = (t == b || t == e - 1) && e - b > 2;
      intensity[t] = edge ? 0.5 : 1.0;
      phase[t] = offset + 2.0 * std::numbers::pi * static_cast<double>(t - b) / period;
    }
  }

  std::vector<double> transient(n, 0.0);
  std::bernoulli_distribution transient_hit(kTransientRate / 1000.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (intensity[t] == 0.0 && transient_hit(rng)) transient[t] = 1.0;
  }

  const double drift_phase = 2.0 * std::numbers::pi * unit(rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Sample> samples(n);
  for (std::size_t t = 0; t < n; ++t) {
    Sample& s = samples[t];
    s.timestamp = config.start_time + static_cast<Minutes>(t) * config.sampling_period;
    const double drift = std::sin(drift_phase + 2.0 * std::numbers::pi * t / kDriftPeriod);
    s.features.resize(6);
    for (std::size_t f = 0; f < 6; ++f) {
      s.features[f] = kBaseline[f] + config.baseline_drift * kDriftGain[f] * drift +
                      intensity[t] * kSlugShift[f] + config.noise_scale[f] * normal(rng);
    }
    if (intensity[t] > 0.0) {
      s.features[0] += intensity[t] * kInletOscillation * std::sin(phase[t]);
      s.features[5] += intensity[t] * kDiffOscillation * std::sin(phase[t] + 0.5);
    }
    s.features[0] += transient[t] * kTransientInlet;
    s.features[5] += transient[t] * kTransientDiff;
    s.label = intensity[t] > 0.0 ? 1 : 0;
  }

  SyntheticResult result;
  for (auto [b, e] : steps) {
    result.episodes.push_back({config.start_time + b * config.sampling_period,
                               config.start_time + e * config.sampling_period});
  }
  result.dataset = Dataset::create(default_feature_names(), std::move(samples),
                                   config.sampling_period);
  return result;
}

}  // namespace slugwatch

#endif  // SLUGWATCH_SYNTHETIC_HPP_

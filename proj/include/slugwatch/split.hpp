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

#ifndef SLUGWATCH_SPLIT_HPP_
#define SLUGWATCH_SPLIT_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "slugwatch/dataset.hpp"
#include "slugwatch/error.hpp"

namespace slugwatch {

struct SplitResult {
  Dataset train;
  Dataset test;
};

namespace split_detail {

inline bool in_any(const std::vector<TimeInterval>& intervals, Minutes t) {
  return std::any_of(intervals.begin(), intervals.end(),
                     [t](const TimeInterval& iv) { return iv.contains(t); });
}

}  // namespace split_detail

/// Partitions the dataset by interval membership. Both outputs keep time
/// order; selected samples must be labeled.
inline SplitResult chronological_split(const Dataset& dataset, const SplitSpec& spec) {
  spec.validate();
  std::vector<Sample> train, test;
  std::vector<std::string> unlabeled;
  for (const auto& s : dataset.samples()) {
    const bool in_train = split_detail::in_any(spec.train, s.timestamp);
    const bool in_test = split_detail::in_any(spec.test, s.timestamp);
    if (!in_train && !in_test) continue;
    if (!s.label) {
      unlabeled.push_back(format_timestamp(s.timestamp));
      continue;
    }
    (in_train ? train : test).push_back(s);
  }
  if (!unlabeled.empty()) {
    std::string msg = "unlabeled samples inside split intervals:";
    for (std::size_t i = 0; i < unlabeled.size() && i < 20; ++i) msg += " " + unlabeled[i];
    if (unlabeled.size() > 20) msg += " ...";
    throw invalid_argument(msg);
  }
  if (spec.chronological && !train.empty() && !test.empty() &&
      train.back().timestamp >= test.front().timestamp) {
    throw invalid_argument("chronological split requires all train samples (last " +
                           format_timestamp(train.back().timestamp) +
                           ") to precede all test samples (first " +
                           format_timestamp(test.front().timestamp) + ")");
  }
  return {dataset.with_samples(std::move(train), true),
          dataset.with_samples(std::move(test), true)};
}

/// First `train_fraction` of the samples (by count) train, the rest test.
inline SplitSpec fractional_split(const Dataset& dataset, double train_fraction) {
  if (dataset.size() < 2) throw invalid_argument("need at least two samples to split");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw invalid_argument("train fraction must lie in (0,1)");
  }
  auto cut = static_cast<std::size_t>(std::llround(train_fraction * dataset.size()));
  cut = std::clamp<std::size_t>(cut, 1, dataset.size() - 1);
  const Minutes boundary = dataset[cut].timestamp;
  const TimeInterval range = dataset.time_range();
  SplitSpec spec;
  spec.train.push_back({range.start, boundary});
  spec.test.push_back({boundary, range.end});
  return spec;
}

}  // namespace slugwatch

#endif  // SLUGWATCH_SPLIT_HPP_

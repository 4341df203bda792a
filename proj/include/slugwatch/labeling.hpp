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

#ifndef SLUGWATCH_LABELING_HPP_
#define SLUGWATCH_LABELING_HPP_

#include <string>
#include <vector>

#include "slugwatch/dataset.hpp"
#include "slugwatch/error.hpp"

namespace slugwatch {

struct LabelEdit {
  TimeInterval interval;
  int label = 1;

  friend bool operator==(const LabelEdit&, const LabelEdit&) = default;
};

/// Returns a relabeled copy. Later edits win where intervals overlap; samples
/// outside every edit keep their prior label.
inline Dataset apply_interval_labels(const Dataset& dataset,
                                     const std::vector<LabelEdit>& edits,
                                     std::string new_id = {}) {
  if (edits.empty()) return dataset;
  const TimeInterval range = dataset.time_range();
  for (const auto& e : edits) {
    if (!e.interval.valid()) {
      throw invalid_argument("empty or inverted edit interval " + to_string(e.interval));
    }
    if (e.label != 0 && e.label != 1) {
      throw invalid_argument("edit label must be 0 or 1");
    }
    if (dataset.empty() || e.interval.start < range.start || e.interval.end > range.end) {
      throw invalid_argument("edit interval " + to_string(e.interval) +
                             " lies outside dataset range " + to_string(range));
    }
  }
  std::vector<Sample> samples = dataset.samples();
  for (const auto& e : edits) {
    for (auto& s : samples) {
      if (e.interval.contains(s.timestamp)) s.label = e.label;
    }
  }
  return dataset.with_samples(std::move(samples), dataset.allows_gaps(), std::move(new_id));
}

}  // namespace slugwatch

#endif  // SLUGWATCH_LABELING_HPP_

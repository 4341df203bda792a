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

#ifndef SLUGWATCH_DATASET_HPP_
#define SLUGWATCH_DATASET_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "slugwatch/error.hpp"
#include "slugwatch/time.hpp"

namespace slugwatch {

inline constexpr Minutes kDefaultSamplingPeriod = 5;

/// The six process variables of the reference well.
inline const std::vector<std::string>& default_feature_names() {
  static const std::vector<std::string> names = {
      "inlet_pressure",     "outlet_pressure", "valve_opening_pct",
      "vessel_water_level", "gas_flow_sum",    "differential_pressure"};
  return names;
}

struct Sample {
  Minutes timestamp = 0;
  std::vector<double> features;
  std::optional<int> label;  // 1 = slug, 0 = non-slug

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Half-open [start, end) in minutes.
struct TimeInterval {
  Minutes start = 0;
  Minutes end = 0;

  bool contains(Minutes t) const { return start <= t && t < end; }
  bool overlaps(const TimeInterval& other) const {
    return start < other.end && other.start < end;
  }
  bool valid() const { return start < end; }

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

inline std::string to_string(const TimeInterval& interval) {
  return "[" + format_timestamp(interval.start) + ", " +
         format_timestamp(interval.end) + ")";
}

/// Immutable, validated, time-ordered multivariate series.
///
/// Consecutive samples are exactly one sampling period apart unless the
/// dataset is flagged as gapped (e.g. the union of several split intervals),
/// in which case every gap is still a whole number of periods.
class Dataset {
 public:
  Dataset() = default;

  static Dataset create(std::vector<std::string> feature_names,
                        std::vector<Sample> samples,
                        Minutes sampling_period = kDefaultSamplingPeriod,
                        bool allow_gaps = false, std::string id = {}) {
    Dataset ds;
    ds.feature_names_ = std::move(feature_names);
    ds.samples_ = std::move(samples);
    ds.sampling_period_ = sampling_period;
    ds.allow_gaps_ = allow_gaps;
    ds.id_ = std::move(id);
    ds.validate();
    return ds;
  }

  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t dimension() const { return feature_names_.size(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  Minutes sampling_period() const { return sampling_period_; }
  bool allows_gaps() const { return allow_gaps_; }
  const std::string& id() const { return id_; }

  /// [first timestamp, last timestamp + period).
  TimeInterval time_range() const {
    if (samples_.empty()) return {};
    return {samples_.front().timestamp, samples_.back().timestamp + sampling_period_};
  }

  bool fully_labeled() const {
    return std::all_of(samples_.begin(), samples_.end(),
                       [](const Sample& s) { return s.label.has_value(); });
  }

  std::vector<Minutes> timestamps() const {
    std::vector<Minutes> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.timestamp);
    return out;
  }

  /// Labels as 0/1; unlabeled samples are an error.
  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) {
      if (!s.label) {
        throw invalid_argument("sample at " + format_timestamp(s.timestamp) +
                               " is unlabeled");
      }
      out.push_back(*s.label);
    }
    return out;
  }

  std::optional<std::size_t> feature_index(const std::string& name) const {
    auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
    if (it == feature_names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - feature_names_.begin());
  }

  Dataset with_samples(std::vector<Sample> samples, bool allow_gaps,
                       std::string id = {}) const {
    return create(feature_names_, std::move(samples), sampling_period_, allow_gaps,
                  std::move(id));
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.feature_names_ == b.feature_names_ && a.samples_ == b.samples_ &&
           a.sampling_period_ == b.sampling_period_;
  }

 private:
  void validate() const {
    if (sampling_period_ <= 0) throw invalid_argument("sampling period must be positive");
    if (feature_names_.empty()) throw invalid_argument("dataset needs at least one feature");
    const std::size_t d = feature_names_.size();
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const Sample& s = samples_[i];
      if (s.features.size() != d) {
        std::ostringstream msg;
        msg << "sample " << i << " has " << s.features.size() << " features, expected "
            << d;
        throw invalid_argument(msg.str());
      }
      for (double v : s.features) {
        if (!std::isfinite(v)) {
          throw invalid_argument("sample " + std::to_string(i) +
                                 " has a non-finite feature value");
        }
      }
      if (s.label && *s.label != 0 && *s.label != 1) {
        throw invalid_argument("sample " + std::to_string(i) + " has label outside {0,1}");
      }
      if (i == 0) continue;
      const Minutes gap = s.timestamp - samples_[i - 1].timestamp;
      if (gap <= 0) {
        throw invalid_argument("timestamps not strictly increasing at sample " +
                               std::to_string(i));
      }
      if (allow_gaps_ ? gap % sampling_period_ != 0 : gap != sampling_period_) {
        throw invalid_argument("irregular sampling between " +
                               format_timestamp(samples_[i - 1].timestamp) + " and " +
                               format_timestamp(s.timestamp));
      }
    }
  }

  std::vector<std::string> feature_names_;
  std::vector<Sample> samples_;
  Minutes sampling_period_ = kDefaultSamplingPeriod;
  bool allow_gaps_ = false;
  std::string id_;
};

/// Train/test interval selection.
struct SplitSpec {
  std::vector<TimeInterval> train;
  std::vector<TimeInterval> test;
  // Requires every train timestamp to precede every test timestamp.
  bool chronological = true;

  void validate() const {
    if (train.empty() || test.empty()) {
      throw invalid_argument("split needs at least one train and one test interval");
    }
    for (const auto* list : {&train, &test}) {
      for (const auto& iv : *list) {
        if (!iv.valid()) throw invalid_argument("empty or inverted interval " + to_string(iv));
      }
    }
    for (const auto& a : train) {
      for (const auto& b : test) {
        if (a.overlaps(b)) {
          throw invalid_argument("train interval " + to_string(a) +
                                 " overlaps test interval " + to_string(b));
        }
      }
    }
  }

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

}  // namespace slugwatch

#endif  // SLUGWATCH_DATASET_HPP_

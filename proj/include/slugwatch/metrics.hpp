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

#ifndef SLUGWATCH_METRICS_HPP_
#define SLUGWATCH_METRICS_HPP_

#include <cstdint>

namespace slugwatch {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// TP / (TP + FP); 0 when nothing was predicted positive.
inline double precision(const ConfusionCounts& c) {
  const auto d = c.tp + c.fp;
  return d > 0 ? static_cast<double>(c.tp) / static_cast<double>(d) : 0.0;
}

/// TP / (TP + FN); 0 when there are no actual positives.
inline double recall(const ConfusionCounts& c) {
  const auto d = c.tp + c.fn;
  return d > 0 ? static_cast<double>(c.tp) / static_cast<double>(d) : 0.0;
}

/// (1 + b^2) P R / (b^2 P + R), defined as 0 when the denominator vanishes.
inline double fbeta_score(double precision_value, double recall_value, double beta) {
  const double b2 = beta * beta;
  const double denom = b2 * precision_value + recall_value;
  if (denom <= 0.0) return 0.0;
  return (1.0 + b2) * precision_value * recall_value / denom;
}

inline double fbeta_score(const ConfusionCounts& c, double beta) {
  return fbeta_score(precision(c), recall(c), beta);
}

}  // namespace slugwatch

#endif  // SLUGWATCH_METRICS_HPP_

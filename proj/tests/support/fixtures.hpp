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

#ifndef SLUGWATCH_TESTS_SUPPORT_FIXTURES_HPP_
#define SLUGWATCH_TESTS_SUPPORT_FIXTURES_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "slugwatch/dataset.hpp"
#include "slugwatch/synthetic.hpp"

namespace slugwatch::testing {

inline constexpr Minutes kFixtureStart = 28401120;  // 2024-01-01T00:00

/// Feature "x" equals the label: runs of 8 positives every 25 steps. "flow"
/// carries a label-free ramp.
inline Dataset separable_dataset(std::size_t n = 400) {
  std::vector<Sample> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i % 25 >= 10 && i % 25 < 18 ? 1 : 0;
    rows.push_back({kFixtureStart + static_cast<Minutes>(5 * i),
                    {static_cast<double>(y), 10.0 + static_cast<double>(i % 7)}, y});
  }
  return Dataset::create({"x", "flow"}, std::move(rows));
}

/// Unlabeled replay whose thresholded predictions are [1,1,0,1,1,1] under a
/// model trained on separable_dataset().
inline Dataset kappa3_dataset() {
  const std::vector<double> x = {1, 1, 0, 1, 1, 1};
  std::vector<Sample> rows;
  for (std::size_t i = 0; i < x.size(); ++i) {
    rows.push_back({kFixtureStart + static_cast<Minutes>(5 * i), {x[i], 12.0}, std::nullopt});
  }
  return Dataset::create({"x", "flow"}, std::move(rows));
}

/// Training body for the separable fixture: a depth-2 tree with an F2 rule.
inline nlohmann::json separable_train_body(const std::string& dataset_id) {
  return {{"dataset_id", dataset_id},
          {"train_fraction", 0.8},
          {"config", {{"kind", "tree"}, {"max_depth", 2}, {"seed", 7}}},
          {"threshold", {{"rule", "fbeta"}, {"beta", 2.0}}}};
}

/// Small synthetic series with a forest request, shared by the golden tests.
inline SyntheticResult small_synthetic() {
  SyntheticConfig c;
  c.duration = 1200;
  c.seed = 5;
  c.slug_episode_rate = 12.0;
  return generate_synthetic(c);
}

inline nlohmann::json small_forest_body(const std::string& dataset_id) {
  return {{"dataset_id", dataset_id},
          {"train_fraction", 0.8},
          {"config", {{"kind", "forest"}, {"n_trees", 10}, {"max_depth", 6}, {"seed", 11},
                      {"class_weights", "auto"}}},
          {"threshold", {{"rule", "fbeta"}, {"beta", 2.0}}},
          {"event_theta", 0.5}};
}

}  // namespace slugwatch::testing

#endif  // SLUGWATCH_TESTS_SUPPORT_FIXTURES_HPP_

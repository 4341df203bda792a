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

#ifndef SLUGWATCH_MODEL_IO_HPP_
#define SLUGWATCH_MODEL_IO_HPP_

#include <string>

#include <json.hpp>

#include "slugwatch/error.hpp"
#include "slugwatch/learners.hpp"

namespace slugwatch {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const ClassWeights& w) {
  return {{"w0", w.w0}, {"w1", w.w1}};
}

inline ClassWeights class_weights_from_json(const nlohmann::json& j) {
  return {j.at("w1").get<double>(), j.at("w0").get<double>()};
}

inline nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {
      {"kind", std::string(to_string(c.kind))},
      {"max_depth", c.max_depth},
      {"min_samples_leaf", c.min_samples_leaf},
      {"n_trees", c.n_trees},
      {"feature_subsample", c.feature_subsample},
      {"bootstrap", c.bootstrap},
      {"learning_rate", c.learning_rate},
      {"l2_regularization", c.l2_regularization},
      {"min_child_hessian", c.min_child_hessian},
      {"seed", c.seed},
  };
  j["class_weights"] = c.class_weights ? to_json(*c.class_weights) : nlohmann::json("auto");
  return j;
}

/// Missing fields keep their defaults, so request payloads may be partial.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    if (j.contains("kind")) c.kind = parse_model_kind(j.at("kind").get<std::string>());
    if (j.contains("max_depth")) c.max_depth = j.at("max_depth").get<int>();
    if (j.contains("min_samples_leaf")) c.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    if (j.contains("n_trees")) c.n_trees = j.at("n_trees").get<int>();
    if (j.contains("feature_subsample"))
      c.feature_subsample = j.at("feature_subsample").get<double>();
    if (j.contains("bootstrap")) c.bootstrap = j.at("bootstrap").get<bool>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("l2_regularization"))
      c.l2_regularization = j.at("l2_regularization").get<double>();
    if (j.contains("min_child_hessian"))
      c.min_child_hessian = j.at("min_child_hessian").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("class_weights")) {
      const auto& w = j.at("class_weights");
      if (w.is_string()) {
        if (w.get<std::string>() != "auto") throw invalid_argument("class_weights must be 'auto'");
        c.class_weights.reset();
      } else {
        c.class_weights = class_weights_from_json(w);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw invalid_argument(std::string("bad train config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace model_io_detail {

inline nlohmann::json node_to_json(const Tree& tree, std::size_t i) {
  const Tree::Node& n = tree.nodes[i];
  if (n.is_leaf()) return {{"score", n.value}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"score", n.value},
          {"left", node_to_json(tree, static_cast<std::size_t>(n.left))},
          {"right", node_to_json(tree, static_cast<std::size_t>(n.right))}};
}

inline int node_from_json(const nlohmann::json& j, Tree& tree) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  tree.nodes[index].value = j.at("score").get<double>();
  if (j.contains("feature")) {
    const int feature = j.at("feature").get<int>();
    const double threshold = j.at("threshold").get<double>();
    const int l = node_from_json(j.at("left"), tree);
    const int r = node_from_json(j.at("right"), tree);
    Tree::Node& n = tree.nodes[index];
    n.feature = feature;
    n.threshold = threshold;
    n.left = l;
    n.right = r;
  }
  return index;
}

}  // namespace model_io_detail

/// Self-describing model document: format version, kind, config and every
/// tree as nested nodes.
inline nlohmann::json to_json(const ClassifierModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) trees.push_back(model_io_detail::node_to_json(t, 0));
  return {{"format", "slugwatch-model"},
          {"version", kModelFormatVersion},
          {"kind", std::string(to_string(m.kind))},
          {"config", to_json(m.config)},
          {"class_weights", to_json(m.class_weights)},
          {"feature_names", m.feature_names},
          {"base_score", m.base_score},
          {"trees", trees}};
}

inline ClassifierModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "slugwatch-model") {
      throw Error(ErrorCode::kParse, "not a slugwatch model document");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::kParse, "unsupported model format version");
    }
    ClassifierModel m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.config = train_config_from_json(j.at("config"));
    m.class_weights = class_weights_from_json(j.at("class_weights"));
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.base_score = j.at("base_score").get<double>();
    for (const auto& t : j.at("trees")) {
      Tree tree;
      model_io_detail::node_from_json(t, tree);
      m.trees.push_back(std::move(tree));
    }
    if (m.kind != ModelKind::kBoosted && m.trees.empty()) {
      throw Error(ErrorCode::kParse, "model has no trees");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad model document: ") + e.what());
  }
}

}  // namespace slugwatch

#endif  // SLUGWATCH_MODEL_IO_HPP_

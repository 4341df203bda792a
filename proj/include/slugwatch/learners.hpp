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

#ifndef SLUGWATCH_LEARNERS_HPP_
#define SLUGWATCH_LEARNERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slugwatch/dataset.hpp"
#include "slugwatch/error.hpp"

namespace slugwatch {

enum class ModelKind { kTree, kForest, kBoosted };

constexpr std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTree: return "tree";
    case ModelKind::kForest: return "forest";
    case ModelKind::kBoosted: return "boosted";
  }
  return "unknown";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "tree") return ModelKind::kTree;
  if (s == "forest") return ModelKind::kForest;
  if (s == "boosted") return ModelKind::kBoosted;
  throw invalid_argument("unknown model kind '" + std::string(s) + "'");
}

struct ClassWeights {
  double w1 = 1.0;  // slug
  double w0 = 1.0;  // non-slug

  double operator()(int label) const { return label ? w1 : w0; }
  friend bool operator==(const ClassWeights&, const ClassWeights&) = default;
};

struct TrainConfig {
  ModelKind kind = ModelKind::kForest;
  int max_depth = 8;
  int min_samples_leaf = 1;
  int n_trees = 50;
  double feature_subsample = 0.5;  // forest only
  bool bootstrap = true;           // forest only
  double learning_rate = 0.1;      // boosted only
  double l2_regularization = 1.0;  // boosted only
  double min_child_hessian = 1e-3; // boosted only
  // nullopt selects inverse-frequency weights N / (2 N_k).
  std::optional<ClassWeights> class_weights = ClassWeights{};
  std::uint64_t seed = 7;

  void validate() const {
    if (max_depth < 0) throw invalid_argument("max_depth must be >= 0");
    if (min_samples_leaf < 1) throw invalid_argument("min_samples_leaf must be >= 1");
    if (kind == ModelKind::kForest && n_trees < 1)
      throw invalid_argument("forest needs n_trees >= 1");
    if (kind == ModelKind::kBoosted && n_trees < 0)
      throw invalid_argument("n_trees must be >= 0");
    if (!(feature_subsample > 0.0 && feature_subsample <= 1.0))
      throw invalid_argument("feature_subsample must lie in (0,1]");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
      throw invalid_argument("learning_rate must lie in (0,1]");
    if (!(l2_regularization >= 0.0)) throw invalid_argument("l2_regularization must be >= 0");
    if (!(min_child_hessian >= 0.0)) throw invalid_argument("min_child_hessian must be >= 0");
    if (class_weights && !(class_weights->w0 > 0.0 && class_weights->w1 > 0.0))
      throw invalid_argument("class weights must be strictly positive");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Dense row-major n x d matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols) {}

  static FeatureMatrix from_dataset(const Dataset& dataset) {
    FeatureMatrix m(dataset.size(), dataset.dimension());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      std::copy(dataset[i].features.begin(), dataset[i].features.end(),
                m.values_.begin() + static_cast<std::ptrdiff_t>(i * m.cols_));
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Gains closer than this are ties; the earlier candidate wins.
inline constexpr double kGainTolerance = 1e-12;
inline constexpr double kRawScoreClamp = 30.0;

inline double sigmoid(double z) {
  z = std::clamp(z, -kRawScoreClamp, kRawScoreClamp);
  return 1.0 / (1.0 + std::exp(-z));
}

/// 1 - p0^2 - p1^2 over weighted class counts.
inline double gini_impurity(double c0, double c1) {
  if (c0 < 0 || c1 < 0) throw invalid_argument("class counts must be non-negative");
  const double total = c0 + c1;
  if (total <= 0) throw invalid_argument("gini impurity of an empty node");
  const double p0 = c0 / total;
  const double p1 = c1 / total;
  return 1.0 - p0 * p0 - p1 * p1;
}

struct SplitCandidate {
  std::size_t feature_index = 0;
  double threshold = 0.0;  // rows with x <= threshold go left
  double gini_gain = 0.0;

  friend bool operator==(const SplitCandidate&, const SplitCandidate&) = default;
};

namespace learners_detail {

inline double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

struct ClassCounts {
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

inline ClassCounts count_classes(std::span<const int> y, std::span<const std::size_t> rows) {
  ClassCounts c;
  for (auto r : rows) (y[r] ? c.n1 : c.n0)++;
  return c;
}

}  // namespace learners_detail

/// Best Gini split over `rows` (duplicates count as repeated samples).
///
/// Candidate thresholds are midpoints between consecutive distinct values of
/// each candidate feature. Ties resolve to the lowest feature index, then the
/// lowest threshold. Returns nullopt when no split has positive gain or no
/// split leaves `min_leaf` samples on both sides.
inline std::optional<SplitCandidate> best_split(const FeatureMatrix& x, std::span<const int> y,
                                                std::span<const std::size_t> rows,
                                                const ClassWeights& weights,
                                                std::span<const std::size_t> candidate_features,
                                                std::size_t min_leaf = 1) {
  using learners_detail::ClassCounts;
  if (rows.size() < 2 || candidate_features.empty()) return std::nullopt;
  const ClassCounts total = learners_detail::count_classes(y, rows);
  const double c0 = weights.w0 * static_cast<double>(total.n0);
  const double c1 = weights.w1 * static_cast<double>(total.n1);
  const double parent = gini_impurity(c0, c1);
  if (parent <= 0.0) return std::nullopt;
  const double parent_weight = c0 + c1;

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, int>> column(rows.size());
  for (std::size_t f : candidate_features) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x(rows[i], f), y[rows[i]]};
    std::sort(column.begin(), column.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    ClassCounts left;
    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
      (column[i].second ? left.n1 : left.n0)++;
      if (column[i].first == column[i + 1].first) continue;
      const std::size_t n_left = i + 1;
      if (n_left < min_leaf || rows.size() - n_left < min_leaf) continue;
      const double l0 = weights.w0 * static_cast<double>(left.n0);
      const double l1 = weights.w1 * static_cast<double>(left.n1);
      const double r0 = weights.w0 * static_cast<double>(total.n0 - left.n0);
      const double r1 = weights.w1 * static_cast<double>(total.n1 - left.n1);
      const double gain = parent - (l0 + l1) / parent_weight * gini_impurity(l0, l1) -
                          (r0 + r1) / parent_weight * gini_impurity(r0, r1);
      if (gain > kGainTolerance && (!best || gain > best->gini_gain + kGainTolerance)) {
        best = SplitCandidate{f, learners_detail::midpoint(column[i].first, column[i + 1].first),
                              gain};
      }
    }
  }
  return best;
}

/// Binary tree stored as a flat node array; node 0 is the root.
struct Tree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf score

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  std::vector<Node> nodes;

  double predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const Node& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                          : n.right);
    }
    return nodes[i].value;
  }

  int depth() const { return depth_from(0); }

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  int depth_from(std::size_t i) const {
    if (nodes[i].is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(nodes[i].left)),
                        depth_from(static_cast<std::size_t>(nodes[i].right)));
  }
};

/// Trained classifier. predict_proba returns the raw (uncalibrated) score.
struct ClassifierModel {
  ModelKind kind = ModelKind::kTree;
  std::vector<Tree> trees;
  double base_score = 0.0;  // boosted: initial raw score
  TrainConfig config;
  ClassWeights class_weights;  // weights actually used
  std::vector<std::string> feature_names;

  std::size_t dimension() const { return feature_names.size(); }

  double predict_proba(std::span<const double> x) const {
    if (x.size() != dimension()) {
      throw invalid_argument("feature vector has " + std::to_string(x.size()) +
                             " values, model expects " + std::to_string(dimension()));
    }
    switch (kind) {
      case ModelKind::kTree:
        return trees.front().predict(x);
      case ModelKind::kForest: {
        double sum = 0.0;
        for (const auto& t : trees) sum += t.predict(x);
        return sum / static_cast<double>(trees.size());
      }
      case ModelKind::kBoosted:
        return sigmoid(raw_score(x));
    }
    return 0.0;
  }

  /// Boosted additive score before the sigmoid.
  double raw_score(std::span<const double> x) const {
    double f = base_score;
    for (const auto& t : trees) f += t.predict(x);
    return f;
  }

  std::vector<double> predict_all(const FeatureMatrix& x) const {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_proba(x.row(i));
    return out;
  }

  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

/// Inverse class frequency N / (2 N_k); an absent class gets weight 1.
inline ClassWeights auto_class_weights(std::span<const int> y) {
  const auto n1 = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const auto n0 = static_cast<double>(y.size()) - n1;
  const double n = static_cast<double>(y.size());
  return {n1 > 0 ? n / (2.0 * n1) : 1.0, n0 > 0 ? n / (2.0 * n0) : 1.0};
}

inline ClassWeights resolve_class_weights(const TrainConfig& config, std::span<const int> y) {
  return config.class_weights ? *config.class_weights : auto_class_weights(y);
}

namespace learners_detail {

inline void check_training_input(const FeatureMatrix& x, std::span<const int> y) {
  if (x.rows() == 0) throw invalid_argument("empty training set");
  if (x.rows() != y.size()) throw invalid_argument("feature/label length mismatch");
  for (int v : y) {
    if (v != 0 && v != 1) throw invalid_argument("training labels must be 0 or 1");
  }
}

/// Recursive Gini induction shared by the single tree and the forest.
class GiniTreeBuilder {
 public:
  GiniTreeBuilder(const FeatureMatrix& x, std::span<const int> y, const ClassWeights& weights,
                  const TrainConfig& config, std::mt19937_64* feature_rng)
      : x_(x), y_(y), weights_(weights), config_(config), feature_rng_(feature_rng) {}

  Tree build(std::vector<std::size_t> rows) {
    Tree tree;
    tree_ = &tree;
    grow(std::move(rows), 0);
    return tree;
  }

 private:
  int grow(std::vector<std::size_t> rows, int depth) {
    const ClassCounts counts = count_classes(y_, rows);
    const double c0 = weights_.w0 * static_cast<double>(counts.n0);
    const double c1 = weights_.w1 * static_cast<double>(counts.n1);
    const int index = static_cast<int>(tree_->nodes.size());
    tree_->nodes.push_back({});
    tree_->nodes[index].value = c1 / (c0 + c1);

    const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
    if (depth >= config_.max_depth || rows.size() < 2 * min_leaf || counts.n0 == 0 ||
        counts.n1 == 0) {
      return index;
    }
    const std::vector<std::size_t> features = candidate_features();
    const auto split = best_split(x_, y_, rows, weights_, features, min_leaf);
    if (!split) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_(r, split->feature_index) <= split->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    Tree::Node& node = tree_->nodes[index];
    node.feature = static_cast<int>(split->feature_index);
    node.threshold = split->threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), 0);
    if (!feature_rng_) return all;
    const auto k = std::min<std::size_t>(
        d, static_cast<std::size_t>(std::ceil(config_.feature_subsample * static_cast<double>(d))));
    if (k >= d) return all;
    std::shuffle(all.begin(), all.end(), *feature_rng_);
    all.resize(std::max<std::size_t>(k, 1));
    std::sort(all.begin(), all.end());
    return all;
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  ClassWeights weights_;
  const TrainConfig& config_;
  std::mt19937_64* feature_rng_;
  Tree* tree_ = nullptr;
};

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

inline std::uint64_t tree_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace learners_detail

/// CART-style Gini tree; leaves score the weighted positive fraction.
inline ClassifierModel train_tree(const FeatureMatrix& x, std::span<const int> y,
                                  const TrainConfig& config,
                                  std::vector<std::string> feature_names = {}) {
  config.validate();
  learners_detail::check_training_input(x, y);
  ClassifierModel model;
  model.kind = ModelKind::kTree;
  model.config = config;
  model.config.kind = ModelKind::kTree;
  model.class_weights = resolve_class_weights(config, y);
  model.feature_names = std::move(feature_names);
  if (model.feature_names.empty()) model.feature_names.resize(x.cols());
  learners_detail::GiniTreeBuilder builder(x, y, model.class_weights, model.config, nullptr);
  model.trees.push_back(builder.build(learners_detail::all_rows(x.rows())));
  return model;
}

/// Bagged Gini trees with a random feature subset drawn at every node.
/// Randomness comes from std::mt19937_64 seeded per tree from config.seed.
inline ClassifierModel train_forest(const FeatureMatrix& x, std::span<const int> y,
                                    const TrainConfig& config,
                                    std::vector<std::string> feature_names = {}) {
  config.validate();
  learners_detail::check_training_input(x, y);
  ClassifierModel model;
  model.kind = ModelKind::kForest;
  model.config = config;
  model.config.kind = ModelKind::kForest;
  model.class_weights = resolve_class_weights(config, y);
  model.feature_names = std::move(feature_names);
  if (model.feature_names.empty()) model.feature_names.resize(x.cols());

  const std::size_t n = x.rows();
  for (int t = 0; t < config.n_trees; ++t) {
    std::mt19937_64 rng(learners_detail::tree_seed(config.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows;
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      rows.resize(n);
      for (auto& r : rows) r = pick(rng);
    } else {
      rows = learners_detail::all_rows(n);
    }
    learners_detail::GiniTreeBuilder builder(x, y, model.class_weights, model.config, &rng);
    model.trees.push_back(builder.build(std::move(rows)));
  }
  return model;
}

namespace learners_detail {

/// Second-order regression tree on per-sample gradients and hessians.
class BoostedTreeBuilder {
 public:
  BoostedTreeBuilder(const FeatureMatrix& x, std::span<const double> grad,
                     std::span<const double> hess, const TrainConfig& config)
      : x_(x), grad_(grad), hess_(hess), config_(config) {}

  Tree build() {
    Tree tree;
    tree_ = &tree;
    grow(all_rows(x_.rows()), 0);
    return tree;
  }

 private:
  double objective(double g, double h) const {
    return g * g / (h + config_.l2_regularization);
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    double g = 0.0, h = 0.0;
    for (auto r : rows) {
      g += grad_[r];
      h += hess_[r];
    }
    const int index = static_cast<int>(tree_->nodes.size());
    tree_->nodes.push_back({});
    const double denom = h + config_.l2_regularization;
    tree_->nodes[index].value = denom > 0 ? -config_.learning_rate * g / denom : 0.0;

    const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
    if (depth >= config_.max_depth || rows.size() < 2 * min_leaf) return index;

    const double parent = objective(g, h);
    double best_gain = kGainTolerance;
    std::optional<std::pair<std::size_t, double>> best;
    std::vector<std::size_t> order = rows;
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        gl += grad_[order[i]];
        hl += hess_[order[i]];
        const double v = x_(order[i], f);
        const double next = x_(order[i + 1], f);
        if (v == next) continue;
        const std::size_t n_left = i + 1;
        if (n_left < min_leaf || order.size() - n_left < min_leaf) continue;
        const double hr = h - hl;
        if (hl < config_.min_child_hessian || hr < config_.min_child_hessian) continue;
        const double gain = 0.5 * (objective(gl, hl) + objective(g - gl, hr) - parent);
        if (gain > best_gain + (best ? kGainTolerance : 0.0)) {
          best_gain = gain;
          best = {{f, midpoint(v, next)}};
        }
      }
    }
    if (!best) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_(r, best->first) <= best->second ? left : right).push_back(r);
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    Tree::Node& node = tree_->nodes[index];
    node.feature = static_cast<int>(best->first);
    node.threshold = best->second;
    node.left = l;
    node.right = r;
    return index;
  }

  const FeatureMatrix& x_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const TrainConfig& config_;
  Tree* tree_ = nullptr;
};

}  // namespace learners_detail

/// Class-weighted logistic loss, averaged over total weight.
inline double weighted_log_loss(std::span<const double> raw_scores, std::span<const int> y,
                                const ClassWeights& weights) {
  double loss = 0.0, total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double z = std::clamp(raw_scores[i], -kRawScoreClamp, kRawScoreClamp);
    // log(1 + e^z) - y z, evaluated stably
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    const double w = weights(y[i]);
    loss += w * (softplus - y[i] * z);
    total += w;
  }
  return loss / total;
}

/// Gradient boosting on the class-weighted logistic loss with Newton leaf
/// weights -G / (H + lambda), shrunk by the learning rate. When `loss_trace`
/// is given it receives the training loss after the base score and after
/// every round (n_trees + 1 values).
inline ClassifierModel train_boosted(const FeatureMatrix& x, std::span<const int> y,
                                     const TrainConfig& config,
                                     std::vector<std::string> feature_names = {},
                                     std::vector<double>* loss_trace = nullptr) {
  config.validate();
  learners_detail::check_training_input(x, y);
  ClassifierModel model;
  model.kind = ModelKind::kBoosted;
  model.config = config;
  model.config.kind = ModelKind::kBoosted;
  model.class_weights = resolve_class_weights(config, y);
  model.feature_names = std::move(feature_names);
  if (model.feature_names.empty()) model.feature_names.resize(x.cols());

  const ClassWeights& w = model.class_weights;
  double pos = 0.0, neg = 0.0;
  for (int label : y) (label ? pos : neg) += w(label);
  if (pos == 0.0) {
    model.base_score = -kRawScoreClamp;
  } else if (neg == 0.0) {
    model.base_score = kRawScoreClamp;
  } else {
    model.base_score = std::clamp(std::log(pos / neg), -kRawScoreClamp, kRawScoreClamp);
  }

  const std::size_t n = x.rows();
  std::vector<double> raw(n, model.base_score);
  std::vector<double> grad(n), hess(n);
  if (loss_trace) {
    loss_trace->clear();
    loss_trace->push_back(weighted_log_loss(raw, y, w));
  }
  for (int round = 0; round < config.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(raw[i]);
      const double wi = w(y[i]);
      grad[i] = wi * (p - y[i]);
      hess[i] = wi * p * (1.0 - p);
    }
    learners_detail::BoostedTreeBuilder builder(x, grad, hess, model.config);
    Tree tree = builder.build();
    for (std::size_t i = 0; i < n; ++i) raw[i] += tree.predict(x.row(i));
    model.trees.push_back(std::move(tree));
    if (loss_trace) loss_trace->push_back(weighted_log_loss(raw, y, w));
  }
  return model;
}

inline ClassifierModel train_model(const FeatureMatrix& x, std::span<const int> y,
                                   const TrainConfig& config,
                                   std::vector<std::string> feature_names = {}) {
  switch (config.kind) {
    case ModelKind::kTree: return train_tree(x, y, config, std::move(feature_names));
    case ModelKind::kForest: return train_forest(x, y, config, std::move(feature_names));
    case ModelKind::kBoosted: return train_boosted(x, y, config, std::move(feature_names));
  }
  throw invalid_argument("unknown model kind");
}

inline ClassifierModel train_model(const Dataset& train, const TrainConfig& config) {
  const FeatureMatrix x = FeatureMatrix::from_dataset(train);
  const std::vector<int> y = train.labels();
  return train_model(x, y, config, train.feature_names());
}

}  // namespace slugwatch

#endif  // SLUGWATCH_LEARNERS_HPP_

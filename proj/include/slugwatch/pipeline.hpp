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

#ifndef SLUGWATCH_PIPELINE_HPP_
#define SLUGWATCH_PIPELINE_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "slugwatch/calibration.hpp"
#include "slugwatch/csv.hpp"
#include "slugwatch/dataset.hpp"
#include "slugwatch/evaluation.hpp"
#include "slugwatch/learners.hpp"
#include "slugwatch/snapshot.hpp"
#include "slugwatch/split.hpp"

namespace slugwatch {

struct ExperimentRequest {
  SplitSpec split;
  TrainConfig config;
  ThresholdRule rule = ThresholdRule::fbeta(1.0);
  EventMatchSpec event_match;
  ConfidenceParams confidence;
  // Trailing share of the training interval held out for calibration and
  // threshold tuning.
  double calibration_fraction = 0.25;
};

/// Key for a request: the tuned threshold is represented by its rule.
inline std::string request_key(const ExperimentRequest& request) {
  const ThresholdSlot slot = request.rule.kind == ThresholdRuleKind::kFixed
                                 ? ThresholdSlot{request.rule.tau}
                                 : ThresholdSlot{request.rule};
  return experiment_key(request.config.kind, request.config, request.config.seed, request.split,
                        slot);
}

inline std::string dataset_fingerprint(const Dataset& dataset) {
  return sha256_hex(export_csv_string(dataset));
}

inline ScoredSeries score_dataset(const ClassifierModel& model,
                                  const CalibrationModel& calibration, const Dataset& dataset) {
  ScoredSeries s;
  s.timestamps = dataset.timestamps();
  for (const auto& sample : dataset.samples()) {
    const double raw = model.predict_proba(sample.features);
    s.raw_scores.push_back(raw);
    s.probabilities.push_back(calibrate(calibration, raw));
  }
  if (dataset.fully_labeled()) s.labels = dataset.labels();
  return s;
}

/// Maps grid-position episodes back to index ranges of `timestamps`.
inline std::vector<Episode> grid_to_index_episodes(std::span<const Minutes> timestamps,
                                                   Minutes period,
                                                   std::span<const Episode> episodes) {
  std::vector<Episode> out;
  if (timestamps.empty()) return out;
  const Minutes origin = timestamps.front();
  for (const auto& e : episodes) {
    const auto lo = std::lower_bound(timestamps.begin(), timestamps.end(), origin + e.begin * period);
    const auto hi = std::lower_bound(timestamps.begin(), timestamps.end(), origin + e.end * period);
    out.push_back({lo - timestamps.begin(), hi - timestamps.begin()});
  }
  return out;
}

/// Test-interval evaluation at a fixed threshold.
struct Evaluation {
  ScoredSeries scores;
  std::vector<int> predictions;
  std::vector<ConfusionLabel> confusion;
  PointwiseMetrics pointwise;
  std::vector<Episode> truth_episodes;      // grid positions
  std::vector<Episode> predicted_episodes;  // grid positions
  EventMetrics events;
  std::vector<RocPoint> roc;
  std::vector<ConfidenceAssessment> confidence;  // episodes as index ranges
};

inline Evaluation evaluate(const ClassifierModel& model, const CalibrationModel& calibration,
                           const Dataset& test, double tau, double beta,
                           const EventMatchSpec& match, const ConfidenceParams& confidence) {
  Evaluation ev;
  ev.scores = score_dataset(model, calibration, test);
  const std::vector<int> y = test.labels();
  for (double p : ev.scores.probabilities) ev.predictions.push_back(apply_threshold(p, tau) ? 1 : 0);
  ev.confusion = confusion_map(y, ev.predictions);
  ev.pointwise = pointwise_metrics(ev.confusion, beta);
  const Minutes period = test.sampling_period();
  ev.truth_episodes = extract_episodes(ev.scores.timestamps, y, period);
  ev.predicted_episodes = extract_episodes(ev.scores.timestamps, ev.predictions, period);
  ev.events = match_events(ev.predicted_episodes, ev.truth_episodes, match);
  const bool both = std::count(y.begin(), y.end(), 1) > 0 && std::count(y.begin(), y.end(), 0) > 0;
  if (both) ev.roc = roc_and_youden(ev.scores.probabilities, y).curve;
  ev.confidence = assess_confidence(
      ev.scores.probabilities,
      grid_to_index_episodes(ev.scores.timestamps, period, ev.predicted_episodes), tau, confidence);
  return ev;
}

using ProgressFn = std::function<void(double fraction, std::string_view stage)>;

struct ExperimentResult {
  Snapshot snapshot;
  ClassifierModel model;
  Evaluation evaluation;
  Dataset test;
};

/// split -> train -> calibrate -> tune threshold -> evaluate.
///
/// The model is fit on the leading part of the training interval; Platt
/// scaling and threshold tuning use the trailing calibration slice, never the
/// test interval.
inline ExperimentResult run_experiment(const Dataset& dataset, const ExperimentRequest& request,
                                       const ProgressFn& progress = {}) {
  auto report = [&](double f, std::string_view stage) {
    if (progress) progress(f, stage);
  };
  request.config.validate();
  request.rule.validate();
  request.event_match.validate();
  if (!(request.calibration_fraction > 0.0 && request.calibration_fraction < 1.0)) {
    throw invalid_argument("calibration fraction must lie in (0,1)");
  }

  report(0.05, "split");
  SplitResult parts = chronological_split(dataset, request.split);
  if (parts.train.size() < 2) throw invalid_argument("training interval holds fewer than 2 samples");
  if (parts.test.empty()) throw invalid_argument("test interval holds no samples");

  const std::size_t n = parts.train.size();
  auto n_cal = static_cast<std::size_t>(std::ceil(request.calibration_fraction * n));
  n_cal = std::clamp<std::size_t>(n_cal, 1, n - 1);
  const auto& train_samples = parts.train.samples();
  const Dataset fit = parts.train.with_samples(
      {train_samples.begin(), train_samples.end() - static_cast<std::ptrdiff_t>(n_cal)}, true);
  const Dataset cal = parts.train.with_samples(
      {train_samples.end() - static_cast<std::ptrdiff_t>(n_cal), train_samples.end()}, true);

  report(0.15, "train");
  ExperimentResult result;
  result.model = train_model(fit, request.config);

  report(0.70, "calibrate");
  const std::vector<int> cal_y = cal.labels();
  std::vector<double> cal_raw;
  for (const auto& s : cal.samples()) cal_raw.push_back(result.model.predict_proba(s.features));
  const auto cal_pos = std::count(cal_y.begin(), cal_y.end(), 1);
  if (cal_pos == 0 || cal_pos == static_cast<std::ptrdiff_t>(cal_y.size())) {
    throw invalid_argument(
        "calibration slice (trailing part of the training interval) needs both classes");
  }
  const CalibrationModel calibration = fit_platt(cal_raw, cal_y);
  std::vector<double> cal_p;
  for (double r : cal_raw) cal_p.push_back(calibrate(calibration, r));

  report(0.80, "tune threshold");
  const ThresholdChoice choice = choose_threshold(request.rule, cal_p, cal_y);

  report(0.85, "evaluate");
  const double beta = request.rule.kind == ThresholdRuleKind::kFBeta ? request.rule.beta : 1.0;
  result.evaluation = evaluate(result.model, calibration, parts.test, choice.tau, beta,
                               request.event_match, request.confidence);
  result.test = std::move(parts.test);

  Snapshot& s = result.snapshot;
  s.key = request_key(request);
  s.model_kind = request.config.kind;
  s.config = request.config;
  s.seed = request.config.seed;
  s.split = request.split;
  s.threshold_rule = request.rule;
  s.tau = choice.tau;
  s.tuning_score = choice.score;
  s.pointwise = result.evaluation.pointwise;
  s.event_theta = request.event_match.theta;
  s.events = result.evaluation.events;
  s.roc = result.evaluation.roc;
  s.calibration = calibration;
  s.confidence = result.evaluation.confidence;
  s.created_at = utc_now_iso();
  s.software_version = std::string(kSoftwareVersion);
  s.dataset_fingerprint = dataset_fingerprint(dataset);
  report(1.0, "done");
  return result;
}

struct CachedRun {
  Snapshot snapshot;
  bool cache_hit = false;
};

/// Loads the snapshot for the request's key when present, otherwise runs
/// and stores it. A stored run over a different dataset is a conflict.
inline CachedRun run_cached(SnapshotStore& store, const Dataset& dataset,
                            const ExperimentRequest& request, const ProgressFn& progress = {}) {
  const std::string key = request_key(request);
  if (store.contains(key)) {
    Snapshot s = store.load(key);
    if (s.dataset_fingerprint != dataset_fingerprint(dataset)) {
      throw Error(ErrorCode::kConflict,
                  "experiment " + key + " is stored for a different dataset (fingerprint " +
                      s.dataset_fingerprint.substr(0, 12) + ")");
    }
    if (progress) progress(1.0, "cached");
    return {std::move(s), true};
  }
  ExperimentResult r = run_experiment(dataset, request, progress);
  store.save(r.snapshot, &r.model);
  return {store.load(key), false};
}

}  // namespace slugwatch

#endif  // SLUGWATCH_PIPELINE_HPP_

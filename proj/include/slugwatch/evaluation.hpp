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

#ifndef SLUGWATCH_EVALUATION_HPP_
#define SLUGWATCH_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slugwatch/calibration.hpp"
#include "slugwatch/dataset.hpp"
#include "slugwatch/error.hpp"
#include "slugwatch/metrics.hpp"

namespace slugwatch {

enum class ConfusionLabel { kTP, kFP, kTN, kFN };

constexpr std::string_view to_string(ConfusionLabel c) {
  switch (c) {
    case ConfusionLabel::kTP: return "TP";
    case ConfusionLabel::kFP: return "FP";
    case ConfusionLabel::kTN: return "TN";
    case ConfusionLabel::kFN: return "FN";
  }
  return "?";
}

inline ConfusionLabel confusion_label(int y, int yhat) {
  if (y) return yhat ? ConfusionLabel::kTP : ConfusionLabel::kFN;
  return yhat ? ConfusionLabel::kFP : ConfusionLabel::kTN;
}

inline std::vector<ConfusionLabel> confusion_map(std::span<const int> y,
                                                 std::span<const int> yhat) {
  if (y.size() != yhat.size()) throw invalid_argument("label/prediction length mismatch");
  std::vector<ConfusionLabel> out;
  out.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.push_back(confusion_label(y[i], yhat[i]));
  return out;
}

inline ConfusionCounts count_confusion(std::span<const ConfusionLabel> map) {
  ConfusionCounts c;
  for (auto l : map) {
    switch (l) {
      case ConfusionLabel::kTP: ++c.tp; break;
      case ConfusionLabel::kFP: ++c.fp; break;
      case ConfusionLabel::kTN: ++c.tn; break;
      case ConfusionLabel::kFN: ++c.fn; break;
    }
  }
  return c;
}

struct PointwiseMetrics {
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double fbeta = 0.0;
  double beta = 1.0;
  // False when the ratio's denominator was zero and the value is a stand-in 0.
  bool precision_defined = false;
  bool recall_defined = false;

  friend bool operator==(const PointwiseMetrics&, const PointwiseMetrics&) = default;
};

inline PointwiseMetrics pointwise_metrics(std::span<const ConfusionLabel> map, double beta = 1.0) {
  PointwiseMetrics m;
  m.beta = beta;
  m.counts = count_confusion(map);
  m.precision_defined = m.counts.tp + m.counts.fp > 0;
  m.recall_defined = m.counts.tp + m.counts.fn > 0;
  m.precision = precision(m.counts);
  m.recall = recall(m.counts);
  m.fbeta = fbeta_score(m.precision, m.recall, beta);
  return m;
}

/// Half-open run of positive steps [begin, end).
struct Episode {
  std::int64_t begin = 0;
  std::int64_t end = 0;

  std::int64_t length() const { return end - begin; }
  friend bool operator==(const Episode&, const Episode&) = default;
};

/// Maximal runs of 1s, by position in the sequence.
inline std::vector<Episode> extract_episodes(std::span<const int> binary) {
  std::vector<Episode> out;
  std::int64_t start = -1;
  for (std::size_t i = 0; i <= binary.size(); ++i) {
    const bool on = i < binary.size() && binary[i] != 0;
    if (on && start < 0) start = static_cast<std::int64_t>(i);
    if (!on && start >= 0) {
      out.push_back({start, static_cast<std::int64_t>(i)});
      start = -1;
    }
  }
  return out;
}

/// Episodes on the sampling grid: positions are (t - origin) / period, and
/// a timestamp gap always ends a run.
inline std::vector<Episode> extract_episodes(std::span<const Minutes> timestamps,
                                             std::span<const int> binary, Minutes period) {
  if (timestamps.size() != binary.size()) throw invalid_argument("length mismatch");
  std::vector<Episode> out;
  if (timestamps.empty()) return out;
  const Minutes origin = timestamps.front();
  std::optional<Episode> open;
  for (std::size_t i = 0; i < binary.size(); ++i) {
    const std::int64_t step = (timestamps[i] - origin) / period;
    if (open && (binary[i] == 0 || step != open->end)) {
      out.push_back(*open);
      open.reset();
    }
    if (binary[i] != 0) {
      if (!open) open = Episode{step, step};
      open->end = step + 1;
    }
  }
  if (open) out.push_back(*open);
  return out;
}

inline std::vector<int> episodes_to_binary(std::span<const Episode> episodes, std::size_t n) {
  std::vector<int> out(n, 0);
  for (const auto& e : episodes) {
    for (auto t = std::max<std::int64_t>(e.begin, 0);
         t < std::min<std::int64_t>(e.end, static_cast<std::int64_t>(n)); ++t) {
      out[static_cast<std::size_t>(t)] = 1;
    }
  }
  return out;
}

inline std::int64_t overlap_steps(const Episode& a, const Episode& b) {
  return std::max<std::int64_t>(0, std::min(a.end, b.end) - std::max(a.begin, b.begin));
}

/// |A ∩ B| / |A ∪ B| over discrete steps.
inline double iou(const Episode& a, const Episode& b) {
  const std::int64_t inter = overlap_steps(a, b);
  const std::int64_t uni = a.length() + b.length() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

struct EventMatchSpec {
  double theta = 0.5;

  void validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) throw invalid_argument("theta must lie in (0,1]");
  }
};

struct EventMatch {
  std::size_t truth_index = 0;
  std::size_t predicted_index = 0;
  double iou = 0.0;

  friend bool operator==(const EventMatch&, const EventMatch&) = default;
};

struct EventMetrics {
  std::vector<EventMatch> matches;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;

  friend bool operator==(const EventMetrics&, const EventMetrics&) = default;
};

namespace evaluation_detail {

inline void check_episode_list(std::span<const Episode> list, const char* name) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].begin >= list[i].end) {
      throw invalid_argument(std::string("empty episode in ") + name + " list");
    }
    if (i > 0 && list[i].begin < list[i - 1].end) {
      throw invalid_argument(std::string(name) +
                             " episodes must be sorted and non-overlapping");
    }
  }
}

}  // namespace evaluation_detail

/// Greedy one-to-one matching in descending IoU order (ties: lower truth
/// index, then lower predicted index), accepting pairs with IoU >= theta.
inline EventMetrics match_events(std::span<const Episode> predicted,
                                 std::span<const Episode> truth,
                                 const EventMatchSpec& spec = {}) {
  spec.validate();
  evaluation_detail::check_episode_list(predicted, "predicted");
  evaluation_detail::check_episode_list(truth, "truth");

  struct Pair {
    std::size_t t, p;
    std::int64_t inter, uni;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      const std::int64_t inter = overlap_steps(truth[t], predicted[p]);
      if (inter == 0) continue;
      const std::int64_t uni = truth[t].length() + predicted[p].length() - inter;
      if (static_cast<double>(inter) / static_cast<double>(uni) >= spec.theta) {
        pairs.push_back({t, p, inter, uni});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    const auto lhs = a.inter * b.uni;
    const auto rhs = b.inter * a.uni;
    if (lhs != rhs) return lhs > rhs;
    if (a.t != b.t) return a.t < b.t;
    return a.p < b.p;
  });

  EventMetrics m;
  std::vector<bool> truth_used(truth.size()), pred_used(predicted.size());
  for (const auto& pr : pairs) {
    if (truth_used[pr.t] || pred_used[pr.p]) continue;
    truth_used[pr.t] = pred_used[pr.p] = true;
    m.matches.push_back(
        {pr.t, pr.p, static_cast<double>(pr.inter) / static_cast<double>(pr.uni)});
  }
  m.tp = static_cast<std::int64_t>(m.matches.size());
  m.fp = static_cast<std::int64_t>(predicted.size()) - m.tp;
  m.fn = static_cast<std::int64_t>(truth.size()) - m.tp;
  m.precision = predicted.empty() ? 0.0 : static_cast<double>(m.tp) / predicted.size();
  m.recall = truth.empty() ? 0.0 : static_cast<double>(m.tp) / truth.size();
  return m;
}

enum class ConfidenceClass { kHighConfidence, kBorderline };

constexpr std::string_view to_string(ConfidenceClass c) {
  return c == ConfidenceClass::kBorderline ? "borderline" : "high_confidence";
}

struct ConfidenceAssessment {
  Episode episode;
  double mean = 0.0;
  double variance = 0.0;  // population variance of p over the episode
  double borderline_fraction = 0.0;
  ConfidenceClass classification = ConfidenceClass::kHighConfidence;

  friend bool operator==(const ConfidenceAssessment&, const ConfidenceAssessment&) = default;
};

struct ConfidenceParams {
  double band = 0.1;      // delta: half-width around tau
  double fraction = 0.3;  // phi: borderline when the in-band fraction exceeds this
};

/// Episodes index into `p`. An episode is borderline when more than `phi`
/// of its steps lie strictly within `delta` of tau.
inline std::vector<ConfidenceAssessment> assess_confidence(std::span<const double> p,
                                                           std::span<const Episode> episodes,
                                                           double tau,
                                                           const ConfidenceParams& params = {}) {
  std::vector<ConfidenceAssessment> out;
  for (const auto& e : episodes) {
    if (e.begin < 0 || e.end > static_cast<std::int64_t>(p.size()) || e.begin >= e.end) {
      throw invalid_argument("episode outside the scored series");
    }
    ConfidenceAssessment a;
    a.episode = e;
    const auto n = static_cast<double>(e.length());
    std::int64_t in_band = 0;
    double sum = 0.0;
    for (auto t = e.begin; t < e.end; ++t) {
      const double v = p[static_cast<std::size_t>(t)];
      sum += v;
      if (std::abs(v - tau) < params.band) ++in_band;
    }
    a.mean = sum / n;
    double ss = 0.0;
    for (auto t = e.begin; t < e.end; ++t) {
      const double d = p[static_cast<std::size_t>(t)] - a.mean;
      ss += d * d;
    }
    a.variance = ss / n;
    a.borderline_fraction = static_cast<double>(in_band) / n;
    a.classification = a.borderline_fraction > params.fraction ? ConfidenceClass::kBorderline
                                                               : ConfidenceClass::kHighConfidence;
    out.push_back(a);
  }
  return out;
}

/// One timeline point: the selected parameter with truth, decision,
/// confusion category and probability.
struct OverlayRow {
  Minutes timestamp = 0;
  double parameter = 0.0;
  std::optional<int> y;
  int yhat = 0;
  std::optional<ConfusionLabel> category;
  double p = 0.0;

  friend bool operator==(const OverlayRow&, const OverlayRow&) = default;
};

inline std::vector<OverlayRow> build_overlay(const Dataset& dataset, std::size_t parameter_index,
                                             std::span<const double> p, double tau) {
  if (p.size() != dataset.size()) throw invalid_argument("probability/sample length mismatch");
  if (parameter_index >= dataset.dimension()) throw invalid_argument("no such parameter");
  std::vector<OverlayRow> rows;
  rows.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    OverlayRow r;
    r.timestamp = dataset[i].timestamp;
    r.parameter = dataset[i].features[parameter_index];
    r.y = dataset[i].label;
    r.yhat = apply_threshold(p[i], tau) ? 1 : 0;
    if (r.y) r.category = confusion_label(*r.y, r.yhat);
    r.p = p[i];
    rows.push_back(r);
  }
  return rows;
}

inline void export_overlay_csv(const std::vector<OverlayRow>& rows, std::ostream& out) {
  out << "timestamp,parameter,y,yhat,c,p\n";
  char buf[64];
  for (const auto& r : rows) {
    out << format_timestamp(r.timestamp) << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.parameter);
    out << buf << ',';
    if (r.y) out << *r.y;
    out << ',' << r.yhat << ',';
    if (r.category) out << to_string(*r.category);
    std::snprintf(buf, sizeof(buf), "%.17g", r.p);
    out << ',' << buf << '\n';
  }
}

}  // namespace slugwatch

#endif  // SLUGWATCH_EVALUATION_HPP_

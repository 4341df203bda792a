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

#ifndef SLUGWATCH_CALIBRATION_HPP_
#define SLUGWATCH_CALIBRATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "slugwatch/error.hpp"
#include "slugwatch/metrics.hpp"
#include "slugwatch/time.hpp"

namespace slugwatch {

/// p = 1 / (1 + exp(A s + B)) over a raw score s.
struct CalibrationModel {
  double a = 0.0;
  double b = 0.0;
  int iterations = 0;

  friend bool operator==(const CalibrationModel& x, const CalibrationModel& y) {
    return x.a == y.a && x.b == y.b;
  }
};

/// Raw and calibrated scores over time; labels empty when unknown.
struct ScoredSeries {
  std::vector<Minutes> timestamps;
  std::vector<double> raw_scores;
  std::vector<double> probabilities;
  std::vector<int> labels;

  std::size_t size() const { return probabilities.size(); }
  bool labeled() const { return !labels.empty(); }
};

inline bool apply_threshold(double p, double tau) { return p >= tau; }

/// Exponent clamp keeps calibrated output strictly inside (0,1).
inline constexpr double kCalibrationExponentClamp = 30.0;

inline double calibrate(const CalibrationModel& model, double raw) {
  const double z =
      std::clamp(model.a * raw + model.b, -kCalibrationExponentClamp, kCalibrationExponentClamp);
  return 1.0 / (1.0 + std::exp(z));
}

namespace calibration_detail {

inline void check_binary(std::span<const double> scores, std::span<const int> labels,
                         std::int64_t& positives, std::int64_t& negatives) {
  if (scores.size() != labels.size()) throw invalid_argument("score/label length mismatch");
  positives = negatives = 0;
  for (int y : labels) {
    if (y == 1) {
      ++positives;
    } else if (y == 0) {
      ++negatives;
    } else {
      throw invalid_argument("labels must be 0 or 1");
    }
  }
  if (positives == 0 || negatives == 0) {
    throw invalid_argument("both classes must be present");
  }
}

}  // namespace calibration_detail

/// Platt scaling with smoothed targets, fitted by Newton's method with a
/// backtracking line search. Stops when the gradient norm drops below 1e-8,
/// after 100 iterations, or when the line search cannot make progress.
inline CalibrationModel fit_platt(std::span<const double> scores, std::span<const int> labels) {
  std::int64_t n_pos = 0, n_neg = 0;
  calibration_detail::check_binary(scores, labels, n_pos, n_neg);
  for (double s : scores) {
    if (!std::isfinite(s)) throw invalid_argument("scores must be finite");
  }
  const double hi_target = (static_cast<double>(n_pos) + 1.0) / (static_cast<double>(n_pos) + 2.0);
  const double lo_target = 1.0 / (static_cast<double>(n_neg) + 2.0);
  const std::size_t n = scores.size();

  constexpr int kMaxIterations = 100;
  constexpr double kGradientTolerance = 1e-8;
  constexpr double kMinStep = 1e-10;
  constexpr double kHessianRidge = 1e-12;

  auto target = [&](std::size_t i) { return labels[i] ? hi_target : lo_target; };
  // Negative log-likelihood of the smoothed targets, evaluated stably.
  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = scores[i] * a + b;
      const double t = target(i);
      f += z >= 0 ? t * z + std::log1p(std::exp(-z)) : (t - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };

  CalibrationModel model;
  model.a = 0.0;
  model.b = std::log((static_cast<double>(n_neg) + 1.0) / (static_cast<double>(n_pos) + 1.0));
  double fval = objective(model.a, model.b);
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    double h11 = kHessianRidge, h22 = kHessianRidge, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = scores[i] * model.a + model.b;
      double p, q;  // p = P(y=1), q = 1 - p
      if (z >= 0) {
        const double e = std::exp(-z);
        p = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(z);
        p = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double d2 = p * q;
      h11 += scores[i] * scores[i] * d2;
      h22 += d2;
      h21 += scores[i] * d2;
      const double d1 = target(i) - p;
      g1 += scores[i] * d1;
      g2 += d1;
    }
    model.iterations = iter;
    if (std::hypot(g1, g2) < kGradientTolerance) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    bool moved = false;
    while (step >= kMinStep) {
      const double na = model.a + step * da;
      const double nb = model.b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        model.a = na;
        model.b = nb;
        fval = nf;
        moved = true;
        break;
      }
      step /= 2.0;
    }
    if (!moved) break;
  }
  return model;
}

enum class ThresholdRuleKind { kFBeta, kYouden, kFixed };

/// How the decision threshold is chosen.
struct ThresholdRule {
  ThresholdRuleKind kind = ThresholdRuleKind::kFBeta;
  double beta = 1.0;        // kFBeta
  double tau = 0.5;         // kFixed
  double grid_step = 0.01;  // kFBeta; <= 0 disables the uniform grid

  static ThresholdRule fbeta(double beta, double grid_step = 0.01) {
    return {ThresholdRuleKind::kFBeta, beta, 0.5, grid_step};
  }
  static ThresholdRule youden() { return {ThresholdRuleKind::kYouden, 1.0, 0.5, 0.01}; }
  static ThresholdRule fixed(double tau) { return {ThresholdRuleKind::kFixed, 1.0, tau, 0.01}; }

  void validate() const {
    if (kind == ThresholdRuleKind::kFBeta && !(beta > 0.0)) throw invalid_argument("beta must be > 0");
    if (kind == ThresholdRuleKind::kFixed && !(tau >= 0.0 && tau <= 1.0))
      throw invalid_argument("tau must lie in [0,1]");
  }

  /// Stable text form, e.g. "fbeta:2", "youden", "fixed:0.5".
  std::string describe() const;

  friend bool operator==(const ThresholdRule&, const ThresholdRule&) = default;
};

inline std::string ThresholdRule::describe() const {
  char buf[64];
  switch (kind) {
    case ThresholdRuleKind::kFBeta:
      std::snprintf(buf, sizeof(buf), "fbeta:%.17g", beta);
      return buf;
    case ThresholdRuleKind::kYouden:
      return "youden";
    case ThresholdRuleKind::kFixed:
      std::snprintf(buf, sizeof(buf), "fixed:%.17g", tau);
      return buf;
  }
  return "unknown";
}

struct ThresholdChoice {
  double tau = 0.5;
  double score = 0.0;  // F_beta or J at tau
};

namespace calibration_detail {

/// Confusion counts at threshold tau from pre-sorted class score lists.
inline ConfusionCounts counts_at(const std::vector<double>& pos_sorted,
                                 const std::vector<double>& neg_sorted, double tau) {
  ConfusionCounts c;
  c.tp = pos_sorted.end() - std::lower_bound(pos_sorted.begin(), pos_sorted.end(), tau);
  c.fn = static_cast<std::int64_t>(pos_sorted.size()) - c.tp;
  c.fp = neg_sorted.end() - std::lower_bound(neg_sorted.begin(), neg_sorted.end(), tau);
  c.tn = static_cast<std::int64_t>(neg_sorted.size()) - c.fp;
  return c;
}

inline void split_by_class(std::span<const double> p, std::span<const int> y,
                           std::vector<double>& pos, std::vector<double>& neg) {
  for (std::size_t i = 0; i < p.size(); ++i) (y[i] ? pos : neg).push_back(p[i]);
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
}

}  // namespace calibration_detail

/// Candidate thresholds: uniform grid over [0,1] with step `grid_step`
/// (skipped when grid_step <= 0) plus every distinct score, ascending.
inline std::vector<double> threshold_candidates(std::span<const double> p, double grid_step) {
  std::vector<double> out(p.begin(), p.end());
  if (grid_step > 0.0) {
    const auto steps = static_cast<std::int64_t>(std::floor(1.0 / grid_step + 1e-9));
    for (std::int64_t k = 0; k <= steps; ++k) out.push_back(static_cast<double>(k) * grid_step);
    out.push_back(1.0);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Threshold maximizing F_beta; ties go to the smallest threshold.
inline ThresholdChoice tune_threshold_fbeta(std::span<const double> p, std::span<const int> y,
                                            double beta, double grid_step = 0.01) {
  std::int64_t n_pos = 0, n_neg = 0;
  calibration_detail::check_binary(p, y, n_pos, n_neg);
  if (!(beta > 0.0)) throw invalid_argument("beta must be > 0");
  std::vector<double> pos, neg;
  calibration_detail::split_by_class(p, y, pos, neg);

  ThresholdChoice best{0.0, -1.0};
  for (double tau : threshold_candidates(p, grid_step)) {
    const double f = fbeta_score(calibration_detail::counts_at(pos, neg, tau), beta);
    if (f > best.score) best = {tau, f};
  }
  return best;
}

struct RocPoint {
  double tau = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  double fpr = 0.0;
  double j = 0.0;

  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocResult {
  std::vector<RocPoint> curve;  // ascending tau
  ThresholdChoice youden;
};

/// ROC over {0, 1} and every distinct score, plus the threshold maximizing
/// Youden's J = TPR + TNR - 1 (ties go to the smallest threshold).
inline RocResult roc_and_youden(std::span<const double> p, std::span<const int> y) {
  std::int64_t n_pos = 0, n_neg = 0;
  calibration_detail::check_binary(p, y, n_pos, n_neg);
  std::vector<double> pos, neg;
  calibration_detail::split_by_class(p, y, pos, neg);

  std::vector<double> taus(p.begin(), p.end());
  taus.push_back(0.0);
  taus.push_back(1.0);
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  RocResult result;
  // J * P * N as an exact integer keeps tie-breaking exact.
  std::int64_t best_numerator = 0;
  bool have_best = false;
  for (double tau : taus) {
    const ConfusionCounts c = calibration_detail::counts_at(pos, neg, tau);
    RocPoint pt;
    pt.tau = tau;
    pt.tpr = static_cast<double>(c.tp) / static_cast<double>(n_pos);
    pt.tnr = static_cast<double>(c.tn) / static_cast<double>(n_neg);
    pt.fpr = static_cast<double>(c.fp) / static_cast<double>(n_neg);
    pt.j = pt.tpr + pt.tnr - 1.0;
    result.curve.push_back(pt);
    const std::int64_t numerator = c.tp * n_neg + c.tn * n_pos - n_pos * n_neg;
    if (!have_best || numerator > best_numerator) {
      have_best = true;
      best_numerator = numerator;
      result.youden = {tau, pt.j};
    }
  }
  return result;
}

/// Picks tau per the rule on a labeled slice.
inline ThresholdChoice choose_threshold(const ThresholdRule& rule, std::span<const double> p,
                                        std::span<const int> y) {
  rule.validate();
  switch (rule.kind) {
    case ThresholdRuleKind::kFBeta: return tune_threshold_fbeta(p, y, rule.beta, rule.grid_step);
    case ThresholdRuleKind::kYouden: return roc_and_youden(p, y).youden;
    case ThresholdRuleKind::kFixed: return {rule.tau, 0.0};
  }
  throw invalid_argument("unknown threshold rule");
}

inline void export_roc_csv(const std::vector<RocPoint>& curve, std::ostream& out) {
  out << "tau,tpr,fpr,tnr,j\n";
  char buf[160];
  for (const auto& pt : curve) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", pt.tau, pt.tpr, pt.fpr,
                  pt.tnr, pt.j);
    out << buf;
  }
}

}  // namespace slugwatch

#endif  // SLUGWATCH_CALIBRATION_HPP_

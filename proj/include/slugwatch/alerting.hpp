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

#ifndef SLUGWATCH_ALERTING_HPP_
#define SLUGWATCH_ALERTING_HPP_

#include <cstdint>
#include <cstdio>
#include <deque>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "slugwatch/error.hpp"
#include "slugwatch/time.hpp"

namespace slugwatch {

enum class AlertMode { kPersistence, kMajority, kHysteresis };

constexpr std::string_view to_string(AlertMode mode) {
  switch (mode) {
    case AlertMode::kPersistence: return "persistence";
    case AlertMode::kMajority: return "majority";
    case AlertMode::kHysteresis: return "hysteresis";
  }
  return "unknown";
}

inline AlertMode parse_alert_mode(std::string_view s) {
  if (s == "persistence") return AlertMode::kPersistence;
  if (s == "majority") return AlertMode::kMajority;
  if (s == "hysteresis") return AlertMode::kHysteresis;
  throw invalid_argument("unknown alert mode '" + std::string(s) + "'");
}

/// Minimum sustained duration in steps: delta_min / delta_s, which must divide.
inline std::int64_t kappa_from_duration(Minutes delta_min, Minutes delta_s) {
  if (delta_min <= 0 || delta_s <= 0) throw invalid_argument("durations must be positive");
  if (delta_min % delta_s != 0) {
    throw invalid_argument("minimum duration " + std::to_string(delta_min) +
                           " min is not a whole number of " + std::to_string(delta_s) +
                           "-min samples");
  }
  return delta_min / delta_s;
}

/// Extra delay after the first positive before a persistence alert can
/// fire: (kappa - 1) samples of delta_s minutes.
inline Minutes expected_latency(std::int64_t kappa, Minutes delta_s) {
  if (kappa < 1) throw invalid_argument("kappa must be >= 1");
  return (kappa - 1) * delta_s;
}

struct AlertConfig {
  AlertMode mode = AlertMode::kPersistence;
  std::int64_t kappa = 3;     // persistence: run length needed
  std::int64_t cooldown = 0;  // C: suppressed steps after each alert
  std::int64_t window = 3;    // majority: L
  std::int64_t votes = 2;     // majority: m
  double tau_hi = 0.7;        // hysteresis
  double tau_lo = 0.3;        // hysteresis
  // Consecutive zero predictions that close an alert episode; kappa if unset.
  std::optional<std::int64_t> reset_gap;

  std::int64_t effective_reset_gap() const { return reset_gap.value_or(kappa); }

  void validate() const {
    if (kappa < 1) throw invalid_argument("kappa must be >= 1");
    if (cooldown < 0) throw invalid_argument("cooldown must be >= 0");
    if (window < 1 || votes < 1 || votes > window)
      throw invalid_argument("majority vote needs 1 <= m <= L");
    if (!(tau_lo >= 0.0 && tau_lo < tau_hi && tau_hi <= 1.0))
      throw invalid_argument("hysteresis needs 0 <= tau_lo < tau_hi <= 1");
    if (effective_reset_gap() < 1) throw invalid_argument("reset gap must be >= 1");
  }

  std::string describe() const {
    char buf[128];
    switch (mode) {
      case AlertMode::kPersistence:
        std::snprintf(buf, sizeof(buf), "kappa=%lld;cooldown=%lld", static_cast<long long>(kappa),
                      static_cast<long long>(cooldown));
        break;
      case AlertMode::kMajority:
        std::snprintf(buf, sizeof(buf), "L=%lld;m=%lld;cooldown=%lld",
                      static_cast<long long>(window), static_cast<long long>(votes),
                      static_cast<long long>(cooldown));
        break;
      case AlertMode::kHysteresis:
        std::snprintf(buf, sizeof(buf), "tau_hi=%.17g;tau_lo=%.17g", tau_hi, tau_lo);
        break;
    }
    return buf;
  }

  friend bool operator==(const AlertConfig&, const AlertConfig&) = default;
};

struct AlertState {
  std::int64_t run_length = 0;          // r
  std::int64_t cooldown_remaining = 0;  // in [0, C]
  bool in_alert = false;                // hysteresis latch
  std::deque<int> window;               // last L predictions (majority)

  friend bool operator==(const AlertState&, const AlertState&) = default;
};

namespace alerting_detail {

// Shared cooldown gate: a suppressed step only counts the cooldown down.
inline bool gate(AlertState& s, bool eligible, const AlertConfig& config) {
  if (s.cooldown_remaining > 0) {
    --s.cooldown_remaining;
    return false;
  }
  if (eligible) s.cooldown_remaining = config.cooldown;
  return eligible;
}

}  // namespace alerting_detail

/// r <- r + 1 on a positive, 0 otherwise; alert when r >= kappa and no
/// cooldown is pending.
inline std::pair<AlertState, bool> step_persistence(AlertState state, int yhat,
                                                    const AlertConfig& config) {
  state.run_length = yhat ? state.run_length + 1 : 0;
  const bool alert = alerting_detail::gate(state, state.run_length >= config.kappa, config);
  return {std::move(state), alert};
}

/// Alert when the last min(L, steps so far) predictions hold at least m ones.
inline std::pair<AlertState, bool> step_majority(AlertState state, int yhat,
                                                 const AlertConfig& config) {
  state.run_length = yhat ? state.run_length + 1 : 0;
  state.window.push_back(yhat ? 1 : 0);
  while (static_cast<std::int64_t>(state.window.size()) > config.window) state.window.pop_front();
  const auto sum = std::accumulate(state.window.begin(), state.window.end(), std::int64_t{0});
  const bool alert = alerting_detail::gate(state, sum >= config.votes, config);
  return {std::move(state), alert};
}

/// Latch sets when p > tau_hi and clears when p < tau_lo; equality leaves it.
inline std::pair<AlertState, bool> step_hysteresis(AlertState state, double p,
                                                   const AlertConfig& config) {
  if (p > config.tau_hi) {
    state.in_alert = true;
  } else if (p < config.tau_lo) {
    state.in_alert = false;
  }
  const bool alert = state.in_alert;
  return {std::move(state), alert};
}

struct AlertEvent {
  Minutes raised_at = 0;
  std::optional<Minutes> cleared_at;
  AlertMode mode = AlertMode::kPersistence;
  std::string parameters;

  friend bool operator==(const AlertEvent&, const AlertEvent&) = default;
};

struct AlertStep {
  bool alert = false;
  std::int64_t counter = 0;  // r, or the latch as 0/1 in hysteresis mode
  bool raised = false;
  bool cleared = false;
};

/// Owns one stream's alert state plus the open-event bookkeeping. Binary
/// modes take yhat, hysteresis takes p.
class AlertEngine {
 public:
  explicit AlertEngine(AlertConfig config) : config_(std::move(config)) { config_.validate(); }

  const AlertConfig& config() const { return config_; }
  const AlertState& state() const { return state_; }
  const std::vector<AlertEvent>& events() const { return events_; }

  AlertStep step(Minutes timestamp, int yhat, double p) {
    AlertStep out;
    bool alert = false;
    switch (config_.mode) {
      case AlertMode::kPersistence:
        std::tie(state_, alert) = step_persistence(std::move(state_), yhat, config_);
        out.counter = state_.run_length;
        break;
      case AlertMode::kMajority:
        std::tie(state_, alert) = step_majority(std::move(state_), yhat, config_);
        out.counter = state_.run_length;
        break;
      case AlertMode::kHysteresis:
        std::tie(state_, alert) = step_hysteresis(std::move(state_), p, config_);
        out.counter = state_.in_alert ? 1 : 0;
        break;
    }
    out.alert = alert;

    if (open_) {
      if (config_.mode == AlertMode::kHysteresis) {
        if (!alert) close(timestamp, out);
      } else {
        zero_run_ = yhat ? 0 : zero_run_ + 1;
        if (zero_run_ >= config_.effective_reset_gap()) close(timestamp, out);
      }
    } else if (alert) {
      open_ = true;
      zero_run_ = 0;
      events_.push_back({timestamp, std::nullopt, config_.mode, config_.describe()});
      out.raised = true;
    }
    return out;
  }

 private:
  void close(Minutes timestamp, AlertStep& out) {
    open_ = false;
    events_.back().cleared_at = timestamp;
    out.cleared = true;
  }

  AlertConfig config_;
  AlertState state_;
  std::vector<AlertEvent> events_;
  bool open_ = false;
  std::int64_t zero_run_ = 0;
};

struct StreamResult {
  std::vector<int> alerts;  // A_t
  std::vector<AlertEvent> events;
};

/// Folds the configured step function over `values` (0/1 predictions for
/// binary modes, probabilities for hysteresis). Timestamps default to the
/// step index when empty.
inline StreamResult run_stream(std::span<const double> values, std::span<const Minutes> timestamps,
                               const AlertConfig& config) {
  if (!timestamps.empty() && timestamps.size() != values.size()) {
    throw invalid_argument("timestamp/value length mismatch");
  }
  const bool binary = config.mode != AlertMode::kHysteresis;
  for (double v : values) {
    if (binary && v != 0.0 && v != 1.0) {
      throw invalid_argument(std::string(to_string(config.mode)) +
                             " mode needs 0/1 predictions, got a probability");
    }
    if (!binary && !(v >= 0.0 && v <= 1.0)) {
      throw invalid_argument("hysteresis mode needs probabilities in [0,1]");
    }
  }
  AlertEngine engine(config);
  StreamResult result;
  result.alerts.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Minutes t = timestamps.empty() ? static_cast<Minutes>(i) : timestamps[i];
    const int yhat = binary ? static_cast<int>(values[i]) : 0;
    result.alerts.push_back(engine.step(t, yhat, values[i]).alert ? 1 : 0);
  }
  result.events = engine.events();
  return result;
}

inline void export_alert_events_csv(const std::vector<AlertEvent>& events, std::ostream& out) {
  out << "raised_at,cleared_at,mode,parameters\n";
  for (const auto& e : events) {
    out << format_timestamp(e.raised_at) << ',';
    if (e.cleared_at) out << format_timestamp(*e.cleared_at);
    out << ',' << to_string(e.mode) << ',' << e.parameters << '\n';
  }
}

}  // namespace slugwatch

#endif  // SLUGWATCH_ALERTING_HPP_

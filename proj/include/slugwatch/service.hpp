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

#ifndef SLUGWATCH_SERVICE_HPP_
#define SLUGWATCH_SERVICE_HPP_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "slugwatch/alerting.hpp"
#include "slugwatch/csv.hpp"
#include "slugwatch/dataset.hpp"
#include "slugwatch/labeling.hpp"
#include "slugwatch/model_io.hpp"
#include "slugwatch/pipeline.hpp"
#include "slugwatch/snapshot.hpp"

namespace slugwatch {

// --- request payloads -----------------------------------------------------

/// Reads a number or a timestamp string.
inline Minutes minutes_from_json(const nlohmann::json& v) {
  if (v.is_string()) {
    auto t = parse_timestamp(v.get<std::string>());
    if (!t) throw invalid_argument("bad timestamp '" + v.get<std::string>() + "'");
    return *t;
  }
  if (!v.is_number_integer()) throw invalid_argument("timestamp must be text or integer minutes");
  return v.get<Minutes>();
}

inline CsvSchema csv_schema_from_json(const nlohmann::json& j) {
  CsvSchema s;
  if (j.is_null()) return s;
  s.timestamp_column = j.value("timestamp_column", s.timestamp_column);
  s.label_column = j.value("label_column", s.label_column);
  s.label_optional = j.value("label_optional", s.label_optional);
  if (j.contains("feature_columns")) {
    s.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
  }
  if (j.contains("sampling_period")) s.sampling_period = j.at("sampling_period").get<Minutes>();
  return s;
}

inline nlohmann::json to_json(const LabelEdit& e) {
  return {{"start", e.interval.start}, {"end", e.interval.end}, {"label", e.label}};
}

inline std::vector<LabelEdit> label_edits_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw invalid_argument("edits must be an array");
  std::vector<LabelEdit> edits;
  for (const auto& e : j) {
    edits.push_back({{minutes_from_json(e.at("start")), minutes_from_json(e.at("end"))},
                     e.at("label").get<int>()});
  }
  return edits;
}

inline nlohmann::json to_json(const AlertConfig& c) {
  nlohmann::json j = {{"mode", std::string(to_string(c.mode))},
                      {"kappa", c.kappa},
                      {"cooldown", c.cooldown},
                      {"window", c.window},
                      {"votes", c.votes},
                      {"tau_hi", c.tau_hi},
                      {"tau_lo", c.tau_lo},
                      {"reset_gap", c.effective_reset_gap()}};
  return j;
}

/// Accepts either "kappa" or the pair "delta_min"/"delta_s" (minutes).
inline AlertConfig alert_config_from_json(const nlohmann::json& j) {
  AlertConfig c;
  if (j.is_null()) return c;
  if (j.contains("mode")) c.mode = parse_alert_mode(j.at("mode").get<std::string>());
  if (j.contains("delta_min")) {
    if (j.contains("kappa")) throw invalid_argument("give kappa or delta_min, not both");
    c.kappa = kappa_from_duration(j.at("delta_min").get<Minutes>(),
                                  j.value("delta_s", kDefaultSamplingPeriod));
  }
  c.kappa = j.value("kappa", c.kappa);
  c.cooldown = j.value("cooldown", c.cooldown);
  c.window = j.value("window", c.window);
  c.votes = j.value("votes", c.votes);
  c.tau_hi = j.value("tau_hi", c.tau_hi);
  c.tau_lo = j.value("tau_lo", c.tau_lo);
  if (j.contains("reset_gap")) c.reset_gap = j.at("reset_gap").get<std::int64_t>();
  c.validate();
  return c;
}

/// Builds an experiment request. The split is either explicit intervals or
/// "train_fraction", resolved against `dataset`.
inline ExperimentRequest experiment_request_from_json(const nlohmann::json& j,
                                                      const Dataset& dataset) {
  ExperimentRequest r;
  if (j.contains("split")) {
    r.split = split_from_json(j.at("split"));
  } else {
    r.split = fractional_split(dataset, j.value("train_fraction", 0.8));
  }
  r.config = train_config_from_json(j.value("config", nlohmann::json::object()));
  if (j.contains("threshold")) r.rule = threshold_rule_from_json(j.at("threshold"));
  r.event_match.theta = j.value("event_theta", r.event_match.theta);
  if (j.contains("confidence")) {
    r.confidence.band = j.at("confidence").value("band", r.confidence.band);
    r.confidence.fraction = j.at("confidence").value("fraction", r.confidence.fraction);
  }
  r.calibration_fraction = j.value("calibration_fraction", r.calibration_fraction);
  r.split.validate();
  r.config.validate();
  r.rule.validate();
  r.event_match.validate();
  return r;
}

inline nlohmann::json to_json(const OverlayRow& r) {
  nlohmann::json j = {{"timestamp", format_timestamp(r.timestamp)},
                      {"t", r.timestamp},
                      {"parameter", r.parameter},
                      {"yhat", r.yhat},
                      {"p", r.p}};
  j["y"] = r.y ? nlohmann::json(*r.y) : nlohmann::json(nullptr);
  j["c"] = r.category ? nlohmann::json(std::string(to_string(*r.category)))
                      : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const AlertEvent& e) {
  nlohmann::json j = {{"raised_at", format_timestamp(e.raised_at)},
                      {"mode", std::string(to_string(e.mode))},
                      {"parameters", e.parameters}};
  j["cleared_at"] = e.cleared_at ? nlohmann::json(format_timestamp(*e.cleared_at))
                                 : nlohmann::json(nullptr);
  return j;
}

// --- inference sessions ---------------------------------------------------

struct SessionEvent {
  std::uint64_t seq = 0;
  std::string type;  // step | alert-raise | alert-clear | end
  nlohmann::json data;
};

/// Replays a dataset through a stored model and an alert engine, one step at
/// a time. Events go to an append-only log indexed by sequence number, so
/// readers that reconnect from a sequence number see every event once.
class InferenceSession {
 public:
  InferenceSession(std::string id, std::string run_key, std::string dataset_id, Dataset source,
                   ClassifierModel model, CalibrationModel calibration, double tau,
                   AlertConfig alert, std::optional<double> speed)
      : id_(std::move(id)),
        run_key_(std::move(run_key)),
        dataset_id_(std::move(dataset_id)),
        source_(std::move(source)),
        model_(std::move(model)),
        calibration_(calibration),
        tau_(tau),
        engine_(std::move(alert)),
        speed_(speed) {
    if (source_.dimension() != model_.feature_names.size()) {
      throw invalid_argument("dataset has " + std::to_string(source_.dimension()) +
                             " features, model expects " +
                             std::to_string(model_.feature_names.size()));
    }
  }

  const std::string& id() const { return id_; }
  std::optional<double> speed() const { return speed_; }

  /// Computes the next step and appends its events. False once finished.
  bool advance() {
    std::lock_guard lock(mu_);
    return advance_locked();
  }

  /// Runs to completion regardless of pacing or pause state.
  void run_to_end() {
    std::lock_guard lock(mu_);
    while (advance_locked()) {
    }
  }

  void set_paused(bool paused) {
    {
      std::lock_guard lock(mu_);
      paused_ = paused;
    }
    cv_.notify_all();
  }

  bool paused() const {
    std::lock_guard lock(mu_);
    return paused_;
  }

  bool finished() const {
    std::lock_guard lock(mu_);
    return finished_locked();
  }

  std::size_t log_size() const {
    std::lock_guard lock(mu_);
    return log_.size();
  }

  std::vector<SessionEvent> events_from(std::size_t seq) const {
    std::lock_guard lock(mu_);
    if (seq >= log_.size()) return {};
    return {log_.begin() + static_cast<std::ptrdiff_t>(seq), log_.end()};
  }

  std::optional<SessionEvent> event_at(std::size_t seq) const {
    std::lock_guard lock(mu_);
    if (seq >= log_.size()) return std::nullopt;
    return log_[seq];
  }

  /// Claims the single stream driver slot.
  bool attach() {
    std::lock_guard lock(mu_);
    if (attached_) return false;
    attached_ = true;
    return true;
  }

  void detach() {
    {
      std::lock_guard lock(mu_);
      attached_ = false;
    }
    cv_.notify_all();
  }

  /// Blocks while paused, up to `limit`. Returns true if still paused.
  bool wait_while_paused(std::chrono::milliseconds limit) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, limit, [&] { return !paused_; });
    return paused_;
  }

  /// Sleeps until `deadline` or until paused. Returns false if paused.
  bool sleep_until(std::chrono::steady_clock::time_point deadline) {
    std::unique_lock lock(mu_);
    return !cv_.wait_until(lock, deadline, [&] { return paused_; });
  }

  std::vector<AlertEvent> alert_events() const {
    std::lock_guard lock(mu_);
    return engine_.events();
  }

  nlohmann::json status() const {
    std::lock_guard lock(mu_);
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : engine_.events()) events.push_back(to_json(e));
    return {{"id", id_},
            {"run_key", run_key_},
            {"dataset_id", dataset_id_},
            {"alert", to_json(engine_.config())},
            {"speed", speed_ ? nlohmann::json(*speed_) : nlohmann::json("max")},
            {"tau", tau_},
            {"cursor", cursor_},
            {"length", source_.size()},
            {"paused", paused_},
            {"finished", finished_locked()},
            {"events_emitted", log_.size()},
            {"alert_events", events}};
  }

 private:
  bool finished_locked() const { return !log_.empty() && log_.back().type == "end"; }

  void emit(std::string type, nlohmann::json data) {
    log_.push_back({log_.size(), std::move(type), std::move(data)});
  }

  bool advance_locked() {
    if (finished_locked()) return false;
    if (cursor_ == source_.size()) {
      emit("end", {{"steps", cursor_}, {"alert_events", engine_.events().size()}});
      return false;
    }
    const Sample& s = source_[cursor_];
    const double p = calibrate(calibration_, model_.predict_proba(s.features));
    const int yhat = apply_threshold(p, tau_) ? 1 : 0;
    const AlertStep st = engine_.step(s.timestamp, yhat, p);
    nlohmann::json features = nlohmann::json::object();
    for (std::size_t f = 0; f < source_.dimension(); ++f) {
      features[source_.feature_names()[f]] = s.features[f];
    }
    const std::string ts = format_timestamp(s.timestamp);
    emit("step", {{"index", cursor_},
                  {"timestamp", ts},
                  {"t", s.timestamp},
                  {"features", features},
                  {"p", p},
                  {"yhat", yhat},
                  {"counter", st.counter},
                  {"alert", st.alert ? 1 : 0}});
    if (st.raised) {
      const AlertEvent& e = engine_.events().back();
      emit("alert-raise", {{"index", cursor_},
                           {"timestamp", ts},
                           {"t", s.timestamp},
                           {"mode", std::string(to_string(e.mode))},
                           {"parameters", e.parameters}});
    }
    if (st.cleared) {
      emit("alert-clear", {{"index", cursor_},
                           {"timestamp", ts},
                           {"t", s.timestamp},
                           {"raised_at", format_timestamp(engine_.events().back().raised_at)}});
    }
    ++cursor_;
    return true;
  }

  std::string id_;
  std::string run_key_;
  std::string dataset_id_;
  Dataset source_;
  ClassifierModel model_;
  CalibrationModel calibration_;
  double tau_;
  AlertEngine engine_;
  std::optional<double> speed_;  // steps per second; unset replays unthrottled

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t cursor_ = 0;
  bool paused_ = false;
  bool attached_ = false;
  std::vector<SessionEvent> log_;
};

/// SSE framing for one event.
inline std::string format_sse(const SessionEvent& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.data.dump() +
         "\n\n";
}

// --- service --------------------------------------------------------------

enum class RunStatus { kQueued, kRunning, kDone, kFailed };

constexpr std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kQueued: return "queued";
    case RunStatus::kRunning: return "running";
    case RunStatus::kDone: return "done";
    case RunStatus::kFailed: return "failed";
  }
  return "unknown";
}

struct ServiceConfig {
  std::filesystem::path store_root = "slugwatch-store";
  std::size_t row_cap = 1000;  // preview limit
};

/// In-process state behind the HTTP API. Every method takes and returns
/// JSON payloads so it can be driven with or without a transport. Training
/// requests run on one background worker, which serializes store writes.
class Service {
 public:
  explicit Service(ServiceConfig config)
      : config_(std::move(config)), store_(config_.store_root) {
    worker_ = std::jthread([this](std::stop_token stop) { work(stop); });
  }

  ~Service() {
    {
      std::lock_guard lock(mu_);
      worker_.request_stop();
    }
    queue_cv_.notify_all();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  SnapshotStore& store() { return store_; }
  const ServiceConfig& config() const { return config_; }

  // Datasets ---------------------------------------------------------------

  /// Registers an already-built dataset; returns its id.
  std::string add_dataset(Dataset dataset, std::optional<std::string> parent = std::nullopt,
                          std::vector<LabelEdit> edits = {}) {
    std::lock_guard lock(mu_);
    const std::string id = "ds-" + std::to_string(++dataset_counter_);
    datasets_.emplace(id, std::make_shared<const DatasetEntry>(
                              DatasetEntry{Dataset(std::move(dataset)), std::move(parent),
                                           std::move(edits)}));
    return id;
  }

  nlohmann::json upload_dataset(const std::string& csv, const CsvSchema& schema = {}) {
    const std::string id = add_dataset(ingest_csv_string(csv, schema));
    return describe_dataset(id);
  }

  const Dataset& dataset(const std::string& id) const { return entry(id)->dataset; }

  nlohmann::json describe_dataset(const std::string& id) const {
    auto e = entry(id);
    const Dataset& d = e->dataset;
    nlohmann::json edits = nlohmann::json::array();
    for (const auto& x : e->edits) edits.push_back(to_json(x));
    nlohmann::json j = {{"id", id},
                        {"rows", d.size()},
                        {"features", d.feature_names()},
                        {"sampling_period", d.sampling_period()},
                        {"fingerprint", dataset_fingerprint(d)},
                        {"summary", class_summary(d, 0, d.size())},
                        {"lineage", {{"edits", edits}}}};
    j["lineage"]["parent"] = e->parent ? nlohmann::json(*e->parent) : nlohmann::json(nullptr);
    if (!d.empty()) {
      j["start"] = format_timestamp(d.time_range().start);
      j["end"] = format_timestamp(d.time_range().end);
    }
    return j;
  }

  nlohmann::json list_datasets() const {
    std::vector<std::string> ids;
    {
      std::lock_guard lock(mu_);
      for (const auto& [id, e] : datasets_) ids.push_back(id);
    }
    nlohmann::json out = nlohmann::json::array();
    for (const auto& id : ids) out.push_back(describe_dataset(id));
    return out;
  }

  /// Rows with timestamps in [from, to), capped at the configured row
  /// limit; the class summary covers the whole window.
  nlohmann::json preview(const std::string& id, std::optional<Minutes> from,
                         std::optional<Minutes> to) const {
    if (from && to && *from > *to) throw invalid_argument("preview window has from > to");
    const Dataset& d = dataset(id);
    const auto& samples = d.samples();
    auto lo = samples.begin();
    auto hi = samples.end();
    if (from) {
      lo = std::lower_bound(samples.begin(), samples.end(), *from,
                            [](const Sample& s, Minutes t) { return s.timestamp < t; });
    }
    if (to) {
      hi = std::lower_bound(lo, samples.end(), *to,
                            [](const Sample& s, Minutes t) { return s.timestamp < t; });
    }
    const auto begin = static_cast<std::size_t>(lo - samples.begin());
    const auto end = static_cast<std::size_t>(hi - samples.begin());
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = begin; i < end && rows.size() < config_.row_cap; ++i) {
      nlohmann::json row = {{"timestamp", format_timestamp(samples[i].timestamp)},
                            {"t", samples[i].timestamp},
                            {"features", samples[i].features}};
      row["label"] = samples[i].label ? nlohmann::json(*samples[i].label) : nlohmann::json(nullptr);
      rows.push_back(std::move(row));
    }
    return {{"id", id},
            {"features", d.feature_names()},
            {"rows", rows},
            {"window_rows", end - begin},
            {"truncated", end - begin > rows.size()},
            {"summary", class_summary(d, begin, end)}};
  }

  /// New dataset version with the edits applied; the parent is untouched.
  nlohmann::json apply_labels(const std::string& id, const std::vector<LabelEdit>& edits) {
    const Dataset& parent = dataset(id);
    Dataset edited = apply_interval_labels(parent, edits);
    return describe_dataset(add_dataset(std::move(edited), id, edits));
  }

  // Training ---------------------------------------------------------------

  /// Validates and queues a training request. Returns the run record plus
  /// "submitted": false when the key was already known (stored or queued);
  /// "cache_hit" is true when a finished result was reused.
  nlohmann::json submit_train(const nlohmann::json& body) {
    const std::string dataset_id = body.at("dataset_id").get<std::string>();
    auto ds = entry(dataset_id);
    ExperimentRequest request = experiment_request_from_json(body, ds->dataset);
    // Surface split problems (unlabeled rows, ordering) before queuing.
    chronological_split(ds->dataset, request.split);
    const std::string key = request_key(request);
    const std::string fingerprint = dataset_fingerprint(ds->dataset);

    std::lock_guard lock(mu_);
    if (auto it = runs_.find(key); it != runs_.end() && it->second.status != RunStatus::kFailed) {
      if (it->second.fingerprint != fingerprint) throw fingerprint_conflict(key);
      nlohmann::json j = record_json_locked(it->second);
      j["cache_hit"] = it->second.status == RunStatus::kDone;
      return with_submitted(std::move(j), false);
    }
    if (store_.contains(key)) {
      const Snapshot s = store_.load(key);
      if (s.dataset_fingerprint != fingerprint) throw fingerprint_conflict(key);
      RunRecord& r = runs_[key];
      r = {key, RunStatus::kDone, 1.0, "cached", "", true, dataset_id, fingerprint};
      return with_submitted(record_json_locked(r), false);
    }
    RunRecord& r = runs_[key];
    r = {key, RunStatus::kQueued, 0.0, "queued", "", false, dataset_id, fingerprint};
    queue_.push_back({key, ds, std::move(request)});
    queue_cv_.notify_all();
    return with_submitted(record_json_locked(r), true);
  }

  /// Status plus, once done, the snapshot. Stored runs from earlier server
  /// instances are reported as done.
  nlohmann::json run_status(const std::string& key) const {
    nlohmann::json j;
    {
      std::lock_guard lock(mu_);
      if (auto it = runs_.find(key); it != runs_.end()) {
        j = record_json_locked(it->second);
      } else if (store_.contains(key)) {
        j = {{"key", key}, {"status", "done"}, {"progress", 1.0}, {"stage", "stored"},
             {"cache_hit", true}, {"dataset_id", nullptr}};
      } else {
        throw not_found("no run with key " + key);
      }
    }
    if (j.at("status") == "done") j["snapshot"] = to_json(store_.load(key));
    return j;
  }

  /// Blocks until the run leaves the queued/running states.
  nlohmann::json wait_for_run(const std::string& key,
                              std::chrono::milliseconds limit = std::chrono::minutes(5)) const {
    std::unique_lock lock(mu_);
    run_cv_.wait_for(lock, limit, [&] {
      auto it = runs_.find(key);
      return it == runs_.end() || it->second.status == RunStatus::kDone ||
             it->second.status == RunStatus::kFailed;
    });
    lock.unlock();
    return run_status(key);
  }

  /// Evaluation overlay over the run's test interval for one parameter.
  nlohmann::json timeline(const std::string& key, const std::string& parameter = {}) const {
    const nlohmann::json status = run_status(key);
    if (status.at("status") != "done") {
      throw Error(ErrorCode::kConflict, "run " + key + " is " + status.at("status").get<std::string>());
    }
    if (status.at("dataset_id").is_null()) {
      throw not_found("dataset for run " + key + " is not loaded in this server");
    }
    const Dataset& d = dataset(status.at("dataset_id").get<std::string>());
    const Snapshot s = store_.load(key);
    const ClassifierModel model = store_.load_model(key);
    const Dataset test = chronological_split(d, s.split).test;
    std::size_t index = 0;
    if (!parameter.empty()) {
      auto f = test.feature_index(parameter);
      if (!f) throw invalid_argument("unknown parameter '" + parameter + "'");
      index = *f;
    }
    const ScoredSeries scores = score_dataset(model, s.calibration, test);
    const auto rows = build_overlay(test, index, scores.probabilities, s.tau);
    nlohmann::json out = nlohmann::json::array();
    ConfusionCounts counts;
    for (const auto& r : rows) {
      out.push_back(to_json(r));
      if (r.category) {
        switch (*r.category) {
          case ConfusionLabel::kTP: ++counts.tp; break;
          case ConfusionLabel::kFP: ++counts.fp; break;
          case ConfusionLabel::kTN: ++counts.tn; break;
          case ConfusionLabel::kFN: ++counts.fn; break;
        }
      }
    }
    return {{"key", key},
            {"parameter", test.feature_names()[index]},
            {"tau", s.tau},
            {"counts", to_json(counts)},
            {"rows", out}};
  }

  // Snapshots --------------------------------------------------------------

  nlohmann::json list_snapshots() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : store_.list().entries) {
      out.push_back({{"key", e.key}, {"summary", e.summary}});
    }
    return out;
  }

  nlohmann::json get_snapshot(const std::string& key) const { return to_json(store_.load(key)); }

  nlohmann::json compare(const std::vector<std::string>& keys) const {
    const ComparisonTable t = store_.compare(keys);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) rows.push_back({{"metric", r.metric}, {"values", r.values}});
    return {{"keys", t.keys},
            {"model_kinds", t.model_kinds},
            {"rows", rows},
            {"identical_slice", t.identical_slice},
            {"split_mismatch", t.split_mismatch},
            {"fingerprint_mismatch", t.fingerprint_mismatch}};
  }

  // Inference --------------------------------------------------------------

  /// Body: run_key, dataset_id, alert (see alert_config_from_json), speed
  /// (steps per second or "max").
  nlohmann::json create_session(const nlohmann::json& body) {
    const std::string run_key = body.at("run_key").get<std::string>();
    const std::string dataset_id = body.at("dataset_id").get<std::string>();
    if (!store_.contains(run_key)) throw not_found("no stored run with key " + run_key);
    const Dataset& source = dataset(dataset_id);
    AlertConfig alert = alert_config_from_json(body.value("alert", nlohmann::json::object()));
    std::optional<double> speed;
    if (body.contains("speed") && !(body.at("speed").is_string() && body.at("speed") == "max")) {
      if (!body.at("speed").is_number()) throw invalid_argument("speed must be a number or \"max\"");
      speed = body.at("speed").get<double>();
      if (!(*speed > 0.0)) throw invalid_argument("speed must be positive");
    }
    const Snapshot s = store_.load(run_key);
    ClassifierModel model = store_.load_model(run_key);
    std::lock_guard lock(mu_);
    const std::string id = "session-" + std::to_string(++session_counter_);
    auto session = std::make_shared<InferenceSession>(id, run_key, dataset_id, source,
                                                      std::move(model), s.calibration, s.tau,
                                                      std::move(alert), speed);
    sessions_.emplace(id, session);
    return session->status();
  }

  std::shared_ptr<InferenceSession> session(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw not_found("no inference session " + id);
    return it->second;
  }

 private:
  struct DatasetEntry {
    Dataset dataset;
    std::optional<std::string> parent;
    std::vector<LabelEdit> edits;
  };

  struct RunRecord {
    std::string key;
    RunStatus status = RunStatus::kQueued;
    double progress = 0.0;
    std::string stage;
    std::string message;
    bool cache_hit = false;
    std::string dataset_id;
    std::string fingerprint;
  };

  struct Job {
    std::string key;
    std::shared_ptr<const DatasetEntry> dataset;
    ExperimentRequest request;
  };

  static Error fingerprint_conflict(const std::string& key) {
    return Error(ErrorCode::kConflict, "experiment " + key + " belongs to a different dataset");
  }

  static nlohmann::json class_summary(const Dataset& d, std::size_t begin, std::size_t end) {
    std::size_t slug = 0, non_slug = 0, unlabeled = 0;
    for (std::size_t i = begin; i < end; ++i) {
      if (!d[i].label) {
        ++unlabeled;
      } else if (*d[i].label == 1) {
        ++slug;
      } else {
        ++non_slug;
      }
    }
    return {{"slug", slug}, {"non_slug", non_slug}, {"unlabeled", unlabeled}};
  }

  static nlohmann::json with_submitted(nlohmann::json j, bool submitted) {
    j["submitted"] = submitted;
    return j;
  }

  std::shared_ptr<const DatasetEntry> entry(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = datasets_.find(id);
    if (it == datasets_.end()) throw not_found("no dataset " + id);
    return it->second;
  }

  nlohmann::json record_json_locked(const RunRecord& r) const {
    nlohmann::json j = {{"key", r.key},
                        {"status", std::string(to_string(r.status))},
                        {"progress", r.progress},
                        {"stage", r.stage},
                        {"cache_hit", r.cache_hit},
                        {"dataset_id", r.dataset_id}};
    if (!r.message.empty()) j["message"] = r.message;
    return j;
  }

  void update(const std::string& key, RunStatus status, double progress, std::string stage,
              std::string message = {}) {
    {
      std::lock_guard lock(mu_);
      RunRecord& r = runs_.at(key);
      r.status = status;
      r.progress = progress;
      r.stage = std::move(stage);
      r.message = std::move(message);
    }
    run_cv_.notify_all();
  }

  void work(std::stop_token stop) {
    while (true) {
      Job job;
      {
        std::unique_lock lock(mu_);
        queue_cv_.wait(lock, [&] { return stop.stop_requested() || !queue_.empty(); });
        if (stop.stop_requested()) return;
        job = std::move(queue_.front());
        queue_.pop_front();
      }
      update(job.key, RunStatus::kRunning, 0.0, "starting");
      try {
        ExperimentResult r =
            run_experiment(job.dataset->dataset, job.request, [&](double f, std::string_view stage) {
              update(job.key, RunStatus::kRunning, f, std::string(stage));
            });
        store_.save(r.snapshot, &r.model);
        update(job.key, RunStatus::kDone, 1.0, "done");
      } catch (const std::exception& e) {
        update(job.key, RunStatus::kFailed, 1.0, "failed", e.what());
      }
    }
  }

  ServiceConfig config_;
  SnapshotStore store_;

  mutable std::mutex mu_;
  mutable std::condition_variable run_cv_;
  std::condition_variable queue_cv_;
  std::map<std::string, std::shared_ptr<const DatasetEntry>> datasets_;
  std::map<std::string, RunRecord> runs_;
  std::map<std::string, std::shared_ptr<InferenceSession>> sessions_;
  std::deque<Job> queue_;
  std::uint64_t dataset_counter_ = 0;
  std::uint64_t session_counter_ = 0;
  std::jthread worker_;  // last member: stops before the state it uses
};

}  // namespace slugwatch

#endif  // SLUGWATCH_SERVICE_HPP_

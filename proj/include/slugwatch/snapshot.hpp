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

#ifndef SLUGWATCH_SNAPSHOT_HPP_
#define SLUGWATCH_SNAPSHOT_HPP_

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "slugwatch/calibration.hpp"
#include "slugwatch/dataset.hpp"
#include "slugwatch/error.hpp"
#include "slugwatch/evaluation.hpp"
#include "slugwatch/learners.hpp"
#include "slugwatch/model_io.hpp"

namespace slugwatch {

inline constexpr std::string_view kSoftwareVersion = "0.1.0";
inline constexpr int kSnapshotFormatVersion = 1;
inline constexpr std::string_view kKeyCanonicalization = "slugwatch-key-v1";

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

inline std::string canonical_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Either the deployed threshold or, before tuning, the rule that picks it.
using ThresholdSlot = std::variant<double, ThresholdRule>;

namespace snapshot_detail {

inline nlohmann::json canonical_intervals(const std::vector<TimeInterval>& intervals) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& iv : intervals) out.push_back({iv.start, iv.end});
  return out;
}

inline nlohmann::json canonical_hyperparameters(const TrainConfig& c) {
  nlohmann::json j = {
      {"max_depth", c.max_depth},
      {"min_samples_leaf", c.min_samples_leaf},
      {"n_trees", c.n_trees},
      {"feature_subsample", canonical_real(c.feature_subsample)},
      {"bootstrap", c.bootstrap},
      {"learning_rate", canonical_real(c.learning_rate)},
      {"l2_regularization", canonical_real(c.l2_regularization)},
      {"min_child_hessian", canonical_real(c.min_child_hessian)},
  };
  if (c.class_weights) {
    j["class_weights"] = {{"w0", canonical_real(c.class_weights->w0)},
                          {"w1", canonical_real(c.class_weights->w1)}};
  } else {
    j["class_weights"] = "auto";
  }
  return j;
}

}  // namespace snapshot_detail

/// Canonical bytes behind an experiment key: keys sorted by name, reals as
/// 17 significant digits, intervals as integer-minute pairs.
inline std::string canonical_key_material(ModelKind kind, const TrainConfig& config,
                                          std::uint64_t seed, const SplitSpec& split,
                                          const ThresholdSlot& tau) {
  nlohmann::json doc = {
      {"canonicalization", std::string(kKeyCanonicalization)},
      {"model", std::string(to_string(kind))},
      {"hyperparameters", snapshot_detail::canonical_hyperparameters(config)},
      {"seed", seed},
      {"train", snapshot_detail::canonical_intervals(split.train)},
      {"test", snapshot_detail::canonical_intervals(split.test)},
  };
  if (const double* value = std::get_if<double>(&tau)) {
    doc["tau"] = canonical_real(*value);
  } else {
    doc["tau"] = "rule:" + std::get<ThresholdRule>(tau).describe();
  }
  return doc.dump();
}

/// SHA-256 over the canonical material, as lowercase hex.
inline std::string experiment_key(ModelKind kind, const TrainConfig& config, std::uint64_t seed,
                                  const SplitSpec& split, const ThresholdSlot& tau) {
  return sha256_hex(canonical_key_material(kind, config, seed, split, tau));
}

inline bool is_experiment_key(std::string_view key) {
  return key.size() == 64 && std::all_of(key.begin(), key.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

/// Derived artifacts of one experiment. Never holds sample rows.
struct Snapshot {
  std::string key;
  ModelKind model_kind = ModelKind::kForest;
  TrainConfig config;
  std::uint64_t seed = 0;
  SplitSpec split;
  ThresholdRule threshold_rule;
  double tau = 0.5;
  double tuning_score = 0.0;
  PointwiseMetrics pointwise;
  double event_theta = 0.5;
  EventMetrics events;
  std::vector<RocPoint> roc;
  CalibrationModel calibration;
  std::vector<ConfidenceAssessment> confidence;
  std::string created_at;
  std::string software_version;
  std::string dataset_fingerprint;
  std::string model_file;  // relative to the store root

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

// --- JSON mapping ---------------------------------------------------------

inline nlohmann::json to_json(const ThresholdRule& r) {
  switch (r.kind) {
    case ThresholdRuleKind::kFBeta:
      return {{"rule", "fbeta"}, {"beta", r.beta}, {"grid_step", r.grid_step}};
    case ThresholdRuleKind::kYouden:
      return {{"rule", "youden"}};
    case ThresholdRuleKind::kFixed:
      return {{"rule", "fixed"}, {"tau", r.tau}};
  }
  return {};
}

inline ThresholdRule threshold_rule_from_json(const nlohmann::json& j) {
  const std::string rule = j.value("rule", "fbeta");
  ThresholdRule r;
  if (rule == "fbeta") {
    r = ThresholdRule::fbeta(j.value("beta", 1.0), j.value("grid_step", 0.01));
  } else if (rule == "youden") {
    r = ThresholdRule::youden();
  } else if (rule == "fixed") {
    r = ThresholdRule::fixed(j.at("tau").get<double>());
  } else {
    throw invalid_argument("unknown threshold rule '" + rule + "'");
  }
  r.validate();
  return r;
}

inline nlohmann::json to_json(const std::vector<TimeInterval>& intervals) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& iv : intervals) out.push_back({iv.start, iv.end});
  return out;
}

inline std::vector<TimeInterval> intervals_from_json(const nlohmann::json& j) {
  std::vector<TimeInterval> out;
  for (const auto& pair : j) {
    auto bound = [](const nlohmann::json& v) -> Minutes {
      if (v.is_string()) {
        auto t = parse_timestamp(v.get<std::string>());
        if (!t) throw invalid_argument("bad timestamp '" + v.get<std::string>() + "'");
        return *t;
      }
      return v.get<Minutes>();
    };
    if (pair.is_array() && pair.size() == 2) {
      out.push_back({bound(pair[0]), bound(pair[1])});
    } else if (pair.is_object()) {
      out.push_back({bound(pair.at("start")), bound(pair.at("end"))});
    } else {
      throw invalid_argument("interval must be [start, end] or {start, end}");
    }
  }
  return out;
}

inline nlohmann::json to_json(const SplitSpec& s) {
  return {{"train", to_json(s.train)}, {"test", to_json(s.test)}, {"chronological", s.chronological}};
}

inline SplitSpec split_from_json(const nlohmann::json& j) {
  SplitSpec s;
  s.train = intervals_from_json(j.at("train"));
  s.test = intervals_from_json(j.at("test"));
  s.chronological = j.value("chronological", true);
  return s;
}

inline nlohmann::json to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

inline ConfusionCounts confusion_from_json(const nlohmann::json& j) {
  return {j.at("tp").get<std::int64_t>(), j.at("fp").get<std::int64_t>(),
          j.at("tn").get<std::int64_t>(), j.at("fn").get<std::int64_t>()};
}

inline nlohmann::json to_json(const PointwiseMetrics& m) {
  return {{"counts", to_json(m.counts)},         {"precision", m.precision},
          {"recall", m.recall},                  {"fbeta", m.fbeta},
          {"beta", m.beta},                      {"precision_defined", m.precision_defined},
          {"recall_defined", m.recall_defined}};
}

inline PointwiseMetrics pointwise_from_json(const nlohmann::json& j) {
  PointwiseMetrics m;
  m.counts = confusion_from_json(j.at("counts"));
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.fbeta = j.at("fbeta").get<double>();
  m.beta = j.at("beta").get<double>();
  m.precision_defined = j.at("precision_defined").get<bool>();
  m.recall_defined = j.at("recall_defined").get<bool>();
  return m;
}

inline nlohmann::json to_json(const Episode& e) { return {e.begin, e.end}; }

inline nlohmann::json to_json(const EventMetrics& m) {
  nlohmann::json matches = nlohmann::json::array();
  for (const auto& x : m.matches) {
    matches.push_back({{"truth", x.truth_index}, {"predicted", x.predicted_index}, {"iou", x.iou}});
  }
  return {{"matches", matches}, {"tp", m.tp},          {"fp", m.fp},
          {"fn", m.fn},         {"precision", m.precision}, {"recall", m.recall}};
}

inline EventMetrics event_metrics_from_json(const nlohmann::json& j) {
  EventMetrics m;
  for (const auto& x : j.at("matches")) {
    m.matches.push_back({x.at("truth").get<std::size_t>(), x.at("predicted").get<std::size_t>(),
                         x.at("iou").get<double>()});
  }
  m.tp = j.at("tp").get<std::int64_t>();
  m.fp = j.at("fp").get<std::int64_t>();
  m.fn = j.at("fn").get<std::int64_t>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  return m;
}

inline nlohmann::json to_json(const RocPoint& p) {
  return {{"tau", p.tau}, {"tpr", p.tpr}, {"tnr", p.tnr}, {"fpr", p.fpr}, {"j", p.j}};
}

inline nlohmann::json to_json(const ConfidenceAssessment& a) {
  return {{"episode", to_json(a.episode)},
          {"mean", a.mean},
          {"variance", a.variance},
          {"borderline_fraction", a.borderline_fraction},
          {"class", std::string(to_string(a.classification))}};
}

inline nlohmann::json to_json(const Snapshot& s) {
  nlohmann::json roc = nlohmann::json::array();
  for (const auto& p : s.roc) roc.push_back(to_json(p));
  nlohmann::json confidence = nlohmann::json::array();
  for (const auto& a : s.confidence) confidence.push_back(to_json(a));
  return {{"key", s.key},
          {"model_kind", std::string(to_string(s.model_kind))},
          {"config", to_json(s.config)},
          {"seed", s.seed},
          {"split", to_json(s.split)},
          {"threshold_rule", to_json(s.threshold_rule)},
          {"tau", s.tau},
          {"tuning_score", s.tuning_score},
          {"pointwise", to_json(s.pointwise)},
          {"event_theta", s.event_theta},
          {"events", to_json(s.events)},
          {"roc", roc},
          {"calibration",
           {{"a", s.calibration.a}, {"b", s.calibration.b}, {"iterations", s.calibration.iterations}}},
          {"confidence", confidence},
          {"created_at", s.created_at},
          {"software_version", s.software_version},
          {"dataset_fingerprint", s.dataset_fingerprint},
          {"model_file", s.model_file}};
}

inline Snapshot snapshot_from_json(const nlohmann::json& j) {
  Snapshot s;
  s.key = j.at("key").get<std::string>();
  s.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
  s.config = train_config_from_json(j.at("config"));
  s.seed = j.at("seed").get<std::uint64_t>();
  s.split = split_from_json(j.at("split"));
  s.threshold_rule = threshold_rule_from_json(j.at("threshold_rule"));
  s.tau = j.at("tau").get<double>();
  s.tuning_score = j.at("tuning_score").get<double>();
  s.pointwise = pointwise_from_json(j.at("pointwise"));
  s.event_theta = j.at("event_theta").get<double>();
  s.events = event_metrics_from_json(j.at("events"));
  for (const auto& p : j.at("roc")) {
    s.roc.push_back({p.at("tau").get<double>(), p.at("tpr").get<double>(),
                     p.at("tnr").get<double>(), p.at("fpr").get<double>(),
                     p.at("j").get<double>()});
  }
  const auto& cal = j.at("calibration");
  s.calibration = {cal.at("a").get<double>(), cal.at("b").get<double>(),
                   cal.at("iterations").get<int>()};
  for (const auto& a : j.at("confidence")) {
    ConfidenceAssessment c;
    c.episode = {a.at("episode")[0].get<std::int64_t>(), a.at("episode")[1].get<std::int64_t>()};
    c.mean = a.at("mean").get<double>();
    c.variance = a.at("variance").get<double>();
    c.borderline_fraction = a.at("borderline_fraction").get<double>();
    c.classification = a.at("class").get<std::string>() == "borderline"
                           ? ConfidenceClass::kBorderline
                           : ConfidenceClass::kHighConfidence;
    s.confidence.push_back(c);
  }
  s.created_at = j.at("created_at").get<std::string>();
  s.software_version = j.at("software_version").get<std::string>();
  s.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
  s.model_file = j.at("model_file").get<std::string>();
  return s;
}

inline std::string snapshot_summary(const Snapshot& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s tau=%.4g F%.3g=%.4f event_p=%.3f event_r=%.3f %s",
                std::string(to_string(s.model_kind)).c_str(), s.tau, s.pointwise.beta,
                s.pointwise.fbeta, s.events.precision, s.events.recall, s.created_at.c_str());
  return buf;
}

inline std::string utc_now_iso() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ManifestEntry {
  std::string key;
  std::string summary;
};

struct Manifest {
  std::vector<ManifestEntry> entries;  // sorted by key
};

struct ComparisonRow {
  std::string metric;
  std::vector<double> values;  // one per compared key
};

struct ComparisonTable {
  std::vector<std::string> keys;
  std::vector<std::string> model_kinds;
  std::vector<ComparisonRow> rows;
  bool identical_slice = false;      // same split and same dataset
  bool split_mismatch = false;
  bool fingerprint_mismatch = false;
};

/// On-disk snapshot store: <root>/<key[0:2]>/<key>.json plus the serialized
/// model beside it, and <root>/manifest.json regenerated after every save.
/// Files are written to a temporary name and renamed into place.
class SnapshotStore {
 public:
  explicit SnapshotStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create store root " + root_.string());
  }

  const std::filesystem::path& root() const { return root_; }

  bool contains(const std::string& key) const {
    return is_experiment_key(key) && std::filesystem::exists(snapshot_path(key));
  }

  /// Idempotent: an existing key is left untouched.
  std::string save(Snapshot snapshot, const ClassifierModel* model = nullptr) {
    if (!is_experiment_key(snapshot.key)) throw invalid_argument("malformed experiment key");
    if (contains(snapshot.key)) return snapshot.key;
    std::filesystem::create_directories(snapshot_path(snapshot.key).parent_path());
    if (model) {
      snapshot.model_file = model_relative_path(snapshot.key);
      atomic_write(root_ / snapshot.model_file, to_json(*model).dump());
    }
    const nlohmann::json body = to_json(snapshot);
    const std::string body_text = body.dump();
    nlohmann::json doc = {
        {"header",
         {{"format", "slugwatch-snapshot"},
          {"version", kSnapshotFormatVersion},
          {"hash", "sha256"},
          {"canonicalization", std::string(kKeyCanonicalization)}}},
        {"digest", sha256_hex(body_text)},
        {"body", body}};
    atomic_write(snapshot_path(snapshot.key), doc.dump(2));
    write_manifest();
    return snapshot.key;
  }

  Snapshot load(const std::string& key) const {
    if (!contains(key)) throw not_found("unknown experiment key " + key);
    const std::string text = read_file(snapshot_path(key));
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
      if (doc.at("header").at("format").get<std::string>() != "slugwatch-snapshot" ||
          doc.at("header").at("version").get<int>() != kSnapshotFormatVersion) {
        throw Error(ErrorCode::kIntegrity, "unsupported snapshot format for " + key);
      }
      const nlohmann::json& body = doc.at("body");
      if (sha256_hex(body.dump()) != doc.at("digest").get<std::string>()) {
        throw Error(ErrorCode::kIntegrity, "snapshot digest mismatch for " + key);
      }
      Snapshot s = snapshot_from_json(body);
      if (s.key != key) throw Error(ErrorCode::kIntegrity, "snapshot key mismatch for " + key);
      return s;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kIntegrity, "corrupt snapshot " + key + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kIntegrity) throw;
      throw Error(ErrorCode::kIntegrity, "corrupt snapshot " + key + ": " + e.what());
    }
  }

  ClassifierModel load_model(const std::string& key) const {
    const Snapshot s = load(key);
    if (s.model_file.empty()) throw not_found("snapshot " + key + " has no stored model");
    const auto path = root_ / s.model_file;
    if (!std::filesystem::exists(path)) throw not_found("model file missing for " + key);
    try {
      return model_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kIntegrity, "corrupt model file for " + key + ": " + e.what());
    }
  }

  Manifest list() const {
    Manifest m;
    std::error_code ec;
    for (const auto& dir : std::filesystem::directory_iterator(root_, ec)) {
      if (!dir.is_directory()) continue;
      for (const auto& file : std::filesystem::directory_iterator(dir.path())) {
        const std::string name = file.path().filename().string();
        if (name.size() != 69 || name.substr(64) != ".json") continue;
        const std::string key = name.substr(0, 64);
        if (!is_experiment_key(key)) continue;
        std::string summary;
        try {
          summary = snapshot_summary(load(key));
        } catch (const Error& e) {
          summary = std::string("unreadable: ") + e.what();
        }
        m.entries.push_back({key, summary});
      }
    }
    std::sort(m.entries.begin(), m.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.key < b.key; });
    return m;
  }

  ComparisonTable compare(const std::vector<std::string>& keys) const {
    if (keys.size() < 2) throw invalid_argument("comparison needs at least two keys");
    std::vector<Snapshot> snaps;
    for (const auto& k : keys) snaps.push_back(load(k));
    ComparisonTable table;
    table.keys = keys;
    for (const auto& s : snaps) {
      table.model_kinds.emplace_back(to_string(s.model_kind));
      table.split_mismatch |= !(s.split == snaps.front().split);
      table.fingerprint_mismatch |= s.dataset_fingerprint != snaps.front().dataset_fingerprint;
    }
    table.identical_slice = !table.split_mismatch && !table.fingerprint_mismatch;
    auto add = [&](std::string name, auto getter) {
      ComparisonRow row{std::move(name), {}};
      for (const auto& s : snaps) row.values.push_back(static_cast<double>(getter(s)));
      table.rows.push_back(std::move(row));
    };
    add("tau", [](const Snapshot& s) { return s.tau; });
    add("precision", [](const Snapshot& s) { return s.pointwise.precision; });
    add("recall", [](const Snapshot& s) { return s.pointwise.recall; });
    add("fbeta", [](const Snapshot& s) { return s.pointwise.fbeta; });
    add("tp", [](const Snapshot& s) { return s.pointwise.counts.tp; });
    add("fp", [](const Snapshot& s) { return s.pointwise.counts.fp; });
    add("tn", [](const Snapshot& s) { return s.pointwise.counts.tn; });
    add("fn", [](const Snapshot& s) { return s.pointwise.counts.fn; });
    add("event_precision", [](const Snapshot& s) { return s.events.precision; });
    add("event_recall", [](const Snapshot& s) { return s.events.recall; });
    add("event_tp", [](const Snapshot& s) { return s.events.tp; });
    add("event_fp", [](const Snapshot& s) { return s.events.fp; });
    add("event_fn", [](const Snapshot& s) { return s.events.fn; });
    add("calibration_a", [](const Snapshot& s) { return s.calibration.a; });
    add("calibration_b", [](const Snapshot& s) { return s.calibration.b; });
    return table;
  }

  std::filesystem::path snapshot_path(const std::string& key) const {
    return root_ / key.substr(0, 2) / (key + ".json");
  }

 private:
  static std::string model_relative_path(const std::string& key) {
    return key.substr(0, 2) + "/" + key + ".model.json";
  }

  static std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static void atomic_write(const std::filesystem::path& path, const std::string& contents) {
    static std::atomic<unsigned long> counter{0};
    std::ostringstream tmp_name;
    tmp_name << path.filename().string() << ".tmp." << ::getpid() << '.'
             << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.' << counter++;
    const auto tmp = path.parent_path() / tmp_name.str();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
      out << contents;
      out.flush();
      if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "cannot rename into " + path.string());
    }
  }

  void write_manifest() const {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& e : list().entries) doc.push_back({{"key", e.key}, {"summary", e.summary}});
    atomic_write(root_ / "manifest.json", doc.dump(2));
  }

  std::filesystem::path root_;
};

inline std::string render_comparison(const ComparisonTable& table) {
  std::ostringstream out;
  out << "metric";
  for (const auto& k : table.keys) out << ',' << k.substr(0, 12);
  out << "\nmodel";
  for (const auto& m : table.model_kinds) out << ',' << m;
  out << '\n';
  for (const auto& row : table.rows) {
    out << row.metric;
    for (double v : row.values) out << ',' << canonical_real(v);
    out << '\n';
  }
  out << "identical_slice," << (table.identical_slice ? "yes" : "no") << '\n';
  if (table.split_mismatch) out << "WARNING,split specs differ between runs\n";
  if (table.fingerprint_mismatch) out << "WARNING,dataset fingerprints differ between runs\n";
  return out.str();
}

}  // namespace slugwatch

#endif  // SLUGWATCH_SNAPSHOT_HPP_

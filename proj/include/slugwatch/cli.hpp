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

#ifndef SLUGWATCH_CLI_HPP_
#define SLUGWATCH_CLI_HPP_

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slugwatch/alerting.hpp"
#include "slugwatch/calibration.hpp"
#include "slugwatch/csv.hpp"
#include "slugwatch/http.hpp"
#include "slugwatch/labeling.hpp"
#include "slugwatch/model_io.hpp"
#include "slugwatch/pipeline.hpp"
#include "slugwatch/service.hpp"
#include "slugwatch/snapshot.hpp"
#include "slugwatch/split.hpp"
#include "slugwatch/synthetic.hpp"

namespace slugwatch {

/// Process exit statuses. Stable: scripts may rely on them.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitBadInput = 3,
  kExitNotFound = 4,
  kExitIntegrity = 5,
  kExitIo = 6,
  kExitConflict = 7,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse: return kExitBadInput;
    case ErrorCode::kNotFound: return kExitNotFound;
    case ErrorCode::kIntegrity: return kExitIntegrity;
    case ErrorCode::kIo: return kExitIo;
    case ErrorCode::kConflict: return kExitConflict;
  }
  return kExitInternal;
}

inline constexpr const char* kExitCodeHelp =
    "Exit codes: 0 ok, 1 internal error, 2 usage error, 3 invalid input, "
    "4 not found, 5 integrity failure, 6 I/O error, 7 conflict.";

namespace cli_detail {

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty() || path == "-") {
    fallback << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(ErrorCode::kIo, "cannot write " + path);
}

/// "start,end" with ISO or integer-minute bounds.
inline TimeInterval parse_interval(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw invalid_argument("interval '" + text + "' needs start,end");
  auto a = parse_timestamp(text.substr(0, comma));
  auto b = parse_timestamp(text.substr(comma + 1));
  if (!a || !b) throw invalid_argument("bad interval '" + text + "'");
  return {*a, *b};
}

inline std::vector<TimeInterval> parse_intervals(const std::vector<std::string>& texts) {
  std::vector<TimeInterval> out;
  for (const auto& t : texts) out.push_back(parse_interval(t));
  return out;
}

struct SchemaFlags {
  std::string timestamp_column = "timestamp";
  std::string label_column = "label";
  std::vector<std::string> features;
  std::optional<Minutes> period;

  void add(CLI::App* app) {
    app->add_option("--timestamp-column", timestamp_column, "Timestamp column name");
    app->add_option("--label-column", label_column, "Label column name");
    app->add_option("--features", features, "Feature columns (default: all others)")
        ->delimiter(',');
    app->add_option("--period", period, "Sampling period in minutes (default: inferred)");
  }

  CsvSchema schema() const {
    CsvSchema s;
    s.timestamp_column = timestamp_column;
    s.label_column = label_column;
    s.feature_columns = features;
    s.sampling_period = period;
    return s;
  }
};

inline Dataset load_dataset(const std::string& path, const SchemaFlags& flags) {
  return ingest_csv_string(read_text(path), flags.schema());
}

struct SplitFlags {
  double train_fraction = 0.8;
  std::vector<std::string> train;
  std::vector<std::string> test;

  void add(CLI::App* app) {
    app->add_option("--train-fraction", train_fraction,
                    "Leading share of samples for training when no intervals are given");
    app->add_option("--train", train, "Training interval start,end (repeatable)");
    app->add_option("--test", test, "Test interval start,end (repeatable)");
  }

  SplitSpec resolve(const Dataset& d) const {
    if (train.empty() != test.empty()) throw invalid_argument("give both --train and --test");
    SplitSpec s = train.empty() ? fractional_split(d, train_fraction)
                                : SplitSpec{parse_intervals(train), parse_intervals(test), true};
    s.validate();
    return s;
  }
};

struct TrainFlags {
  std::string kind = "forest";
  TrainConfig config;
  std::string class_weights = "unit";
  bool no_bootstrap = false;

  void add(CLI::App* app) {
    app->add_option("--kind", kind, "tree | forest | boosted");
    app->add_option("--max-depth", config.max_depth, "Maximum tree depth");
    app->add_option("--min-samples-leaf", config.min_samples_leaf, "Minimum samples per leaf");
    app->add_option("--trees", config.n_trees, "Trees (forest) or rounds (boosted)");
    app->add_option("--feature-subsample", config.feature_subsample,
                    "Share of features tried at each forest node");
    app->add_flag("--no-bootstrap", no_bootstrap, "Grow forest trees on the full sample");
    app->add_option("--learning-rate", config.learning_rate, "Boosting shrinkage");
    app->add_option("--l2", config.l2_regularization, "Boosting L2 penalty on leaf values");
    app->add_option("--class-weights", class_weights, "auto | unit | W1,W0");
  }

  TrainConfig resolve(std::uint64_t seed) const {
    TrainConfig c = config;
    c.kind = parse_model_kind(kind);
    c.seed = seed;
    c.bootstrap = !no_bootstrap;
    if (class_weights == "auto") {
      c.class_weights.reset();
    } else if (class_weights == "unit") {
      c.class_weights = ClassWeights{};
    } else {
      const auto comma = class_weights.find(',');
      try {
        if (comma == std::string::npos) throw std::invalid_argument("");
        c.class_weights = ClassWeights{std::stod(class_weights.substr(0, comma)),
                                       std::stod(class_weights.substr(comma + 1))};
      } catch (const std::exception&) {
        throw invalid_argument("--class-weights must be auto, unit or W1,W0");
      }
    }
    c.validate();
    return c;
  }
};

struct RuleFlags {
  std::string rule = "fbeta";
  double beta = 1.0;
  double tau = 0.5;
  double grid_step = 0.01;

  void add(CLI::App* app) {
    app->add_option("--rule", rule, "fbeta | youden | fixed");
    app->add_option("--beta", beta, "F-beta weight on recall");
    app->add_option("--tau", tau, "Threshold for --rule fixed");
    app->add_option("--grid-step", grid_step, "Threshold grid step; 0 scans scores only");
  }

  ThresholdRule resolve() const {
    ThresholdRule r;
    if (rule == "fbeta") {
      r = ThresholdRule::fbeta(beta, grid_step);
    } else if (rule == "youden") {
      r = ThresholdRule::youden();
    } else if (rule == "fixed") {
      r = ThresholdRule::fixed(tau);
    } else {
      throw invalid_argument("unknown rule '" + rule + "'");
    }
    r.validate();
    return r;
  }
};

struct AlertFlags {
  std::string mode = "persistence";
  std::optional<std::int64_t> kappa;
  std::optional<Minutes> delta_min;
  Minutes delta_s = kDefaultSamplingPeriod;
  AlertConfig config;
  std::optional<std::int64_t> reset_gap;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "persistence | majority | hysteresis");
    app->add_option("--kappa", kappa, "Consecutive positives required (persistence)");
    app->add_option("--delta-min", delta_min, "Minimum sustained duration, minutes");
    app->add_option("--delta-s", delta_s, "Sampling period, minutes");
    app->add_option("--cooldown", config.cooldown, "Suppressed steps after each alert");
    app->add_option("--window", config.window, "Majority window L");
    app->add_option("--votes", config.votes, "Majority votes m");
    app->add_option("--tau-hi", config.tau_hi, "Hysteresis entry threshold");
    app->add_option("--tau-lo", config.tau_lo, "Hysteresis exit threshold");
    app->add_option("--reset-gap", reset_gap, "Zero steps that close an alert (default kappa)");
  }

  AlertConfig resolve() const {
    AlertConfig c = config;
    c.mode = parse_alert_mode(mode);
    if (kappa && delta_min) throw invalid_argument("give --kappa or --delta-min, not both");
    if (delta_min) c.kappa = kappa_from_duration(*delta_min, delta_s);
    if (kappa) c.kappa = *kappa;
    c.reset_gap = reset_gap;
    c.validate();
    return c;
  }
};

inline std::string store_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SLUGWATCH_STORE"); env && *env) return env;
  return "slugwatch-store";
}

/// Columns named `value_col` (and optionally "timestamp") from a CSV.
struct Trace {
  std::vector<Minutes> timestamps;
  std::vector<double> values;
  std::vector<int> labels;
};

inline Trace read_trace(const std::string& path, const std::vector<std::string>& value_cols,
                        bool need_labels) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = csv_detail::split_line(line);
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (csv_detail::trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  std::optional<std::size_t> vcol;
  for (const auto& name : value_cols) {
    if ((vcol = find(name))) break;
  }
  if (!vcol) throw Error(ErrorCode::kParse, path + ": no column among the expected value columns");
  const auto tcol = find("timestamp");
  std::optional<std::size_t> ycol = find("y");
  if (!ycol) ycol = find("label");
  if (need_labels && !ycol) throw Error(ErrorCode::kParse, path + ": no y/label column");
  Trace t;
  std::size_t row = 1;
  std::vector<std::string> issues;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv_detail::trim(line).empty()) continue;
    const auto f = csv_detail::split_line(line);
    if (f.size() != header.size()) {
      issues.push_back("row " + std::to_string(row) + ": wrong field count");
      continue;
    }
    auto v = csv_detail::parse_double(csv_detail::trim(f[*vcol]));
    if (!v) {
      issues.push_back("row " + std::to_string(row) + ": bad value");
      continue;
    }
    t.values.push_back(*v);
    if (tcol) {
      auto ts = parse_timestamp(csv_detail::trim(f[*tcol]));
      if (!ts) {
        issues.push_back("row " + std::to_string(row) + ": bad timestamp");
        continue;
      }
      t.timestamps.push_back(*ts);
    }
    if (ycol) {
      auto y = csv_detail::parse_double(csv_detail::trim(f[*ycol]));
      if (!y || (*y != 0.0 && *y != 1.0)) {
        issues.push_back("row " + std::to_string(row) + ": label must be 0 or 1");
        continue;
      }
      t.labels.push_back(static_cast<int>(*y));
    }
  }
  if (!issues.empty()) throw IngestError(issues);
  return t;
}

inline std::string dump_line(const nlohmann::json& j) { return j.dump() + "\n"; }

}  // namespace cli_detail

/// Entry point for the `slugwatch` tool. Structured output goes to `out`,
/// human-readable notes to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Slug detection workflow: data preparation, training, evaluation, alerting."};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);
  std::string store_flag;
  app.add_option("--store", store_flag, "Snapshot store root (default $SLUGWATCH_STORE)");
  std::uint64_t seed = 7;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset as CSV");
  SyntheticConfig syn;
  std::string synth_out, episodes_out;
  synth->add_option("--seed", syn.seed, "Random seed");
  synth->add_option("--steps", syn.duration, "Number of samples");
  synth->add_option("--period", syn.sampling_period, "Sampling period, minutes");
  synth->add_option("--episode-rate", syn.slug_episode_rate, "Slug episodes per 1000 steps");
  synth->add_option("--episode-min", syn.episode_length_min, "Shortest episode, steps");
  synth->add_option("--episode-max", syn.episode_length_max, "Longest episode, steps");
  synth->add_option("--drift", syn.baseline_drift, "Baseline drift multiplier");
  synth->add_option("--start", syn.start_time, "First timestamp, minutes since epoch");
  synth->add_option("-o,--out", synth_out, "Output CSV (default stdout)");
  synth->add_option("--episodes-out", episodes_out, "Write injected episodes as CSV");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a CSV and write it in canonical form");
  SchemaFlags ingest_schema;
  std::string ingest_in, ingest_out;
  ingest->add_option("input", ingest_in, "CSV file")->required();
  ingest_schema.add(ingest);
  ingest->add_option("-o,--out", ingest_out, "Canonical CSV output (default stdout)");

  // label
  auto* label = app.add_subcommand("label", "Apply interval label edits, writing a new CSV");
  SchemaFlags label_schema;
  std::string label_in, label_out, edits_file;
  std::vector<std::string> slug_iv, clear_iv;
  label->add_option("input", label_in, "CSV file")->required();
  label_schema.add(label);
  label->add_option("--slug", slug_iv, "Interval start,end to mark as slug (repeatable)");
  label->add_option("--non-slug", clear_iv, "Interval start,end to mark as non-slug (repeatable)");
  label->add_option("--edits", edits_file,
                    "JSON array of {start,end,label}, applied after the flag edits");
  label->add_option("-o,--out", label_out, "Output CSV (default stdout)");

  // split
  auto* split = app.add_subcommand("split", "Chronological train/test split");
  SchemaFlags split_schema;
  SplitFlags split_flags;
  std::string split_in, train_out, test_out;
  split->add_option("input", split_in, "CSV file")->required();
  split_schema.add(split);
  split_flags.add(split);
  split->add_option("--train-out", train_out, "Training CSV output");
  split->add_option("--test-out", test_out, "Test CSV output");

  // train
  auto* train = app.add_subcommand("train", "Train, calibrate, tune and evaluate; prints the key");
  SchemaFlags train_schema;
  SplitFlags train_split;
  TrainFlags train_flags;
  RuleFlags train_rule;
  std::string train_in;
  double theta = 0.5;
  train->add_option("input", train_in, "Labeled CSV file")->required();
  train_schema.add(train);
  train_split.add(train);
  train_flags.add(train);
  train_rule.add(train);
  train->add_option("--seed", seed, "Random seed");
  train->add_option("--theta", theta, "Event IoU threshold");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Re-score a stored run's test interval");
  SchemaFlags eval_schema;
  std::string eval_in, eval_key, eval_parameter, overlay_out, roc_out;
  eval->add_option("input", eval_in, "Dataset the run was trained on")->required();
  eval_schema.add(eval);
  eval->add_option("--key", eval_key, "Experiment key")->required();
  eval->add_option("--parameter", eval_parameter, "Parameter column for the overlay");
  eval->add_option("--overlay-out", overlay_out, "Overlay CSV output")->required();
  eval->add_option("--roc-out", roc_out, "ROC CSV output");

  // tune-threshold
  auto* tune = app.add_subcommand("tune-threshold", "Pick a threshold from scored labels");
  RuleFlags tune_rule;
  std::string scores_in, tune_roc_out;
  tune->add_option("input", scores_in, "CSV with p and y (or label) columns")->required();
  tune_rule.add(tune);
  tune->add_option("--roc-out", tune_roc_out, "ROC CSV output");

  // infer
  auto* infer = app.add_subcommand("infer", "Replay data through alert logic");
  SchemaFlags infer_schema;
  AlertFlags alert_flags;
  std::string infer_in, infer_key, predictions_in, alerts_out;
  infer->add_option("input", infer_in, "Dataset CSV to score with --key");
  infer_schema.add(infer);
  infer->add_option("--key", infer_key, "Experiment key of the model");
  infer->add_option("--predictions", predictions_in,
                    "CSV of yhat (binary modes) or p (hysteresis) instead of a model");
  alert_flags.add(infer);
  infer->add_option("-o,--out", alerts_out, "Alert event CSV (default stdout)");

  // snapshots
  auto* snaps = app.add_subcommand("snapshots", "Inspect the snapshot store");
  snaps->require_subcommand(1);
  auto* snap_list = snaps->add_subcommand("list", "List stored runs");
  auto* snap_show = snaps->add_subcommand("show", "Print a snapshot as JSON");
  std::string show_key;
  snap_show->add_option("key", show_key, "Experiment key")->required();
  auto* snap_compare = snaps->add_subcommand("compare", "Compare metrics of stored runs");
  std::vector<std::string> compare_keys;
  snap_compare->add_option("keys", compare_keys, "Two or more keys")->required()->expected(2, -1);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t row_cap = 1000;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--row-cap", row_cap, "Preview row limit");
  std::string static_dir;
  serve->add_option("--static-dir", static_dir, "Directory of built web console files to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*synth) {
      const SyntheticResult r = generate_synthetic(syn);
      write_text(synth_out, export_csv_string(r.dataset), out);
      if (!episodes_out.empty()) {
        std::string csv = "start,end\n";
        for (const auto& e : r.episodes) {
          csv += format_timestamp(e.start) + "," + format_timestamp(e.end) + "\n";
        }
        write_text(episodes_out, csv, out);
      }
      err << "synth: " << r.dataset.size() << " samples, " << r.episodes.size() << " episodes\n";
    } else if (*ingest) {
      const Dataset d = load_dataset(ingest_in, ingest_schema);
      write_text(ingest_out, export_csv_string(d), out);
      err << "ingest: " << d.size() << " samples, " << d.dimension() << " features, period "
          << d.sampling_period() << " min\n";
    } else if (*label) {
      const Dataset d = load_dataset(label_in, label_schema);
      std::vector<LabelEdit> edits;
      for (const auto& s : slug_iv) edits.push_back({parse_interval(s), 1});
      for (const auto& s : clear_iv) edits.push_back({parse_interval(s), 0});
      if (!edits_file.empty()) {
        for (auto& e : label_edits_from_json(nlohmann::json::parse(read_text(edits_file)))) {
          edits.push_back(e);
        }
      }
      const Dataset edited = apply_interval_labels(d, edits);
      write_text(label_out, export_csv_string(edited), out);
      err << "label: applied " << edits.size() << " edits\n";
    } else if (*split) {
      const Dataset d = load_dataset(split_in, split_schema);
      const SplitSpec spec = split_flags.resolve(d);
      const SplitResult parts = chronological_split(d, spec);
      if (!train_out.empty()) write_text(train_out, export_csv_string(parts.train), out);
      if (!test_out.empty()) write_text(test_out, export_csv_string(parts.test), out);
      out << dump_line({{"split", to_json(spec)},
                        {"train_rows", parts.train.size()},
                        {"test_rows", parts.test.size()}});
    } else if (*train) {
      const Dataset d = load_dataset(train_in, train_schema);
      ExperimentRequest req;
      req.split = train_split.resolve(d);
      req.config = train_flags.resolve(seed);
      req.rule = train_rule.resolve();
      req.event_match.theta = theta;
      SnapshotStore store(store_root(store_flag));
      const CachedRun run = run_cached(store, d, req);
      out << run.snapshot.key << "\n";
      err << (run.cache_hit ? "cache hit: " : "trained: ") << snapshot_summary(run.snapshot)
          << "\n";
    } else if (*eval) {
      const Dataset d = load_dataset(eval_in, eval_schema);
      SnapshotStore store(store_root(store_flag));
      const Snapshot s = store.load(eval_key);
      if (s.dataset_fingerprint != dataset_fingerprint(d)) {
        throw Error(ErrorCode::kConflict, "dataset differs from the one run " + eval_key +
                                              " was trained on");
      }
      const ClassifierModel model = store.load_model(eval_key);
      const Dataset test = chronological_split(d, s.split).test;
      const double beta =
          s.threshold_rule.kind == ThresholdRuleKind::kFBeta ? s.threshold_rule.beta : 1.0;
      const Evaluation ev =
          evaluate(model, s.calibration, test, s.tau, beta, {s.event_theta}, ConfidenceParams{});
      std::size_t index = 0;
      if (!eval_parameter.empty()) {
        auto f = test.feature_index(eval_parameter);
        if (!f) throw invalid_argument("unknown parameter '" + eval_parameter + "'");
        index = *f;
      }
      std::ostringstream overlay;
      export_overlay_csv(build_overlay(test, index, ev.scores.probabilities, s.tau), overlay);
      write_text(overlay_out, overlay.str(), out);
      if (!roc_out.empty()) {
        std::ostringstream roc;
        export_roc_csv(ev.roc, roc);
        write_text(roc_out, roc.str(), out);
      }
      out << dump_line({{"key", eval_key},
                        {"tau", s.tau},
                        {"pointwise", to_json(ev.pointwise)},
                        {"events", to_json(ev.events)}});
      err << "evaluate: " << test.size() << " test samples\n";
    } else if (*tune) {
      const Trace t = read_trace(scores_in, {"p"}, true);
      const ThresholdRule rule = tune_rule.resolve();
      const ThresholdChoice c = choose_threshold(rule, t.values, t.labels);
      if (!tune_roc_out.empty()) {
        std::ostringstream roc;
        export_roc_csv(roc_and_youden(t.values, t.labels).curve, roc);
        write_text(tune_roc_out, roc.str(), out);
      }
      out << dump_line({{"rule", rule.describe()}, {"tau", c.tau}, {"score", c.score}});
    } else if (*infer) {
      const AlertConfig config = alert_flags.resolve();
      StreamResult result;
      if (!predictions_in.empty()) {
        if (!infer_in.empty() || !infer_key.empty()) {
          throw invalid_argument("--predictions excludes a dataset and --key");
        }
        const bool binary = config.mode != AlertMode::kHysteresis;
        const Trace t = read_trace(predictions_in, binary ? std::vector<std::string>{"yhat"}
                                                          : std::vector<std::string>{"p"},
                                   false);
        result = run_stream(t.values, t.timestamps, config);
      } else {
        if (infer_in.empty() || infer_key.empty()) {
          throw invalid_argument("infer needs a dataset and --key, or --predictions");
        }
        const Dataset d = load_dataset(infer_in, infer_schema);
        SnapshotStore store(store_root(store_flag));
        const Snapshot s = store.load(infer_key);
        InferenceSession session("cli", infer_key, infer_in, d, store.load_model(infer_key),
                                 s.calibration, s.tau, config, std::nullopt);
        session.run_to_end();
        result.events = session.alert_events();
      }
      std::ostringstream csv;
      export_alert_events_csv(result.events, csv);
      write_text(alerts_out, csv.str(), out);
      err << "infer: " << result.events.size() << " alert events (" << config.describe() << ")\n";
    } else if (*snaps) {
      SnapshotStore store(store_root(store_flag));
      if (*snap_list) {
        for (const auto& e : store.list().entries) out << e.key << "\t" << e.summary << "\n";
      } else if (*snap_show) {
        out << to_json(store.load(show_key)).dump(2) << "\n";
      } else if (*snap_compare) {
        out << render_comparison(store.compare(compare_keys));
      }
    } else if (*serve) {
      ServiceConfig config{store_root(store_flag), row_cap};
      Service service(config);
      httplib::Server server;
      bind_routes(server, service);
      if (!static_dir.empty() && !server.set_mount_point("/", static_dir)) {
        throw not_found("static directory " + static_dir + " does not exist");
      }
      err << "serving on http://" << host << ":" << port << " (store " << config.store_root.string()
          << ")\n";
      if (!server.listen(host, port)) {
        throw Error(ErrorCode::kIo, "cannot listen on port " + std::to_string(port));
      }
    }
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace slugwatch

#endif  // SLUGWATCH_CLI_HPP_

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

#ifndef SLUGWATCH_CSV_HPP_
#define SLUGWATCH_CSV_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "slugwatch/dataset.hpp"
#include "slugwatch/error.hpp"
#include "slugwatch/time.hpp"

namespace slugwatch {

/// Column-name to role mapping for CSV ingestion.
struct CsvSchema {
  std::string timestamp_column = "timestamp";
  // Empty means every column that is neither timestamp nor label.
  std::vector<std::string> feature_columns;
  std::string label_column = "label";
  // When false, a missing label column is an error instead of yielding an
  // unlabeled dataset.
  bool label_optional = true;
  // Inferred from the smallest gap when unset.
  std::optional<Minutes> sampling_period;
};

/// Ingestion failure carrying every offending location found.
class IngestError : public Error {
 public:
  explicit IngestError(std::vector<std::string> issues)
      : Error(ErrorCode::kParse, summarize(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string summarize(const std::vector<std::string>& issues) {
    std::string out = "CSV rejected: ";
    const std::size_t shown = std::min<std::size_t>(issues.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) {
      if (i) out += "; ";
      out += issues[i];
    }
    if (issues.size() > shown) {
      out += "; ... (" + std::to_string(issues.size() - shown) + " more)";
    }
    return out;
  }

  std::vector<std::string> issues_;
};

namespace csv_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

}  // namespace csv_detail

/// Shortest text that parses back to exactly `v`.
inline std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline Dataset ingest_csv(std::istream& in, const CsvSchema& schema = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!csv_detail::trim(line).empty()) {
      header = csv_detail::split_line(line);
      break;
    }
  }
  if (header.empty()) throw IngestError({"missing header row"});

  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!column.emplace(header[i], i).second) {
      throw IngestError({"duplicate column name '" + header[i] + "'"});
    }
  }
  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = column.find(name);
    if (it == column.end()) return std::nullopt;
    return it->second;
  };

  const auto ts_col = find_column(schema.timestamp_column);
  if (!ts_col) throw IngestError({"no timestamp column '" + schema.timestamp_column + "'"});
  auto label_col = find_column(schema.label_column);
  if (!label_col && !schema.label_optional) {
    throw IngestError({"no label column '" + schema.label_column + "'"});
  }

  std::vector<std::string> feature_names = schema.feature_columns;
  if (feature_names.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i != *ts_col && (!label_col || i != *label_col)) feature_names.push_back(header[i]);
    }
  }
  if (feature_names.empty()) throw IngestError({"no feature columns"});
  std::vector<std::size_t> feature_cols;
  for (const auto& name : feature_names) {
    auto c = find_column(name);
    if (!c) throw IngestError({"no feature column '" + name + "'"});
    feature_cols.push_back(*c);
  }

  struct Row {
    Sample sample;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::vector<std::string> issues;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv_detail::trim(line).empty()) continue;
    auto fields = csv_detail::split_line(line);
    if (fields.size() != header.size()) {
      issues.push_back("row " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " cells, found " +
                       std::to_string(fields.size()));
      continue;
    }
    Row row{{}, line_no};
    bool ok = true;
    if (auto t = parse_timestamp(fields[*ts_col])) {
      row.sample.timestamp = *t;
    } else {
      issues.push_back("row " + std::to_string(line_no) + ", column '" +
                       schema.timestamp_column + "': bad timestamp '" + fields[*ts_col] + "'");
      ok = false;
    }
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const auto& cell = fields[feature_cols[f]];
      if (auto v = csv_detail::parse_double(cell)) {
        row.sample.features.push_back(*v);
      } else {
        issues.push_back("row " + std::to_string(line_no) + ", column '" +
                         feature_names[f] + "': non-numeric value '" + cell + "'");
        ok = false;
      }
    }
    if (label_col) {
      const auto cell = csv_detail::trim(fields[*label_col]);
      if (!cell.empty()) {
        auto v = csv_detail::parse_double(cell);
        if (v && (*v == 0.0 || *v == 1.0)) {
          row.sample.label = static_cast<int>(*v);
        } else {
          issues.push_back("row " + std::to_string(line_no) + ", column '" +
                           schema.label_column + "': label '" + std::string(cell) +
                           "' outside {0,1}");
          ok = false;
        }
      }
    }
    if (ok) rows.push_back(std::move(row));
  }
  if (!issues.empty()) throw IngestError(std::move(issues));

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.sample.timestamp < b.sample.timestamp;
  });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].sample.timestamp == rows[i - 1].sample.timestamp) {
      issues.push_back("duplicate timestamp " + format_timestamp(rows[i].sample.timestamp) +
                       " at rows " + std::to_string(rows[i - 1].line) + " and " +
                       std::to_string(rows[i].line));
    }
  }
  if (!issues.empty()) throw IngestError(std::move(issues));

  Minutes period = schema.sampling_period.value_or(0);
  if (period == 0) {
    period = kDefaultSamplingPeriod;
    if (rows.size() >= 2) {
      period = rows[1].sample.timestamp - rows[0].sample.timestamp;
      for (std::size_t i = 2; i < rows.size(); ++i) {
        period = std::min(period, rows[i].sample.timestamp - rows[i - 1].sample.timestamp);
      }
    }
  }
  if (period <= 0) throw IngestError({"sampling period must be positive"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const Minutes gap = rows[i].sample.timestamp - rows[i - 1].sample.timestamp;
    if (gap != period) {
      issues.push_back("irregular gap of " + std::to_string(gap) + " min between " +
                       format_timestamp(rows[i - 1].sample.timestamp) + " (row " +
                       std::to_string(rows[i - 1].line) + ") and " +
                       format_timestamp(rows[i].sample.timestamp) + " (row " +
                       std::to_string(rows[i].line) + "), expected " +
                       std::to_string(period));
    }
  }
  if (!issues.empty()) throw IngestError(std::move(issues));

  std::vector<Sample> samples;
  samples.reserve(rows.size());
  for (auto& r : rows) samples.push_back(std::move(r.sample));
  return Dataset::create(std::move(feature_names), std::move(samples), period);
}

inline Dataset ingest_csv_string(const std::string& text, const CsvSchema& schema = {}) {
  std::istringstream in(text);
  return ingest_csv(in, schema);
}

/// Header row, ISO-8601 timestamps, features in declared order, label last
/// (empty cell when unlabeled).
inline void export_csv(const Dataset& dataset, std::ostream& out) {
  out << "timestamp";
  for (const auto& name : dataset.feature_names()) out << ',' << name;
  out << ",label\n";
  for (const auto& s : dataset.samples()) {
    out << format_timestamp(s.timestamp);
    for (double v : s.features) out << ',' << format_real(v);
    out << ',';
    if (s.label) out << *s.label;
    out << '\n';
  }
}

inline std::string export_csv_string(const Dataset& dataset) {
  std::ostringstream out;
  export_csv(dataset, out);
  return out.str();
}

}  // namespace slugwatch

#endif  // SLUGWATCH_CSV_HPP_

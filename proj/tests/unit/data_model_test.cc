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

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "slugwatch/csv.hpp"
#include "slugwatch/dataset.hpp"
#include "slugwatch/labeling.hpp"
#include "slugwatch/split.hpp"
#include "slugwatch/synthetic.hpp"
#include "slugwatch/time.hpp"
#include "support/oracles.hpp"

namespace {

using ::slugwatch::apply_interval_labels;
using ::slugwatch::chronological_split;
using ::slugwatch::Dataset;
using ::slugwatch::Error;
using ::slugwatch::ErrorCode;
using ::slugwatch::export_csv_string;
using ::slugwatch::format_timestamp;
using ::slugwatch::generate_synthetic;
using ::slugwatch::ingest_csv_string;
using ::slugwatch::IngestError;
using ::slugwatch::LabelEdit;
using ::slugwatch::Minutes;
using ::slugwatch::parse_timestamp;
using ::slugwatch::Sample;
using ::slugwatch::SplitSpec;
using ::slugwatch::SyntheticConfig;
using ::slugwatch::TimeInterval;
using ::slugwatch::testing::Rng;

// n samples at 5-minute spacing starting at t=0, feature = index.
Dataset Ramp(std::size_t n, bool labeled = true) {
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s{static_cast<Minutes>(5 * i), {static_cast<double>(i)}, std::nullopt};
    if (labeled) s.label = 0;
    samples.push_back(s);
  }
  return Dataset::create({"x"}, samples);
}

Minutes T(std::size_t i) { return static_cast<Minutes>(5 * i); }

std::string ErrorText(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(TimeTest, ParsesIsoAndIntegerMinutes) {
  EXPECT_EQ(parse_timestamp("1970-01-01T00:00"), 0);
  EXPECT_EQ(parse_timestamp("1970-01-02 01:05"), 1440 + 65);
  EXPECT_EQ(parse_timestamp("2024-01-01T00:00:00Z"), 28401120);
  EXPECT_EQ(parse_timestamp("  125 "), 125);
  EXPECT_EQ(parse_timestamp("-10"), -10);
  EXPECT_FALSE(parse_timestamp("2024-02-30T00:00"));
  EXPECT_FALSE(parse_timestamp("2024-01-01T00:00:30"));
  EXPECT_FALSE(parse_timestamp("2024-01-01T24:00"));
  EXPECT_FALSE(parse_timestamp("yesterday"));
  EXPECT_FALSE(parse_timestamp(""));
}

TEST(TimeTest, FormatRoundTripsOverRandomMinutes) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const Minutes t = slugwatch::testing::uniform_int(rng, -5'000'000, 60'000'000);
    EXPECT_EQ(parse_timestamp(format_timestamp(t)), t) << t;
  }
  EXPECT_EQ(format_timestamp(28401120), "2024-01-01T00:00");
}

TEST(DatasetTest, RejectsBrokenInvariants) {
  EXPECT_THROW(Dataset::create({"a", "b"}, {{0, {1.0}, 0}}), Error);
  EXPECT_THROW(Dataset::create({"a"}, {{0, {NAN}, 0}}), Error);
  EXPECT_THROW(Dataset::create({"a"}, {{0, {INFINITY}, 0}}), Error);
  EXPECT_THROW(Dataset::create({"a"}, {{0, {1.0}, 2}}), Error);
  EXPECT_THROW(Dataset::create({"a"}, {{5, {1.0}, 0}, {0, {1.0}, 0}}), Error);
  EXPECT_THROW(Dataset::create({"a"}, {{0, {1.0}, 0}, {10, {1.0}, 0}}), Error);
  // Gapped datasets still need multiples of the period.
  EXPECT_NO_THROW(Dataset::create({"a"}, {{0, {1.0}, 0}, {10, {1.0}, 0}}, 5, true));
  EXPECT_THROW(Dataset::create({"a"}, {{0, {1.0}, 0}, {7, {1.0}, 0}}, 5, true), Error);
}

TEST(DatasetTest, TimeRangeIsHalfOpenOverThePeriod) {
  const Dataset d = Ramp(4);
  EXPECT_EQ(d.time_range().start, 0);
  EXPECT_EQ(d.time_range().end, 20);
  EXPECT_EQ(d.timestamps(), (std::vector<Minutes>{0, 5, 10, 15}));
}

TEST(CsvTest, FourRowTwoFeatureExample) {
  const Dataset d = ingest_csv_string(
      "timestamp,a,b,label\n"
      "2024-01-01T00:00,1,2,0\n"
      "2024-01-01T00:05,1.5,2,0\n"
      "2024-01-01T00:10,1,2.5,1\n"
      "2024-01-01T00:15,1,2,1\n");
  EXPECT_EQ(d.dimension(), 2u);
  EXPECT_EQ(d.sampling_period(), 5);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d.labels(), (std::vector<int>{0, 0, 1, 1}));
  EXPECT_EQ(d[1].features, (std::vector<double>{1.5, 2.0}));
}

TEST(CsvTest, IrregularGapIsNamed) {
  const std::string msg = ErrorText([] {
    ingest_csv_string("timestamp,a,label\n0,1,0\n5,1,0\n15,1,0\n");
  });
  EXPECT_NE(msg.find("1970-01-01T00:05"), std::string::npos) << msg;
  EXPECT_NE(msg.find("1970-01-01T00:15"), std::string::npos) << msg;
}

TEST(CsvTest, SixProcessVariables) {
  std::string csv = "timestamp";
  for (const auto& n : slugwatch::default_feature_names()) csv += "," + n;
  csv += ",label\n";
  for (int i = 0; i < 3; ++i) csv += std::to_string(5 * i) + ",1,2,3,4,5,6,0\n";
  const Dataset d = ingest_csv_string(csv);
  EXPECT_EQ(d.feature_names().size(), 6u);
  EXPECT_EQ(d.feature_names(), slugwatch::default_feature_names());
}

TEST(CsvTest, ErrorsCarryCoordinates) {
  try {
    ingest_csv_string("timestamp,a,label\n0,1,0\n5,oops,0\n10,1,7\n10,1,0\n");
    FAIL() << "expected rejection";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    std::string all;
    for (const auto& s : e.issues()) all += s + "\n";
    EXPECT_NE(all.find("row 3, column 'a'"), std::string::npos) << all;
    EXPECT_NE(all.find("row 4"), std::string::npos) << all;
  }
  const std::string dup = ErrorText([] { ingest_csv_string("timestamp,a\n0,1\n5,1\n5,2\n"); });
  EXPECT_NE(dup.find("duplicate"), std::string::npos) << dup;
  EXPECT_THROW(ingest_csv_string(""), IngestError);
  EXPECT_THROW(ingest_csv_string("time,a\n0,1\n"), IngestError);
}

TEST(CsvTest, SortsUnsortedUniqueRowsAndHonoursSchema) {
  slugwatch::CsvSchema schema;
  schema.timestamp_column = "ts";
  schema.label_column = "y";
  schema.feature_columns = {"b"};
  const Dataset d = ingest_csv_string("\xEF\xBB\xBFts,a,b,y\n10,9,3,1\n0,9,1,\n5,9,\"2\",0\n", schema);
  EXPECT_EQ(d.feature_names(), (std::vector<std::string>{"b"}));
  EXPECT_EQ(d.timestamps(), (std::vector<Minutes>{0, 5, 10}));
  EXPECT_FALSE(d[0].label.has_value());
  EXPECT_EQ(d[1].features[0], 2.0);
  EXPECT_EQ(*d[2].label, 1);
}

TEST(CsvTest, ExportIngestRoundTripIsExact) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::size_t>(slugwatch::testing::uniform_int(rng, 2, 40));
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < n; ++i) {
      Sample s{static_cast<Minutes>(28401120 + 5 * i),
               {slugwatch::testing::uniform(rng, -1e6, 1e6), slugwatch::testing::uniform(rng)},
               std::nullopt};
      if (slugwatch::testing::coin(rng, 0.8)) s.label = slugwatch::testing::coin(rng) ? 1 : 0;
      samples.push_back(s);
    }
    const Dataset d = Dataset::create({"p", "q"}, samples);
    EXPECT_EQ(ingest_csv_string(export_csv_string(d)), d);
  }
}

TEST(LabelingTest, SingleIntervalOnUnlabeledSet) {
  const Dataset d = Ramp(10, false);
  const Dataset e = apply_interval_labels(d, {{{T(2), T(5)}, 1}});
  for (std::size_t i = 0; i < 10; ++i) {
    if (i >= 2 && i < 5) {
      EXPECT_EQ(e[i].label, 1) << i;
    } else {
      EXPECT_FALSE(e[i].label) << i;
    }
  }
}

TEST(LabelingTest, LaterEditsOverride) {
  const Dataset e = apply_interval_labels(Ramp(10, false), {{{T(0), T(10)}, 0}, {{T(3), T(6)}, 1}});
  EXPECT_EQ(e.labels(), (std::vector<int>{0, 0, 0, 1, 1, 1, 0, 0, 0, 0}));
}

TEST(LabelingTest, OutOfRangeAndIdentity) {
  const Dataset d = Ramp(10, false);
  EXPECT_THROW(apply_interval_labels(d, {{{-20, -5}, 1}}), Error);
  EXPECT_THROW(apply_interval_labels(d, {{{T(5), T(11)}, 1}}), Error);
  EXPECT_EQ(apply_interval_labels(d, {}), d);
}

TEST(LabelingTest, IdempotentForAFixedEditList) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset d = Ramp(30, slugwatch::testing::coin(rng));
    std::vector<LabelEdit> edits;
    const auto count = slugwatch::testing::uniform_int(rng, 0, 4);
    for (int k = 0; k < count; ++k) {
      const auto a = static_cast<std::size_t>(slugwatch::testing::uniform_int(rng, 0, 28));
      const auto b = static_cast<std::size_t>(slugwatch::testing::uniform_int(rng, static_cast<std::int64_t>(a) + 1, 30));
      edits.push_back({{T(a), T(b)}, slugwatch::testing::coin(rng) ? 1 : 0});
    }
    const Dataset once = apply_interval_labels(d, edits);
    EXPECT_EQ(apply_interval_labels(once, edits), once);
    // Each sample carries the label of the last edit containing it.
    for (std::size_t i = 0; i < 30; ++i) {
      std::optional<int> want = d[i].label;
      for (const auto& e : edits) {
        if (e.interval.contains(T(i))) want = e.label;
      }
      EXPECT_EQ(once[i].label, want);
    }
  }
}

TEST(SplitTest, EightyTwenty) {
  const auto parts = chronological_split(Ramp(100), {{{T(0), T(80)}}, {{T(80), T(100)}}});
  EXPECT_EQ(parts.train.size(), 80u);
  EXPECT_EQ(parts.test.size(), 20u);
  EXPECT_LT(parts.train.samples().back().timestamp, parts.test.samples().front().timestamp);
}

TEST(SplitTest, OverlapIsRejected) {
  EXPECT_THROW(chronological_split(Ramp(100), {{{T(0), T(50)}}, {{T(40), T(60)}}}), Error);
}

TEST(SplitTest, MultiIntervalCountsMatchEnumeration) {
  const SplitSpec spec{{{T(0), T(20)}, {T(40), T(60)}}, {{T(80), T(100)}}};
  const auto parts = chronological_split(Ramp(100), spec);
  std::size_t train = 0, test = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const Minutes t = T(i);
    if ((t >= T(0) && t < T(20)) || (t >= T(40) && t < T(60))) ++train;
    if (t >= T(80) && t < T(100)) ++test;
  }
  EXPECT_EQ(parts.train.size(), train);
  EXPECT_EQ(parts.test.size(), test);
  EXPECT_EQ(train, 40u);
  EXPECT_EQ(test, 20u);
}

TEST(SplitTest, UnlabeledSamplesAreListed) {
  const Dataset d = apply_interval_labels(Ramp(10, false), {{{T(0), T(7)}, 0}});
  const std::string msg =
      ErrorText([&] { chronological_split(d, {{{T(0), T(5)}}, {{T(5), T(10)}}}); });
  EXPECT_NE(msg.find(format_timestamp(T(7))), std::string::npos) << msg;
  EXPECT_NE(msg.find(format_timestamp(T(9))), std::string::npos) << msg;
}

TEST(SplitTest, ChronologicalModeRejectsInterleaving) {
  const SplitSpec spec{{{T(0), T(10)}, {T(20), T(30)}}, {{T(10), T(20)}}, true};
  EXPECT_THROW(chronological_split(Ramp(30), spec), Error);
  SplitSpec relaxed = spec;
  relaxed.chronological = false;
  EXPECT_EQ(chronological_split(Ramp(30), relaxed).train.size(), 20u);
}

TEST(SplitTest, PartitionPropertyOnRandomSpecs) {
  Rng rng(17);
  const Dataset d = Ramp(60);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = static_cast<std::size_t>(slugwatch::testing::uniform_int(rng, 1, 58));
    const auto b = static_cast<std::size_t>(slugwatch::testing::uniform_int(rng, static_cast<std::int64_t>(a), 59));
    const auto lo = static_cast<std::size_t>(slugwatch::testing::uniform_int(rng, 0, static_cast<std::int64_t>(a) - 1));
    const auto hi = static_cast<std::size_t>(slugwatch::testing::uniform_int(rng, static_cast<std::int64_t>(b) + 1, 60));
    const SplitSpec spec{{{T(lo), T(a)}}, {{T(b), T(hi)}}};
    const auto parts = chronological_split(d, spec);
    std::set<Minutes> seen;
    for (const auto& s : parts.train.samples()) EXPECT_TRUE(seen.insert(s.timestamp).second);
    for (const auto& s : parts.test.samples()) EXPECT_TRUE(seen.insert(s.timestamp).second);
    std::set<Minutes> covered;
    for (std::size_t i = 0; i < 60; ++i) {
      if ((i >= lo && i < a) || (i >= b && i < hi)) covered.insert(T(i));
    }
    EXPECT_EQ(seen, covered);
  }
}

TEST(SplitTest, FractionalSplitBoundary) {
  const SplitSpec spec = slugwatch::fractional_split(Ramp(100), 0.8);
  const auto parts = chronological_split(Ramp(100), spec);
  EXPECT_EQ(parts.train.size(), 80u);
  EXPECT_EQ(parts.test.size(), 20u);
  EXPECT_THROW(slugwatch::fractional_split(Ramp(100), 1.0), Error);
}

TEST(SyntheticTest, SameSeedIsBitIdentical) {
  SyntheticConfig c;
  c.duration = 1500;
  EXPECT_EQ(export_csv_string(generate_synthetic(c).dataset),
            export_csv_string(generate_synthetic(c).dataset));
  SyntheticConfig other = c;
  other.seed = 8;
  EXPECT_NE(export_csv_string(generate_synthetic(c).dataset),
            export_csv_string(generate_synthetic(other).dataset));
}

TEST(SyntheticTest, ZeroRateMeansNoSlugs) {
  SyntheticConfig c;
  c.duration = 800;
  c.slug_episode_rate = 0;
  const auto r = generate_synthetic(c);
  for (int y : r.dataset.labels()) EXPECT_EQ(y, 0);
  EXPECT_TRUE(r.episodes.empty());
}

TEST(SyntheticTest, EpisodeCountsOverOneHundredSeeds) {
  double total = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    SyntheticConfig c;
    c.duration = 2000;
    c.slug_episode_rate = 5;
    c.seed = seed;
    const auto count = generate_synthetic(c).episodes.size();
    EXPECT_GE(count, 1u) << seed;
    EXPECT_LE(count, 20u) << seed;
    total += static_cast<double>(count);
  }
  EXPECT_NEAR(total / 100.0, 10.0, 1.5);
}

TEST(SyntheticTest, LabelsEqualUnionOfEpisodes) {
  for (std::uint64_t seed : {1u, 7u, 99u}) {
    SyntheticConfig c;
    c.seed = seed;
    const auto r = generate_synthetic(c);
    for (const auto& s : r.dataset.samples()) {
      bool inside = false;
      for (const auto& e : r.episodes) inside = inside || e.contains(s.timestamp);
      EXPECT_EQ(*s.label, inside ? 1 : 0);
    }
    for (std::size_t i = 1; i < r.episodes.size(); ++i) {
      EXPECT_LT(r.episodes[i - 1].end, r.episodes[i].start);
    }
  }
}

TEST(SyntheticTest, NoSingleFeatureThresholdSeparatesTheClasses) {
  const auto r = generate_synthetic(SyntheticConfig{});
  const auto& d = r.dataset;
  for (std::size_t f = 0; f < d.dimension(); ++f) {
    std::vector<std::pair<double, int>> col;
    for (const auto& s : d.samples()) col.push_back({s.features[f], *s.label});
    std::sort(col.begin(), col.end());
    std::size_t ones_left = 0, total_ones = 0;
    for (const auto& [v, y] : col) total_ones += static_cast<std::size_t>(y);
    std::size_t best_errors = std::min(total_ones, col.size() - total_ones);
    for (std::size_t i = 0; i < col.size(); ++i) {
      ones_left += static_cast<std::size_t>(col[i].second);
      const std::size_t left = i + 1;
      // slug above the cut, or slug below it
      const std::size_t above = ones_left + (col.size() - left - (total_ones - ones_left));
      const std::size_t below = (left - ones_left) + (total_ones - ones_left);
      best_errors = std::min({best_errors, above, below});
    }
    EXPECT_GT(best_errors, 0u) << d.feature_names()[f];
  }
}

TEST(SyntheticTest, RejectsInvalidConfigs) {
  SyntheticConfig c;
  c.duration = 10;
  c.episode_length_max = 20;
  EXPECT_THROW(generate_synthetic(c), Error);
  c = SyntheticConfig{};
  c.episode_length_min = 9;
  c.episode_length_max = 8;
  EXPECT_THROW(generate_synthetic(c), Error);
}

}  // namespace

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

#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "slugwatch/http.hpp"
#include "slugwatch/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace {

using ::nlohmann::json;
using ::slugwatch::Error;
using ::slugwatch::ErrorCode;
using ::slugwatch::HttpServer;
using ::slugwatch::Service;
using ::slugwatch::ServiceConfig;
using ::slugwatch::testing::TempDir;
using namespace std::chrono_literals;

struct Frame {
  std::uint64_t id = 0;
  std::string type;
  json data;
};

// Splits an SSE byte stream into frames as chunks arrive.
class SseParser {
 public:
  void feed(const char* data, std::size_t n) {
    buffer_.append(data, n);
    for (auto pos = buffer_.find("\n\n"); pos != std::string::npos; pos = buffer_.find("\n\n")) {
      parse(buffer_.substr(0, pos));
      buffer_.erase(0, pos + 2);
    }
  }
  const std::vector<Frame>& frames() const { return frames_; }

 private:
  void parse(const std::string& block) {
    Frame f;
    std::size_t start = 0;
    while (start < block.size()) {
      auto end = block.find('\n', start);
      if (end == std::string::npos) end = block.size();
      const std::string line = block.substr(start, end - start);
      if (line.rfind("id: ", 0) == 0) f.id = std::stoull(line.substr(4));
      if (line.rfind("event: ", 0) == 0) f.type = line.substr(7);
      if (line.rfind("data: ", 0) == 0) f.data = json::parse(line.substr(6));
      start = end + 1;
    }
    frames_.push_back(std::move(f));
  }

  std::string buffer_;
  std::vector<Frame> frames_;
};

class Harness {
 public:
  explicit Harness(std::size_t row_cap = 1000)
      : dir_("service"), service_(ServiceConfig{dir_.path(), row_cap}), server_(service_),
        client_("127.0.0.1", server_.port()) {
    client_.set_read_timeout(60, 0);
  }

  Service& service() { return service_; }
  httplib::Client& client() { return client_; }
  int port() const { return server_.port(); }

  httplib::Result post(const std::string& path, const json& body) {
    return client_.Post(path, body.dump(), "application/json");
  }

  json get_json(const std::string& path, int expected = 200) {
    auto res = client_.Get(path);
    EXPECT_TRUE(res) << path;
    if (!res) return {};
    EXPECT_EQ(res->status, expected) << path << ": " << res->body;
    return json::parse(res->body);
  }

  std::string upload(const slugwatch::Dataset& d) {
    auto res = client_.Post("/datasets", slugwatch::export_csv_string(d), "text/csv");
    EXPECT_TRUE(res && res->status == 201);
    return json::parse(res->body).at("id").get<std::string>();
  }

  // Submits and polls until the run finishes.
  json train(const json& body) {
    auto res = post("/train", body);
    EXPECT_TRUE(res && (res->status == 202)) << (res ? res->body : "no response");
    const std::string key = json::parse(res->body).at("key").get<std::string>();
    for (int i = 0; i < 6000; ++i) {
      json status = get_json("/runs/" + key);
      if (status.at("status") == "done" || status.at("status") == "failed") return status;
      std::this_thread::sleep_for(10ms);
    }
    ADD_FAILURE() << "run did not finish";
    return {};
  }

  // Reads a session stream until it ends or `limit` frames arrive.
  std::vector<Frame> stream(const std::string& id, const httplib::Headers& headers = {},
                            std::size_t limit = SIZE_MAX, const std::string& query = "") {
    SseParser parser;
    httplib::Client c("127.0.0.1", server_.port());
    c.set_read_timeout(60, 0);
    auto res = c.Get("/inference/sessions/" + id + "/stream" + query, headers,
                     [&](const char* data, std::size_t n) {
                       parser.feed(data, n);
                       return parser.frames().size() < limit;
                     });
    // 409 means another driver still holds the session; callers retry.
    if (res && res->status != 409) {
      EXPECT_EQ(res->status, 200);
    }
    return parser.frames();
  }

 private:
  TempDir dir_;
  Service service_;
  HttpServer server_;
  httplib::Client client_;
};

json WithoutVolatile(json snapshot) {
  snapshot.erase("created_at");
  snapshot.erase("model_file");
  return snapshot;
}

// Independent computation through the core modules.
struct Golden {
  slugwatch::ExperimentResult result;
  json timeline_rows = json::array();
};

Golden ComputeGolden(const slugwatch::Dataset& d, const json& body, std::size_t parameter) {
  const auto request = slugwatch::experiment_request_from_json(body, d);
  Golden g{slugwatch::run_experiment(d, request), json::array()};
  const auto rows = slugwatch::build_overlay(g.result.test, parameter,
                                             g.result.evaluation.scores.probabilities,
                                             g.result.snapshot.tau);
  for (const auto& r : rows) g.timeline_rows.push_back(slugwatch::to_json(r));
  return g;
}

void ExpectMatchesGolden(const Golden& g, const json& status, const json& timeline) {
  EXPECT_EQ(status.at("key"), g.result.snapshot.key);
  EXPECT_EQ(WithoutVolatile(status.at("snapshot")), WithoutVolatile(slugwatch::to_json(g.result.snapshot)));
  EXPECT_EQ(timeline.at("tau"), g.result.snapshot.tau);
  EXPECT_EQ(timeline.at("rows"), g.timeline_rows);
  EXPECT_EQ(timeline.at("counts"), slugwatch::to_json(g.result.snapshot.pointwise.counts));
}

TEST(ServiceTest, DirectCallsMatchCoreModules) {
  TempDir dir("direct");
  Service service(ServiceConfig{dir.path()});
  const auto synth = slugwatch::testing::small_synthetic();
  const std::string id = service.add_dataset(synth.dataset);
  const json body = slugwatch::testing::small_forest_body(id);
  const json submitted = service.submit_train(body);
  EXPECT_TRUE(submitted.at("submitted").get<bool>());
  const std::string key = submitted.at("key").get<std::string>();
  const json status = service.wait_for_run(key);
  ASSERT_EQ(status.at("status"), "done") << status.dump();
  const Golden g = ComputeGolden(synth.dataset, body, 4);
  ExpectMatchesGolden(g, status, service.timeline(key, "gas_flow_sum"));
}

TEST(ServiceTest, HttpResponsesMatchCoreModules) {
  Harness h;
  const auto synth = slugwatch::testing::small_synthetic();
  const std::string id = h.upload(synth.dataset);
  const json body = slugwatch::testing::small_forest_body(id);
  const json status = h.train(body);
  ASSERT_EQ(status.at("status"), "done") << status.dump();
  const std::string key = status.at("key").get<std::string>();
  // The upload went through CSV text, so compute the golden from the same bytes.
  const auto reparsed = slugwatch::ingest_csv_string(slugwatch::export_csv_string(synth.dataset));
  const Golden g = ComputeGolden(reparsed, body, 1);
  ExpectMatchesGolden(g, status, h.get_json("/runs/" + key + "/timeline?parameter=outlet_pressure"));
  EXPECT_EQ(h.get_json("/snapshots/" + key), status.at("snapshot"));
  EXPECT_EQ(h.get_json("/runs/" + key + "/timeline").at("parameter"), "inlet_pressure");
  h.get_json("/runs/" + key + "/timeline?parameter=nope", 400);
}

TEST(ServiceTest, RepeatedTrainIsACacheHit) {
  Harness h;
  const std::string id = h.upload(slugwatch::testing::separable_dataset());
  const json body = slugwatch::testing::separable_train_body(id);
  const json first = h.train(body);
  ASSERT_EQ(first.at("status"), "done");
  auto res = h.post("/train", body);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 202);
  const json again = json::parse(res->body);
  EXPECT_EQ(again.at("key"), first.at("key"));
  EXPECT_FALSE(again.at("submitted").get<bool>());
  EXPECT_TRUE(again.at("cache_hit").get<bool>());
  EXPECT_EQ(h.get_json("/snapshots").size(), 1u);

  // Same key over different data is refused.
  auto other = slugwatch::testing::separable_dataset();
  std::vector<slugwatch::Sample> rows = other.samples();
  rows[3].features[1] += 1.0;
  const std::string other_id = h.upload(slugwatch::Dataset::create(other.feature_names(), rows));
  auto conflict = h.post("/train", slugwatch::testing::separable_train_body(other_id));
  ASSERT_TRUE(conflict);
  EXPECT_EQ(conflict->status, 409);
  EXPECT_EQ(json::parse(conflict->body).at("error").at("code"), "conflict");
}

TEST(ServiceTest, ErrorsMapToStatusCodes) {
  Harness h;
  h.get_json("/runs/" + std::string(64, 'a'), 404);
  h.get_json("/datasets/ds-9", 404);
  h.get_json("/inference/sessions/session-1", 404);
  auto res = h.client().Post("/datasets", "timestamp,x,label\n0,1,0\n5,zz,1\n", "text/csv");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  const json err = json::parse(res->body).at("error");
  EXPECT_FALSE(err.at("issues").empty());
  auto bad_json = h.client().Post("/train", "{", "application/json");
  ASSERT_TRUE(bad_json);
  EXPECT_EQ(bad_json->status, 400);
  auto missing = h.post("/train", json{{"dataset_id", "ds-4"}});
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(h.get_json("/snapshots/compare?keys=" + std::string(64, 'b'), 400).at("error").at("code"),
            "invalid_argument");
}

TEST(ServiceTest, PreviewAndLabelLineage) {
  Harness h(5);
  const std::string id = h.upload(slugwatch::testing::separable_dataset(40));
  const json d = h.get_json("/datasets/" + id);
  EXPECT_EQ(d.at("rows"), 40);
  EXPECT_EQ(d.at("sampling_period"), 5);
  EXPECT_TRUE(d.at("lineage").at("parent").is_null());

  const json p = h.get_json("/datasets/" + id + "/preview?from=2024-01-01T00:45&to=2024-01-01T01:30");
  EXPECT_EQ(p.at("window_rows"), 9);
  EXPECT_EQ(p.at("rows").size(), 5u);
  EXPECT_TRUE(p.at("truncated").get<bool>());
  EXPECT_EQ(p.at("rows")[0].at("timestamp"), "2024-01-01T00:45");
  EXPECT_EQ(p.at("summary").at("slug"), 8);
  EXPECT_EQ(p.at("summary").at("non_slug"), 1);
  h.get_json("/datasets/" + id + "/preview?from=2024-01-01T01:30&to=2024-01-01T00:45", 400);

  const json edits = json::array({{{"start", "2024-01-01T00:50"}, {"end", "2024-01-01T01:00"}, {"label", 0}}});
  auto res = h.post("/datasets/" + id + "/labels", edits);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 201) << res->body;
  const json v2 = json::parse(res->body);
  EXPECT_EQ(v2.at("lineage").at("parent"), id);
  ASSERT_EQ(v2.at("lineage").at("edits").size(), 1u);
  EXPECT_EQ(v2.at("lineage").at("edits")[0].at("start"), slugwatch::testing::kFixtureStart + 50);
  EXPECT_EQ(v2.at("lineage").at("edits")[0].at("end"), slugwatch::testing::kFixtureStart + 60);
  EXPECT_NE(v2.at("fingerprint"), d.at("fingerprint"));
  const json p2 = h.get_json("/datasets/" + v2.at("id").get<std::string>() +
                             "/preview?from=2024-01-01T00:50&to=2024-01-01T01:00");
  ASSERT_EQ(p2.at("rows").size(), 2u);
  for (const auto& row : p2.at("rows")) EXPECT_EQ(row.at("label"), 0);
  // The parent version is unchanged.
  EXPECT_EQ(h.get_json("/datasets/" + id).at("fingerprint"), d.at("fingerprint"));
  EXPECT_EQ(h.get_json("/datasets").size(), 2u);
  auto csv = h.client().Get("/datasets/" + id + "/csv");
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->body, slugwatch::export_csv_string(slugwatch::testing::separable_dataset(40)));
}

class SessionTest : public ::testing::Test {
 protected:
  void SetUp() override {
    train_id_ = h_.upload(slugwatch::testing::separable_dataset());
    const json status = h_.train(slugwatch::testing::separable_train_body(train_id_));
    ASSERT_EQ(status.at("status"), "done");
    key_ = status.at("key").get<std::string>();
    replay_id_ = h_.upload(slugwatch::testing::kappa3_dataset());
    long_id_ = h_.upload(slugwatch::testing::separable_dataset(150));
  }

  std::string create(const std::string& dataset_id, const json& speed, const json& alert) {
    auto res = h_.post("/inference/sessions",
                       {{"run_key", key_}, {"dataset_id", dataset_id}, {"speed", speed}, {"alert", alert}});
    EXPECT_TRUE(res && res->status == 201) << (res ? res->body : "");
    return json::parse(res->body).at("id").get<std::string>();
  }

  // Event log of an identical session replayed without a transport.
  std::vector<slugwatch::SessionEvent> reference(const std::string& dataset_id, const json& alert) {
    const json s = h_.service().create_session({{"run_key", key_}, {"dataset_id", dataset_id}, {"alert", alert}});
    auto session = h_.service().session(s.at("id").get<std::string>());
    session->run_to_end();
    return session->events_from(0);
  }

  static void ExpectSameLog(const std::vector<Frame>& frames,
                            const std::vector<slugwatch::SessionEvent>& want) {
    ASSERT_EQ(frames.size(), want.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
      EXPECT_EQ(frames[i].id, i);
      EXPECT_EQ(frames[i].type, want[i].type);
      EXPECT_EQ(frames[i].data, want[i].data) << i;
    }
  }

  Harness h_;
  std::string train_id_, replay_id_, long_id_, key_;
};

TEST_F(SessionTest, KappaThreeFixtureRaisesOnce) {
  const json alert = {{"mode", "persistence"}, {"delta_min", 15}, {"delta_s", 5}};
  const std::string id = create(replay_id_, "max", alert);
  const auto frames = h_.stream(id);
  std::vector<int> yhat;
  int raises = 0;
  for (const auto& f : frames) {
    if (f.type == "step") yhat.push_back(f.data.at("yhat").get<int>());
    if (f.type == "alert-raise") {
      ++raises;
      EXPECT_EQ(f.data.at("index"), 5);
      EXPECT_EQ(f.data.at("timestamp"), "2024-01-01T00:25");
    }
  }
  EXPECT_EQ(yhat, (std::vector<int>{1, 1, 0, 1, 1, 1}));
  EXPECT_EQ(raises, 1);
  ASSERT_FALSE(frames.empty());
  EXPECT_EQ(frames.back().type, "end");
  const json status = h_.get_json("/inference/sessions/" + id);
  EXPECT_TRUE(status.at("finished").get<bool>());
  EXPECT_EQ(status.at("alert").at("kappa"), 3);
  EXPECT_EQ(status.at("alert_events").size(), 1u);
}

TEST_F(SessionTest, ThrottledAndMaxSpeedEmitTheSamePayloads) {
  const json alert = {{"kappa", 2}, {"cooldown", 3}};
  const auto want = reference(long_id_, alert);
  ExpectSameLog(h_.stream(create(long_id_, "max", alert)), want);
  const auto t0 = std::chrono::steady_clock::now();
  ExpectSameLog(h_.stream(create(long_id_, 1000, alert)), want);
  EXPECT_GE(std::chrono::steady_clock::now() - t0, 140ms);
}

TEST_F(SessionTest, ReconnectResumesWithoutLossOrDuplication) {
  const json alert = {{"mode", "majority"}, {"window", 4}, {"votes", 3}};
  const auto want = reference(long_id_, alert);
  const std::string id = create(long_id_, 500, alert);
  std::vector<Frame> all = h_.stream(id, {}, 25);
  ASSERT_EQ(all.size(), 25u);
  // The server notices the dropped client on its next write; retry until
  // the driver slot frees up.
  std::vector<Frame> rest;
  for (int attempt = 0; attempt < 100 && rest.empty(); ++attempt) {
    rest = h_.stream(id, {{"Last-Event-ID", std::to_string(all.back().id)}}, 40);
    if (rest.empty()) std::this_thread::sleep_for(20ms);
  }
  ASSERT_FALSE(rest.empty());
  all.insert(all.end(), rest.begin(), rest.end());
  std::vector<Frame> tail;
  for (int attempt = 0; attempt < 100 && tail.empty(); ++attempt) {
    tail = h_.stream(id, {}, SIZE_MAX, "?from=" + std::to_string(all.back().id + 1));
    if (tail.empty()) std::this_thread::sleep_for(20ms);
  }
  all.insert(all.end(), tail.begin(), tail.end());
  ExpectSameLog(all, want);
}

TEST_F(SessionTest, PauseStopsTheCursorAndResumeContinues) {
  const json alert = {{"kappa", 3}};
  const auto want = reference(long_id_, alert);
  const std::string id = create(long_id_, 200, alert);
  auto session = h_.service().session(id);
  std::vector<Frame> frames;
  std::thread reader([&] { frames = h_.stream(id); });
  while (session->log_size() < 20) std::this_thread::sleep_for(5ms);
  auto res = h_.client().Post("/inference/sessions/" + id + "/pause");
  ASSERT_TRUE(res && res->status == 200);
  EXPECT_TRUE(json::parse(res->body).at("paused").get<bool>());
  std::this_thread::sleep_for(50ms);
  const auto frozen = session->log_size();
  std::this_thread::sleep_for(300ms);
  EXPECT_EQ(session->log_size(), frozen);
  EXPECT_FALSE(session->finished());
  res = h_.client().Post("/inference/sessions/" + id + "/resume");
  ASSERT_TRUE(res && res->status == 200);
  reader.join();
  ExpectSameLog(frames, want);
}

TEST_F(SessionTest, FinishedSessionEndsImmediately) {
  const std::string id = create(replay_id_, "max", json::object());
  const auto first = h_.stream(id);
  ASSERT_FALSE(first.empty());
  const auto again = h_.stream(id);
  ASSERT_EQ(again.size(), 1u);
  EXPECT_EQ(again[0].type, "end");
  EXPECT_EQ(again[0].id, first.back().id);
}

TEST_F(SessionTest, SecondStreamIsRefused) {
  const std::string id = create(long_id_, 20, json::object());
  std::atomic<bool> started{false};
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", h_.port());
    c.Get("/inference/sessions/" + id + "/stream", [&](const char*, std::size_t) {
      started = true;
      return false;
    });
  });
  while (!started) std::this_thread::sleep_for(5ms);
  auto res = h_.client().Get("/inference/sessions/" + id + "/stream?from=0");
  // Either the first driver still holds the slot, or it already dropped.
  ASSERT_TRUE(res);
  EXPECT_TRUE(res->status == 409 || res->status == 200);
  reader.join();
}

TEST_F(SessionTest, RejectsBadSessionRequests) {
  auto res = h_.post("/inference/sessions", {{"run_key", key_}, {"dataset_id", replay_id_}, {"speed", -1}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = h_.post("/inference/sessions",
                {{"run_key", key_}, {"dataset_id", replay_id_}, {"alert", {{"delta_min", 12}}}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = h_.post("/inference/sessions", {{"run_key", std::string(64, 'c')}, {"dataset_id", replay_id_}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
}

TEST(SseTest, Framing) {
  const slugwatch::SessionEvent e{3, "end", {{"steps", 6}}};
  EXPECT_EQ(slugwatch::format_sse(e), "id: 3\nevent: end\ndata: {\"steps\":6}\n\n");
}

}  // namespace

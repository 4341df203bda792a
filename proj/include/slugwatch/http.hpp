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

#ifndef SLUGWATCH_HTTP_HPP_
#define SLUGWATCH_HTTP_HPP_

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "slugwatch/service.hpp"

namespace slugwatch {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kIntegrity:
    case ErrorCode::kIo: return 500;
  }
  return 500;
}

namespace http_detail {

inline void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, std::string_view code,
                       const std::string& message, const std::vector<std::string>& issues = {}) {
  nlohmann::json err = {{"code", code}, {"message", message}};
  if (!issues.empty()) err["issues"] = issues;
  send_json(res, {{"error", err}}, status);
}

/// Runs `fn`, mapping library errors onto HTTP statuses.
inline void guarded(httplib::Response& res, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const IngestError& e) {
    send_error(res, 400, to_string(e.code()), e.what(), e.issues());
  } catch (const Error& e) {
    send_error(res, http_status(e.code()), to_string(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, "invalid_argument", std::string("bad request body: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

inline nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("request body is not JSON: ") + e.what());
  }
}

inline std::optional<Minutes> time_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  const std::string v = req.get_param_value(name);
  auto t = parse_timestamp(v);
  if (!t) throw invalid_argument(std::string("bad '") + name + "' timestamp '" + v + "'");
  return t;
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// CSV upload: raw CSV with schema in the query string, or JSON
/// {"csv": ..., "schema": {...}}.
inline nlohmann::json upload(Service& service, const httplib::Request& req) {
  const std::string type = req.get_header_value("Content-Type");
  if (type.rfind("application/json", 0) == 0) {
    const nlohmann::json body = parse_body(req);
    return service.upload_dataset(body.at("csv").get<std::string>(),
                                  csv_schema_from_json(body.value("schema", nlohmann::json())));
  }
  CsvSchema schema;
  if (req.has_param("timestamp_column"))
    schema.timestamp_column = req.get_param_value("timestamp_column");
  if (req.has_param("label_column")) schema.label_column = req.get_param_value("label_column");
  if (req.has_param("feature_columns"))
    schema.feature_columns = split_commas(req.get_param_value("feature_columns"));
  if (req.has_param("sampling_period")) {
    try {
      schema.sampling_period = std::stoll(req.get_param_value("sampling_period"));
    } catch (const std::exception&) {
      throw invalid_argument("sampling_period must be an integer");
    }
  }
  return service.upload_dataset(req.body, schema);
}

/// Drives one session's stream. Starts at the Last-Event-ID successor, the
/// "from" query parameter, or the live end of the log.
inline void stream_session(const std::shared_ptr<InferenceSession>& session,
                           const httplib::Request& req, httplib::Response& res) {
  std::size_t next = session->log_size();
  if (req.has_header("Last-Event-ID")) {
    next = std::stoull(req.get_header_value("Last-Event-ID")) + 1;
  } else if (req.has_param("from")) {
    next = std::stoull(req.get_param_value("from"));
  }
  if (!session->attach()) {
    throw Error(ErrorCode::kConflict, "session " + session->id() + " already has a stream");
  }
  auto deadline = std::make_shared<std::chrono::steady_clock::time_point>(
      std::chrono::steady_clock::now());
  res.set_header("Cache-Control", "no-cache");
  res.set_chunked_content_provider(
      "text/event-stream",
      [session, next, deadline](std::size_t, httplib::DataSink& sink) mutable {
        if (auto e = session->event_at(next)) {
          const std::string frame = format_sse(*e);
          if (!sink.write(frame.data(), frame.size())) return false;
          ++next;
          if (e->type == "end") sink.done();
          return true;
        }
        if (session->finished()) {
          // Already past the end: repeat the terminal marker only.
          const std::string frame = format_sse(*session->event_at(session->log_size() - 1));
          if (!sink.write(frame.data(), frame.size())) return false;
          sink.done();
          return true;
        }
        if (session->wait_while_paused(std::chrono::milliseconds(100))) return true;
        if (auto speed = session->speed()) {
          const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
              std::chrono::duration<double>(1.0 / *speed));
          *deadline = std::max(*deadline, std::chrono::steady_clock::now() - period) + period;
          if (!session->sleep_until(*deadline)) return true;
        }
        session->advance();
        return true;
      },
      [session](bool) { session->detach(); });
}

}  // namespace http_detail

/// Registers every endpoint of `service` on `server`.
inline void bind_routes(httplib::Server& server, Service& service) {
  using http_detail::guarded;
  using http_detail::send_json;
  using Req = httplib::Request;
  using Res = httplib::Response;

  server.Post("/datasets", [&](const Req& req, Res& res) {
    guarded(res, [&] { send_json(res, http_detail::upload(service, req), 201); });
  });
  server.Get("/datasets", [&](const Req&, Res& res) {
    guarded(res, [&] { send_json(res, service.list_datasets()); });
  });
  server.Get("/datasets/:id", [&](const Req& req, Res& res) {
    guarded(res, [&] { send_json(res, service.describe_dataset(req.path_params.at("id"))); });
  });
  server.Get("/datasets/:id/preview", [&](const Req& req, Res& res) {
    guarded(res, [&] {
      send_json(res, service.preview(req.path_params.at("id"), http_detail::time_param(req, "from"),
                                     http_detail::time_param(req, "to")));
    });
  });
  server.Get("/datasets/:id/csv", [&](const Req& req, Res& res) {
    guarded(res, [&] {
      res.set_content(export_csv_string(service.dataset(req.path_params.at("id"))), "text/csv");
    });
  });
  server.Post("/datasets/:id/labels", [&](const Req& req, Res& res) {
    guarded(res, [&] {
      const nlohmann::json body = http_detail::parse_body(req);
      const nlohmann::json& edits = body.is_array() ? body : body.at("edits");
      send_json(res, service.apply_labels(req.path_params.at("id"), label_edits_from_json(edits)),
                201);
    });
  });

  server.Post("/train", [&](const Req& req, Res& res) {
    guarded(res, [&] { send_json(res, service.submit_train(http_detail::parse_body(req)), 202); });
  });
  server.Get("/runs/:key", [&](const Req& req, Res& res) {
    guarded(res, [&] { send_json(res, service.run_status(req.path_params.at("key"))); });
  });
  server.Get("/runs/:key/timeline", [&](const Req& req, Res& res) {
    guarded(res, [&] {
      send_json(res, service.timeline(req.path_params.at("key"),
                                      req.has_param("parameter") ? req.get_param_value("parameter")
                                                                 : std::string()));
    });
  });

  server.Get("/snapshots", [&](const Req&, Res& res) {
    guarded(res, [&] { send_json(res, service.list_snapshots()); });
  });
  server.Get("/snapshots/compare", [&](const Req& req, Res& res) {
    guarded(res, [&] {
      send_json(res, service.compare(http_detail::split_commas(req.get_param_value("keys"))));
    });
  });
  server.Get("/snapshots/:key", [&](const Req& req, Res& res) {
    guarded(res, [&] { send_json(res, service.get_snapshot(req.path_params.at("key"))); });
  });

  server.Post("/inference/sessions", [&](const Req& req, Res& res) {
    guarded(res, [&] { send_json(res, service.create_session(http_detail::parse_body(req)), 201); });
  });
  server.Get("/inference/sessions/:id", [&](const Req& req, Res& res) {
    guarded(res, [&] { send_json(res, service.session(req.path_params.at("id"))->status()); });
  });
  server.Get("/inference/sessions/:id/stream", [&](const Req& req, Res& res) {
    guarded(res, [&] {
      http_detail::stream_session(service.session(req.path_params.at("id")), req, res);
    });
  });
  server.Post("/inference/sessions/:id/pause", [&](const Req& req, Res& res) {
    guarded(res, [&] {
      auto s = service.session(req.path_params.at("id"));
      s->set_paused(true);
      send_json(res, s->status());
    });
  });
  server.Post("/inference/sessions/:id/resume", [&](const Req& req, Res& res) {
    guarded(res, [&] {
      auto s = service.session(req.path_params.at("id"));
      s->set_paused(false);
      send_json(res, s->status());
    });
  });
}

/// Server bound to an ephemeral or fixed port, listening on a background
/// thread until destroyed.
class HttpServer {
 public:
  HttpServer(Service& service, const std::string& host = "127.0.0.1", int port = 0) {
    bind_routes(server_, service);
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~HttpServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  int port() const { return port_; }
  httplib::Server& server() { return server_; }

 private:
  httplib::Server server_;
  int port_ = -1;
  std::thread thread_;
};

}  // namespace slugwatch

#endif  // SLUGWATCH_HTTP_HPP_

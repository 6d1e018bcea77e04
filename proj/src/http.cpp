// Copyright 2026 The convreco Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <iostream>

#include "convreco/service.hpp"
#include "httplib.h"

namespace convreco {

namespace {

constexpr char kJson[] = "application/json";

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  send_json(res, status, json{{"code", code}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw ServiceError(400, "bad_request", "body must be a JSON object");
  }
  return body;
}

std::string require_string(const json& body, const char* field) {
  if (!body.contains(field) || !body.at(field).is_string()) {
    throw ServiceError(400, "bad_request",
                       std::string("field \"") + field + "\" must be a string");
  }
  return body.at(field).get<std::string>();
}

// Wraps a handler so service errors map to {code, message} responses.
template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req,
                                  httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.code(), e.what());
    } catch (const std::exception& e) {
      std::cerr << req.method << " " << req.path << ": " << e.what() << "\n";
      send_error(res, 500, "internal", e.what());
    }
  };
}

std::string sse_frame(const AgentReply& r) {
  return "id: " + std::to_string(r.turn) + "\nevent: reply\ndata: " +
         json(r).dump() + "\n\n";
}

}  // namespace

struct HttpServer::Impl {
  ChatService& service;
  httplib::Server server;
  std::atomic<bool> stopping{false};

  explicit Impl(ChatService& s) : service(s) {}
};

HttpServer::HttpServer(ChatService& service)
    : impl_(std::make_unique<Impl>(service)) {
  ChatService& svc = service;
  httplib::Server& srv = impl_->server;
  Impl* impl = impl_.get();

  srv.Post("/api/v1/sessions", guarded([&svc](const httplib::Request& req,
                                               httplib::Response& res) {
    json body = parse_body(req);
    const std::string id = svc.create_session(require_string(body, "user_id"));
    send_json(res, 201, json{{"session_id", id}});
  }));

  srv.Post("/api/v1/sessions/:id/messages",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             json body = parse_body(req);
             AgentReply reply = svc.handle_message(req.path_params.at("id"),
                                                   require_string(body, "text"));
             send_json(res, 200, reply);
           }));

  srv.Post("/api/v1/sessions/:id/feedback",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             json body = parse_body(req);
             send_json(res, 200,
                       svc.feedback(req.path_params.at("id"),
                                    require_string(body, "product_id"),
                                    require_string(body, "outcome")));
           }));

  srv.Get("/api/v1/sessions/:id/stream",
          guarded([&svc, impl](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.path_params.at("id");
            svc.state(id);  // 404 before the stream starts
            int after = 0;
            std::string last = req.get_header_value("Last-Event-ID");
            if (last.empty() && req.has_param("after")) last = req.get_param_value("after");
            if (!last.empty()) {
              try {
                after = std::stoi(last);
              } catch (const std::exception&) {
                throw ServiceError(400, "bad_request", "invalid Last-Event-ID");
              }
            }
            auto cursor = std::make_shared<int>(after);
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "text/event-stream",
                [&svc, impl, id, cursor](size_t, httplib::DataSink& sink) {
                  if (impl->stopping) {
                    sink.done();
                    return true;
                  }
                  bool closed = false;
                  auto replies = svc.wait_replies(
                      id, *cursor, std::chrono::milliseconds(500), &closed);
                  for (const auto& r : replies) {
                    const std::string frame = sse_frame(r);
                    if (!sink.write(frame.data(), frame.size())) return false;
                    *cursor = r.turn;
                  }
                  if (replies.empty() && !closed) {
                    static const std::string kPing = ": keepalive\n\n";
                    if (!sink.write(kPing.data(), kPing.size())) return false;
                  }
                  if (closed) sink.done();
                  return true;
                });
          }));

  srv.Get("/api/v1/sessions/:id",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, svc.session_json(req.path_params.at("id")));
          }));

  srv.Get("/api/v1/catalog",
          guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, svc.catalog_json());
          }));

  srv.Get("/api/v1/healthz",
          guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, svc.health_json());
          }));

  srv.Post("/api/v1/reload",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             json body = parse_body(req);
             const std::string path = require_string(body, "bundle");
             ModelBundle bundle;
             try {
               bundle = load_bundle(path);
             } catch (const Error& e) {
               throw ServiceError(400, "bad_bundle", e.what());
             }
             svc.reload(std::move(bundle));
             send_json(res, 200, svc.health_json());
           }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "not_found" : "error",
                 httplib::status_message(res.status));
    }
  });
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int HttpServer::bind_to_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  impl_->stopping = true;
  if (impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace convreco

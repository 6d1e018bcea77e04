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

// Live chat sessions: the per-turn loop behind the HTTP API, the streaming
// channel and the terminal REPL.

#ifndef CONVRECO_SERVICE_HPP_
#define CONVRECO_SERVICE_HPP_

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "convreco/core.hpp"
#include "convreco/engine.hpp"
#include "convreco/pipeline.hpp"

namespace convreco {

// Errors carrying an HTTP status and a stable code.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : Error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct RecommendationView {
  std::string product_id;
  std::string name;
  double price = 0.0;
  double score = 0.0;
};

struct AgentReply {
  std::string session_id;
  // User turn this reply answers; consecutive within a session.
  int turn = 0;
  std::string text;
  MachineActKind machine_act = MachineActKind::kFallback;
  std::vector<RecommendationView> recommendations;
  std::map<std::string, std::string> filled;
  std::vector<std::string> missing;
  std::optional<Order> order;
  bool closed = false;
};

void to_json(json& j, const AgentReply& r);

// Broken reply invariants: recommendations present iff the act is recommend,
// and every recommended product is known, unrejected and consistent with the
// filled required slots.
std::vector<std::string> reply_violations(const AgentReply& reply,
                                          const DialogueState& state,
                                          const Catalog& catalog,
                                          const SlotSchema& schema);

// One entry of a session's append-only log.
struct SessionEvent {
  enum class Type { kCreated, kUser, kMachine, kFeedback, kClosed };
  Type type = Type::kCreated;
  int64_t time = 0;
  std::string text;
  std::optional<UserAct> user_act;
  std::optional<MachineAct> machine_act;
  std::string template_id;
  std::string user_id;     // kCreated
  std::string product_id;  // kFeedback
  std::string outcome;     // kFeedback
};

void to_json(json& j, const SessionEvent& e);
void from_json(const json& j, SessionEvent& e);
void to_json(json& j, const UserAct& a);
void from_json(const json& j, UserAct& a);

// Folds a log into the dialogue state it records.
DialogueState replay_events(std::span<const SessionEvent> events,
                            const SlotSchema& schema);
std::vector<SessionEvent> load_event_log(const std::string& path);

struct ServiceOptions {
  // When set, each session appends its events to <log_dir>/<id>.jsonl.
  std::string log_dir;
  // When set, a bundle with live counters is saved after every
  // `snapshot_every` closed conversations.
  std::string snapshot_path;
  size_t snapshot_every = 50;
};

class ChatService {
 public:
  explicit ChatService(ModelBundle bundle, ServiceOptions options = {});

  // Returns the new session id (128 random bits, hex).
  std::string create_session(const std::string& user_id);

  // Runs one turn. ServiceError 404 for unknown ids, 409 once closed.
  AgentReply handle_message(const std::string& session_id, const std::string& text);

  // Accept/reject signal from the client; updates the live factor model.
  json feedback(const std::string& session_id, const std::string& product_id,
                const std::string& outcome);

  json session_json(const std::string& session_id) const;
  std::vector<SessionEvent> events(const std::string& session_id) const;
  DialogueState state(const std::string& session_id) const;

  // Replies with turn > `after`, blocking up to `timeout` for a new one.
  // `closed` reports whether the session is closed and fully delivered.
  std::vector<AgentReply> wait_replies(const std::string& session_id, int after,
                                       std::chrono::milliseconds timeout,
                                       bool* closed) const;

  json catalog_json() const;
  json health_json() const;

  // Swaps in a new model snapshot; sessions keep their state.
  void reload(ModelBundle bundle);

  // The current bundle with live NLG counters and factors.
  ModelBundle export_bundle() const;

 private:
  struct Session;
  struct Snapshot;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::shared_ptr<const Snapshot> snapshot() const;
  void append(Session& s, SessionEvent e);
  void credit_templates(const std::vector<std::string>& ids, bool success);
  void conversation_closed();

  ServiceOptions options_;
  mutable std::mutex model_mu_;
  std::shared_ptr<const Snapshot> snapshot_;
  ModelBundle base_;
  // Live state shared across sessions.
  mutable std::mutex live_mu_;
  FactorModel live_factors_;
  std::vector<Template> live_templates_;
  size_t closed_since_snapshot_ = 0;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

// HTTP front end over a ChatService.
class HttpServer {
 public:
  explicit HttpServer(ChatService& service);
  ~HttpServer();

  // Blocking.
  bool listen(const std::string& host, int port);
  // Binds to an ephemeral port and returns it; then call listen_after_bind.
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace convreco

#endif  // CONVRECO_SERVICE_HPP_

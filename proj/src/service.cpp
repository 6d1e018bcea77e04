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

#include "convreco/service.hpp"

#include <openssl/rand.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace convreco {

namespace {

int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string random_session_id() {
  unsigned char bytes[16];
  if (RAND_bytes(bytes, sizeof(bytes)) != 1) {
    throw Error("could not draw random session id");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

const char* event_type_name(SessionEvent::Type t) {
  switch (t) {
    case SessionEvent::Type::kCreated: return "created";
    case SessionEvent::Type::kUser: return "user";
    case SessionEvent::Type::kMachine: return "machine";
    case SessionEvent::Type::kFeedback: return "feedback";
    case SessionEvent::Type::kClosed: return "closed";
  }
  return "unknown";
}

ServiceError not_found(const std::string& id) {
  return ServiceError(404, "not_found", "unknown session " + id);
}

}  // namespace

void to_json(json& j, const AgentReply& r) {
  json recs = json::array();
  for (const auto& v : r.recommendations) {
    recs.push_back(json{{"product_id", v.product_id},
                        {"name", v.name},
                        {"price", v.price},
                        {"score", v.score}});
  }
  j = json{{"session_id", r.session_id},
           {"turn", r.turn},
           {"text", r.text},
           {"machine_act", to_string(r.machine_act)},
           {"recommendations", recs},
           {"state_summary", {{"filled", r.filled}, {"missing", r.missing}}},
           {"closed", r.closed}};
  j["order"] = r.order ? json(*r.order) : json(nullptr);
}

std::vector<std::string> reply_violations(const AgentReply& reply,
                                          const DialogueState& state,
                                          const Catalog& catalog,
                                          const SlotSchema& schema) {
  std::vector<std::string> out;
  const bool is_recommend = reply.machine_act == MachineActKind::kRecommend;
  if (is_recommend != !reply.recommendations.empty()) {
    out.push_back("recommendations must be present exactly for recommend");
  }
  const auto constraints = filled_constraints(state, schema, true);
  for (const auto& r : reply.recommendations) {
    const Product* p = catalog.find(r.product_id);
    if (p == nullptr) {
      out.push_back("unknown product " + r.product_id);
      continue;
    }
    if (state.rejected_items.count(r.product_id) > 0) {
      out.push_back("recommended rejected product " + r.product_id);
    }
    if (!satisfies(*p, constraints)) {
      out.push_back("recommended product " + r.product_id +
                    " violates filled constraints");
    }
  }
  if (reply.order && reply.machine_act != MachineActKind::kPlaceOrder) {
    out.push_back("order attached to a non-order reply");
  }
  for (const auto& v : state.violations(schema)) out.push_back("state: " + v);
  return out;
}

void to_json(json& j, const UserAct& a) {
  j = json{{"kind", to_string(a.kind)}, {"slots", a.slots}};
  j["item"] = a.item ? json(*a.item) : json(nullptr);
}

void from_json(const json& j, UserAct& a) {
  auto kind = parse_user_act(j.at("kind").get<std::string>());
  if (!kind) throw Error("unknown user act " + j.at("kind").dump());
  a.kind = *kind;
  a.slots = j.at("slots").get<std::vector<SlotValue>>();
  a.item.reset();
  if (j.contains("item") && !j.at("item").is_null()) {
    a.item = j.at("item").get<std::string>();
  }
}

void to_json(json& j, const SessionEvent& e) {
  j = json{{"type", event_type_name(e.type)}, {"time", e.time}};
  switch (e.type) {
    case SessionEvent::Type::kCreated:
      j["user_id"] = e.user_id;
      break;
    case SessionEvent::Type::kUser:
      j["text"] = e.text;
      j["act"] = *e.user_act;
      break;
    case SessionEvent::Type::kMachine:
      j["text"] = e.text;
      j["act"] = *e.machine_act;
      j["template"] = e.template_id;
      break;
    case SessionEvent::Type::kFeedback:
      j["product_id"] = e.product_id;
      j["outcome"] = e.outcome;
      break;
    case SessionEvent::Type::kClosed:
      break;
  }
}

void from_json(const json& j, SessionEvent& e) {
  const std::string type = j.at("type").get<std::string>();
  e = SessionEvent{};
  e.time = j.value("time", int64_t{0});
  if (type == "created") {
    e.type = SessionEvent::Type::kCreated;
    e.user_id = j.at("user_id").get<std::string>();
  } else if (type == "user") {
    e.type = SessionEvent::Type::kUser;
    e.text = j.at("text").get<std::string>();
    e.user_act = j.at("act").get<UserAct>();
  } else if (type == "machine") {
    e.type = SessionEvent::Type::kMachine;
    e.text = j.at("text").get<std::string>();
    e.machine_act = j.at("act").get<MachineAct>();
    e.template_id = j.value("template", "");
  } else if (type == "feedback") {
    e.type = SessionEvent::Type::kFeedback;
    e.product_id = j.at("product_id").get<std::string>();
    e.outcome = j.at("outcome").get<std::string>();
  } else if (type == "closed") {
    e.type = SessionEvent::Type::kClosed;
  } else {
    throw Error("unknown event type " + type);
  }
}

DialogueState replay_events(std::span<const SessionEvent> events,
                            const SlotSchema& schema) {
  DialogueState state;
  for (const auto& e : events) {
    if (e.type == SessionEvent::Type::kUser) {
      state = update_state(state, *e.user_act, schema);
    } else if (e.type == SessionEvent::Type::kMachine) {
      state = apply_machine_act(state, *e.machine_act, schema);
    }
  }
  return state;
}

std::vector<SessionEvent> load_event_log(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<SessionEvent> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<SessionEvent>());
    } catch (const std::exception& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ChatService.

struct ChatService::Snapshot {
  ModelBundle bundle;
};

struct ChatService::Session {
  std::string id;
  std::string user_id;
  int64_t created_at = 0;
  int64_t updated_at = 0;

  mutable std::mutex mu;
  mutable std::condition_variable cv;
  DialogueState state;
  std::vector<Utterance> transcript;
  std::vector<SessionEvent> events;
  std::vector<AgentReply> replies;
  std::vector<std::string> template_ids;
  bool closed = false;
  RandomSource rng{0};
};

ChatService::ChatService(ModelBundle bundle, ServiceOptions options)
    : options_(std::move(options)) {
  if (!options_.log_dir.empty()) {
    std::filesystem::create_directories(options_.log_dir);
  }
  reload(std::move(bundle));
}

void ChatService::reload(ModelBundle bundle) {
  auto snap = std::make_shared<Snapshot>();
  snap->bundle = std::move(bundle);
  {
    std::lock_guard<std::mutex> live(live_mu_);
    live_factors_ = snap->bundle.models.factor_model;
    live_templates_ = snap->bundle.models.domain.templates;
  }
  std::lock_guard<std::mutex> lock(model_mu_);
  snapshot_ = std::move(snap);
}

std::shared_ptr<const ChatService::Snapshot> ChatService::snapshot() const {
  std::lock_guard<std::mutex> lock(model_mu_);
  return snapshot_;
}

ModelBundle ChatService::export_bundle() const {
  ModelBundle b = snapshot()->bundle;
  std::lock_guard<std::mutex> live(live_mu_);
  b.models.factor_model = live_factors_;
  b.models.domain.templates = live_templates_;
  return b;
}

std::shared_ptr<ChatService::Session> ChatService::find(const std::string& id) const {
  std::shared_lock<std::shared_mutex> lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw not_found(id);
  return it->second;
}

void ChatService::append(Session& s, SessionEvent e) {
  e.time = now_seconds();
  s.updated_at = e.time;
  if (!options_.log_dir.empty()) {
    const auto path = std::filesystem::path(options_.log_dir) / (s.id + ".jsonl");
    std::ofstream out(path, std::ios::app);
    out << json(e).dump() << '\n';
    if (!out) std::cerr << "event log write failed: " << path << "\n";
  }
  s.events.push_back(std::move(e));
}

std::string ChatService::create_session(const std::string& user_id) {
  if (user_id.empty()) throw ServiceError(400, "bad_request", "user_id is required");
  auto s = std::make_shared<Session>();
  s->id = random_session_id();
  s->user_id = user_id;
  s->created_at = s->updated_at = now_seconds();
  s->rng = RandomSource(std::hash<std::string>{}(s->id));
  SessionEvent e;
  e.type = SessionEvent::Type::kCreated;
  e.user_id = user_id;
  append(*s, std::move(e));
  std::unique_lock<std::shared_mutex> lock(sessions_mu_);
  sessions_[s->id] = s;
  return s->id;
}

void ChatService::credit_templates(const std::vector<std::string>& ids,
                                   bool success) {
  std::lock_guard<std::mutex> live(live_mu_);
  for (const auto& id : ids) {
    for (auto& t : live_templates_) {
      if (t.id == id) t = record_outcome(t, success);
    }
  }
}

void ChatService::conversation_closed() {
  if (options_.snapshot_path.empty() || options_.snapshot_every == 0) return;
  bool due = false;
  {
    std::lock_guard<std::mutex> live(live_mu_);
    due = ++closed_since_snapshot_ >= options_.snapshot_every;
    if (due) closed_since_snapshot_ = 0;
  }
  if (!due) return;
  try {
    save_bundle(export_bundle(), options_.snapshot_path);
  } catch (const std::exception& e) {
    std::cerr << "bundle snapshot failed: " << e.what() << "\n";
  }
}

AgentReply ChatService::handle_message(const std::string& session_id,
                                       const std::string& text) {
  auto s = find(session_id);
  auto snap = snapshot();
  const Models& m = snap->bundle.models;
  const Domain& domain = m.domain;
  const SlotSchema& schema = domain.schema;

  std::unique_lock<std::mutex> lock(s->mu);
  if (s->closed) {
    throw ServiceError(409, "session_closed", "session " + session_id + " is closed");
  }
  s->transcript.push_back(Utterance{Speaker::kUser, text,
                                    static_cast<int>(s->transcript.size()),
                                    std::nullopt});
  UserAct user_act;
  try {
    user_act = understand(domain, m.intent_model, text, s->state).act;
  } catch (const std::exception& e) {
    std::cerr << "session " << session_id << ": nlu error: " << e.what() << "\n";
    user_act = UserAct{};
  }
  const DialogueState before = s->state;
  DialogueState state = update_state(before, user_act, schema);
  SessionEvent ue;
  ue.type = SessionEvent::Type::kUser;
  ue.text = text;
  ue.user_act = user_act;
  append(*s, std::move(ue));

  {
    std::lock_guard<std::mutex> live(live_mu_);
    if (user_act.kind == UserActKind::kAccept && state.accepted_item &&
        state.accepted_item != before.accepted_item) {
      live_factors_ = feedback_update(live_factors_, s->user_id,
                                      *state.accepted_item, Feedback::kAccept,
                                      m.mf_hyperparams);
    }
    for (const auto& id : state.rejected_items) {
      if (before.rejected_items.count(id) > 0) continue;
      live_factors_ = feedback_update(live_factors_, s->user_id, id,
                                      Feedback::kReject, m.mf_hyperparams);
    }
  }

  MachineAct act;
  std::vector<ScoredProduct> candidates;
  std::string prompt_key;
  if (user_act.kind == UserActKind::kBye) {
    act.kind = MachineActKind::kGreet;
    prompt_key = "farewell";
  } else {
    try {
      std::lock_guard<std::mutex> live(live_mu_);
      Situation sit = assess(m, live_factors_, state, s->user_id);
      PolicyAction action = choose(m.q_table, sit, ActionMode::kPolicy, 0.0, s->rng);
      act = realize(action, sit, state, schema, s->user_id);
      candidates = sit.candidates;
      prompt_key = prompt_key_for(act, schema);
    } catch (const std::exception& e) {
      std::cerr << "session " << session_id << ": policy error: " << e.what() << "\n";
      act = MachineAct{};
    }
  }
  state = apply_machine_act(state, act, schema);

  Phrase said;
  {
    std::lock_guard<std::mutex> live(live_mu_);
    const bool has_key = std::any_of(
        live_templates_.begin(), live_templates_.end(), [&](const Template& t) {
          return t.act_kind == act.kind && t.prompt_key == prompt_key;
        });
    said = phrase(act, state, domain.catalog, live_templates_,
                  has_key ? prompt_key : std::string());
  }

  AgentReply reply;
  reply.session_id = session_id;
  reply.turn = state.turn_count;
  reply.text = said.text;
  reply.machine_act = act.kind;
  for (const auto& id : act.items) {
    const Product* p = domain.catalog.find(id);
    if (p == nullptr) continue;
    double score = 0.0;
    for (const auto& c : candidates) {
      if (c.product_id == id) score = c.score;
    }
    reply.recommendations.push_back(RecommendationView{id, p->name, p->price, score});
  }
  for (const auto& [slot, v] : state.filled) reply.filled[slot] = v.value;
  reply.missing = missing_required(state, schema);
  if (act.kind == MachineActKind::kPlaceOrder) reply.order = act.order;

#ifndef NDEBUG
  auto bad = reply_violations(reply, state, domain.catalog, schema);
  if (!bad.empty()) throw Error("reply invariant violated: " + bad.front());
#endif

  s->template_ids.push_back(said.template_id);
  s->transcript.push_back(Utterance{Speaker::kMachine, said.text,
                                    static_cast<int>(s->transcript.size()), act});
  SessionEvent me;
  me.type = SessionEvent::Type::kMachine;
  me.text = said.text;
  me.machine_act = act;
  me.template_id = said.template_id;
  append(*s, std::move(me));
  s->state = std::move(state);

  bool closed_now = false;
  if (act.kind == MachineActKind::kPlaceOrder || user_act.kind == UserActKind::kBye) {
    s->closed = closed_now = true;
    reply.closed = true;
    SessionEvent ce;
    ce.type = SessionEvent::Type::kClosed;
    append(*s, std::move(ce));
  }
  s->replies.push_back(reply);
  std::vector<std::string> used = s->template_ids;
  lock.unlock();
  s->cv.notify_all();

  if (closed_now) {
    credit_templates(used, act.kind == MachineActKind::kPlaceOrder);
    conversation_closed();
  }
  return reply;
}

json ChatService::feedback(const std::string& session_id,
                           const std::string& product_id,
                           const std::string& outcome) {
  auto s = find(session_id);
  Feedback f;
  if (outcome == "accept") {
    f = Feedback::kAccept;
  } else if (outcome == "reject") {
    f = Feedback::kReject;
  } else {
    throw ServiceError(400, "bad_request", "outcome must be accept or reject");
  }
  auto snap = snapshot();
  if (snap->bundle.models.domain.catalog.find(product_id) == nullptr) {
    throw ServiceError(400, "bad_request", "unknown product " + product_id);
  }
  std::lock_guard<std::mutex> lock(s->mu);
  {
    std::lock_guard<std::mutex> live(live_mu_);
    live_factors_ = feedback_update(live_factors_, s->user_id, product_id, f,
                                    snap->bundle.models.mf_hyperparams);
  }
  SessionEvent e;
  e.type = SessionEvent::Type::kFeedback;
  e.product_id = product_id;
  e.outcome = outcome;
  append(*s, std::move(e));
  return json{{"session_id", session_id},
              {"product_id", product_id},
              {"outcome", outcome}};
}

json ChatService::session_json(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard<std::mutex> lock(s->mu);
  return json{{"session_id", s->id},
              {"user_id", s->user_id},
              {"created_at", s->created_at},
              {"updated_at", s->updated_at},
              {"closed", s->closed},
              {"state", s->state},
              {"transcript", s->transcript},
              {"replies", s->replies}};
}

std::vector<SessionEvent> ChatService::events(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard<std::mutex> lock(s->mu);
  return s->events;
}

DialogueState ChatService::state(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard<std::mutex> lock(s->mu);
  return s->state;
}

std::vector<AgentReply> ChatService::wait_replies(
    const std::string& session_id, int after, std::chrono::milliseconds timeout,
    bool* closed) const {
  auto s = find(session_id);
  std::unique_lock<std::mutex> lock(s->mu);
  auto ready = [&] {
    return s->closed || (!s->replies.empty() && s->replies.back().turn > after);
  };
  s->cv.wait_for(lock, timeout, ready);
  std::vector<AgentReply> out;
  for (const auto& r : s->replies) {
    if (r.turn > after) out.push_back(r);
  }
  if (closed != nullptr) *closed = s->closed;
  return out;
}

json ChatService::catalog_json() const {
  return catalog_to_json(snapshot()->bundle.models.domain.catalog);
}

json ChatService::health_json() const {
  auto snap = snapshot();
  size_t n = 0;
  {
    std::shared_lock<std::shared_mutex> lock(sessions_mu_);
    n = sessions_.size();
  }
  return json{{"status", "ok"},
              {"sessions", n},
              {"schema_hash", schema_hash(snap->bundle.models.domain.schema)},
              {"q_entries", snap->bundle.models.q_table.size()}};
}

}  // namespace convreco

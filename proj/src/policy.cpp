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

#include "convreco/policy.hpp"

#include <algorithm>
#include <cmath>

namespace convreco {

std::string PolicyAction::encode() const {
  std::string out(to_string(kind));
  if (kind == MachineActKind::kAsk) out += ":" + slot;
  return out;
}

std::optional<PolicyAction> PolicyAction::decode(std::string_view text) {
  auto colon = text.find(':');
  auto kind = parse_machine_act(text.substr(0, colon));
  if (!kind) return std::nullopt;
  PolicyAction a{*kind, ""};
  if (*kind == MachineActKind::kAsk) {
    if (colon == std::string_view::npos || colon + 1 == text.size()) {
      return std::nullopt;
    }
    a.slot = std::string(text.substr(colon + 1));
  } else if (colon != std::string_view::npos) {
    return std::nullopt;
  }
  return a;
}

std::string StateKey::encode() const {
  std::string out = "m=" + required_filled_mask;
  out += "|t=" + std::to_string(turn_bucket);
  out += "|r=" + std::to_string(reject_bucket);
  out += candidate_flag ? "|c=1" : "|c=0";
  out += "|u=";
  out += last_user_act ? std::string(to_string(*last_user_act)) : "none";
  return out;
}

std::vector<std::string> PolicyConfig::violations(
    const SlotSchema& schema) const {
  std::vector<std::string> out;
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) out.push_back("epsilon outside [0,1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) out.push_back("alpha outside (0,1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) out.push_back("gamma outside [0,1)");
  if (max_turns < static_cast<int>(schema.required_slots().size()) + 2) {
    out.push_back("max_turns below required slots + 2");
  }
  return out;
}

void to_json(json& j, const PolicyConfig& c) {
  j = json{{"epsilon", c.epsilon},
           {"alpha", c.alpha},
           {"gamma", c.gamma},
           {"reward_order", c.reward_order},
           {"reward_turn", c.reward_turn},
           {"reward_illegal", c.reward_illegal},
           {"max_turns", c.max_turns}};
}

void from_json(const json& j, PolicyConfig& c) {
  PolicyConfig d;
  c.epsilon = j.value("epsilon", d.epsilon);
  c.alpha = j.value("alpha", d.alpha);
  c.gamma = j.value("gamma", d.gamma);
  c.reward_order = j.value("reward_order", d.reward_order);
  c.reward_turn = j.value("reward_turn", d.reward_turn);
  c.reward_illegal = j.value("reward_illegal", d.reward_illegal);
  c.max_turns = j.value("max_turns", d.max_turns);
}

// QTable.

double QTable::value(const std::string& state, const std::string& action) const {
  auto it = entries_.find(join(state, action));
  return it == entries_.end() ? 0.0 : it->second.value;
}

long QTable::visits(const std::string& state, const std::string& action) const {
  auto it = entries_.find(join(state, action));
  return it == entries_.end() ? 0 : it->second.visits;
}

void QTable::set(const std::string& state, const std::string& action, Entry e) {
  if (!std::isfinite(e.value)) throw Error("non-finite Q value");
  entries_[join(state, action)] = e;
}

QTable::Entry& QTable::at(const std::string& state, const std::string& action) {
  return entries_[join(state, action)];
}

double QTable::max_abs_value() const {
  double m = 0.0;
  for (const auto& [k, e] : entries_) m = std::max(m, std::abs(e.value));
  return m;
}

std::vector<std::pair<std::pair<std::string, std::string>, QTable::Entry>>
QTable::sorted() const {
  std::vector<std::pair<std::pair<std::string, std::string>, Entry>> out;
  out.reserve(entries_.size());
  for (const auto& [k, e] : entries_) {
    auto sep = k.find('\x1f');
    out.push_back({{k.substr(0, sep), k.substr(sep + 1)}, e});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void to_json(json& j, const QTable& q) {
  j = json::array();
  for (const auto& [key, e] : q.sorted()) {
    j.push_back(json{{"state_key", key.first},
                     {"act", key.second},
                     {"value", e.value},
                     {"visits", e.visits}});
  }
}

void from_json(const json& j, QTable& q) {
  q = QTable{};
  for (const auto& row : j) {
    q.set(row.at("state_key").get<std::string>(), row.at("act").get<std::string>(),
          QTable::Entry{row.at("value").get<double>(), row.at("visits").get<long>()});
  }
}

// Policy operations.

StateKey abstract_state(const DialogueState& state, const SlotSchema& schema,
                        bool has_candidates) {
  StateKey key;
  for (const auto& def : schema.slots) {
    if (!def.required) continue;
    key.required_filled_mask.push_back(state.filled.count(def.name) ? '1' : '0');
  }
  const int t = state.turn_count;
  key.turn_bucket = t <= 2 ? 0 : t <= 5 ? 1 : t <= 9 ? 2 : 3;
  const size_t r = state.rejected_items.size();
  key.reject_bucket = r == 0 ? 0 : r <= 2 ? 1 : 2;
  key.candidate_flag = has_candidates;
  key.last_user_act = state.last_user_act;
  return key;
}

std::vector<PolicyAction> legal_actions(const DialogueState& state,
                                        const SlotSchema& schema,
                                        bool has_candidates) {
  std::vector<PolicyAction> out;
  for (const auto& slot : missing_required(state, schema)) {
    out.push_back({MachineActKind::kAsk, slot});
  }
  if (has_candidates) out.push_back({MachineActKind::kRecommend, ""});
  if (state.accepted_item) out.push_back({MachineActKind::kConfirm, ""});
  if (can_place_order(state, schema)) {
    out.push_back({MachineActKind::kPlaceOrder, ""});
  }
  if (!state.last_machine_act) out.push_back({MachineActKind::kGreet, ""});
  out.push_back({MachineActKind::kFallback, ""});
  return out;
}

std::vector<PolicyAction> action_inventory(const SlotSchema& schema) {
  std::vector<PolicyAction> out;
  for (const auto& slot : schema.required_slots()) {
    out.push_back({MachineActKind::kAsk, slot});
  }
  for (auto kind : kMachineActKinds) {
    if (kind != MachineActKind::kAsk) out.push_back({kind, ""});
  }
  return out;
}

PolicyAction select_action(const QTable& q, const StateKey& key,
                           const std::vector<PolicyAction>& legal,
                           const PolicyConfig& cfg, RandomSource& rng) {
  if (legal.empty()) throw Error("no legal actions");
  if (cfg.epsilon > 0.0 && rng.uniform() < cfg.epsilon) {
    return legal[rng.index(legal.size())];
  }
  const std::string state = key.encode();
  size_t best = 0;
  double best_value = q.value(state, legal[0].encode());
  for (size_t i = 1; i < legal.size(); ++i) {
    const double v = q.value(state, legal[i].encode());
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return legal[best];
}

void q_update(QTable& q, const std::string& state, const std::string& action,
              double reward, const std::optional<std::string>& next_state,
              const std::vector<std::string>& next_legal,
              const PolicyConfig& cfg) {
  double bootstrap = 0.0;
  if (next_state && !next_legal.empty()) {
    bootstrap = q.value(*next_state, next_legal[0]);
    for (size_t i = 1; i < next_legal.size(); ++i) {
      bootstrap = std::max(bootstrap, q.value(*next_state, next_legal[i]));
    }
  }
  QTable::Entry& e = q.at(state, action);
  e.value += cfg.alpha * (reward + cfg.gamma * bootstrap - e.value);
  ++e.visits;
}

void q_update(QTable& q, const StateKey& key, const PolicyAction& action,
              double reward, const std::optional<StateKey>& next_key,
              const std::vector<PolicyAction>& next_legal,
              const PolicyConfig& cfg) {
  std::optional<std::string> next;
  if (next_key) next = next_key->encode();
  std::vector<std::string> legal;
  legal.reserve(next_legal.size());
  for (const auto& a : next_legal) legal.push_back(a.encode());
  q_update(q, key.encode(), action.encode(), reward, next, legal, cfg);
}

}  // namespace convreco

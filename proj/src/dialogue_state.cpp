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

#include "convreco/dialogue_state.hpp"

#include <algorithm>

namespace convreco {

bool DialogueState::is_shown(const std::string& id) const {
  return std::find(shown_items.begin(), shown_items.end(), id) !=
         shown_items.end();
}

std::vector<std::string> DialogueState::violations(
    const SlotSchema& schema) const {
  std::vector<std::string> out;
  for (const auto& id : rejected_items) {
    if (!is_shown(id)) out.push_back("rejected item " + id + " never shown");
  }
  if (accepted_item && !is_shown(*accepted_item)) {
    out.push_back("accepted item " + *accepted_item + " never shown");
  }
  std::set<std::string> unique(shown_items.begin(), shown_items.end());
  if (unique.size() != shown_items.size()) out.push_back("shown items repeat");
  if (order_placed && !can_place_order(*this, schema)) {
    out.push_back("order placed without accepted item and required slots");
  }
  for (const auto& [slot, value] : filled) {
    if (schema.find(slot) == nullptr) out.push_back("unknown slot " + slot);
    if (value.slot != slot) out.push_back("slot key mismatch for " + slot);
  }
  if (turn_count < 0) out.push_back("negative turn count");
  return out;
}

bool DialogueState::operator==(const DialogueState& o) const {
  if (filled.size() != o.filled.size()) return false;
  for (const auto& [slot, v] : filled) {
    auto it = o.filled.find(slot);
    if (it == o.filled.end() || it->second.value != v.value ||
        it->second.source_turn != v.source_turn ||
        it->second.confidence != v.confidence) {
      return false;
    }
  }
  return shown_items == o.shown_items && rejected_items == o.rejected_items &&
         accepted_item == o.accepted_item && turn_count == o.turn_count &&
         last_user_act == o.last_user_act &&
         last_machine_act == o.last_machine_act &&
         order_placed == o.order_placed;
}

DialogueState update_state(const DialogueState& state, const UserAct& act,
                           const SlotSchema& schema) {
  if (state.order_placed) throw Error("conversation closed");
  DialogueState next = state;
  next.turn_count = state.turn_count + 1;
  next.last_user_act = act.kind;

  switch (act.kind) {
    case UserActKind::kInform:
      for (const auto& sv : act.slots) {
        if (schema.find(sv.slot) == nullptr) {
          throw Error("unknown slot \"" + sv.slot + "\"");
        }
        SlotValue v = sv;
        v.source_turn = next.turn_count;
        next.filled[sv.slot] = std::move(v);
      }
      break;
    case UserActKind::kReject:
      for (const auto& id : next.shown_items) next.rejected_items.insert(id);
      if (next.accepted_item && next.rejected_items.count(*next.accepted_item)) {
        next.accepted_item.reset();
      }
      break;
    case UserActKind::kAccept: {
      auto usable = [&](const std::string& id) {
        return next.is_shown(id) && next.rejected_items.count(id) == 0;
      };
      if (act.item && usable(*act.item)) {
        next.accepted_item = *act.item;
        break;
      }
      for (auto it = next.shown_items.rbegin(); it != next.shown_items.rend();
           ++it) {
        if (usable(*it)) {
          next.accepted_item = *it;
          break;
        }
      }
      break;
    }
    default:
      break;
  }
  return next;
}

DialogueState apply_machine_act(const DialogueState& state,
                                const MachineAct& act,
                                const SlotSchema& schema) {
  if (state.order_placed) throw Error("conversation closed");
  DialogueState next = state;
  next.last_machine_act = act.kind;
  switch (act.kind) {
    case MachineActKind::kRecommend:
      for (const auto& id : act.items) {
        if (!next.is_shown(id)) next.shown_items.push_back(id);
      }
      break;
    case MachineActKind::kPlaceOrder:
      if (!can_place_order(state, schema)) throw Error("order incomplete");
      next.order_placed = true;
      break;
    default:
      break;
  }
  return next;
}

std::vector<std::string> missing_required(const DialogueState& state,
                                          const SlotSchema& schema) {
  std::vector<std::string> out;
  for (const auto& def : schema.slots) {
    if (def.required && state.filled.count(def.name) == 0) {
      out.push_back(def.name);
    }
  }
  return out;
}

bool can_place_order(const DialogueState& state, const SlotSchema& schema) {
  return state.accepted_item.has_value() &&
         missing_required(state, schema).empty();
}

std::vector<SlotValue> filled_constraints(const DialogueState& state,
                                          const SlotSchema& schema,
                                          bool required_only) {
  std::vector<SlotValue> out;
  for (const auto& def : schema.slots) {
    if (required_only && !def.required) continue;
    auto it = state.filled.find(def.name);
    if (it != state.filled.end()) out.push_back(it->second);
  }
  return out;
}

Order build_order(const DialogueState& state, const SlotSchema& schema,
                  const std::string& user_id) {
  Order order;
  order.user_id = user_id;
  order.product_id = state.accepted_item.value_or("");
  order.slot_values = filled_constraints(state, schema, false);
  return order;
}

void to_json(json& j, const DialogueState& s) {
  json filled = json::object();
  for (const auto& [slot, v] : s.filled) filled[slot] = v;
  j = json{{"filled", filled},
           {"shown_items", s.shown_items},
           {"rejected_items", s.rejected_items},
           {"turn_count", s.turn_count},
           {"order_placed", s.order_placed}};
  j["accepted_item"] = s.accepted_item ? json(*s.accepted_item) : json(nullptr);
  j["last_user_act"] =
      s.last_user_act ? json(to_string(*s.last_user_act)) : json(nullptr);
  j["last_machine_act"] =
      s.last_machine_act ? json(to_string(*s.last_machine_act)) : json(nullptr);
}

void from_json(const json& j, DialogueState& s) {
  s = DialogueState{};
  for (const auto& [slot, v] : j.at("filled").items()) {
    s.filled[slot] = v.get<SlotValue>();
  }
  s.shown_items = j.at("shown_items").get<std::vector<std::string>>();
  s.rejected_items = j.at("rejected_items").get<std::set<std::string>>();
  s.turn_count = j.at("turn_count").get<int>();
  s.order_placed = j.at("order_placed").get<bool>();
  if (!j.at("accepted_item").is_null()) {
    s.accepted_item = j.at("accepted_item").get<std::string>();
  }
  if (!j.at("last_user_act").is_null()) {
    s.last_user_act = parse_user_act(j.at("last_user_act").get<std::string>());
  }
  if (!j.at("last_machine_act").is_null()) {
    s.last_machine_act =
        parse_machine_act(j.at("last_machine_act").get<std::string>());
  }
}

}  // namespace convreco

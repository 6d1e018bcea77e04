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

// Dialogue memory. States are values: every update returns a new state.

#ifndef CONVRECO_DIALOGUE_STATE_HPP_
#define CONVRECO_DIALOGUE_STATE_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "convreco/core.hpp"

namespace convreco {

struct DialogueState {
  std::map<std::string, SlotValue> filled;
  // Insertion ordered, no duplicates.
  std::vector<std::string> shown_items;
  std::set<std::string> rejected_items;
  std::optional<std::string> accepted_item;
  int turn_count = 0;
  std::optional<UserActKind> last_user_act;
  std::optional<MachineActKind> last_machine_act;
  bool order_placed = false;

  bool is_shown(const std::string& id) const;
  // Every broken invariant, for property tests and debug checks.
  std::vector<std::string> violations(const SlotSchema& schema) const;

  bool operator==(const DialogueState&) const;
};

// inform merges slots (latest wins); reject marks every shown item rejected;
// accept picks the referenced item, else the most recently shown
// non-rejected one. Throws Error("conversation closed") once an order is
// placed.
DialogueState update_state(const DialogueState& state, const UserAct& act,
                           const SlotSchema& schema);

// Throws Error("order incomplete") for place_order without an accepted item
// or with required slots missing.
DialogueState apply_machine_act(const DialogueState& state,
                                const MachineAct& act,
                                const SlotSchema& schema);

// Required slots not yet filled, in schema order.
std::vector<std::string> missing_required(const DialogueState& state,
                                          const SlotSchema& schema);

bool can_place_order(const DialogueState& state, const SlotSchema& schema);

// Filled values in schema order; optionally only required slots.
std::vector<SlotValue> filled_constraints(const DialogueState& state,
                                          const SlotSchema& schema,
                                          bool required_only);

// Order for the accepted item. Caller checks can_place_order first.
Order build_order(const DialogueState& state, const SlotSchema& schema,
                  const std::string& user_id);

void to_json(json& j, const DialogueState& s);
void from_json(const json& j, DialogueState& s);

}  // namespace convreco

#endif  // CONVRECO_DIALOGUE_STATE_HPP_

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

// Shared vocabulary for the conversational recommender: slots, dialogue
// acts, utterances, orders and conversations, plus value normalization.

#ifndef CONVRECO_CORE_HPP_
#define CONVRECO_CORE_HPP_

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace convreco {

using json = nlohmann::json;

// All recoverable failures in the library are reported with this type. The
// message is meant for humans and logs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SynonymMap = std::map<std::string, std::string>;

enum class ValueDomain { kEnumerated, kOpenText };

struct SlotDef {
  std::string name;
  ValueDomain value_domain = ValueDomain::kEnumerated;
  bool required = false;
  std::string prompt_key;
};

// Ordered slot definitions. The order is canonical: state keys, tie-breaks
// and "missing slot" lists all follow it.
struct SlotSchema {
  std::vector<SlotDef> slots;
  // Regular expressions for open-text slots, keyed by slot name.
  std::map<std::string, std::string> patterns;

  const SlotDef* find(std::string_view name) const;
  std::optional<size_t> index_of(std::string_view name) const;
  std::vector<std::string> required_slots() const;
};

struct SlotValue {
  std::string slot;
  std::string value;
  double confidence = 1.0;
  int source_turn = 0;

  bool same_pair(const SlotValue& other) const {
    return slot == other.slot && value == other.value;
  }
};

// User act kinds, in the fixed order used for tie-breaking.
enum class UserActKind {
  kInform,
  kRequest,
  kAccept,
  kReject,
  kAffirm,
  kDeny,
  kGreet,
  kBye,
  kChitchat,
};
inline constexpr std::array<UserActKind, 9> kUserActKinds = {
    UserActKind::kInform, UserActKind::kRequest, UserActKind::kAccept,
    UserActKind::kReject, UserActKind::kAffirm,  UserActKind::kDeny,
    UserActKind::kGreet,  UserActKind::kBye,     UserActKind::kChitchat};

// Machine act kinds, in the fixed order used for tie-breaking.
enum class MachineActKind {
  kAsk,
  kRecommend,
  kConfirm,
  kPlaceOrder,
  kGreet,
  kFallback,
};
inline constexpr std::array<MachineActKind, 6> kMachineActKinds = {
    MachineActKind::kAsk,        MachineActKind::kRecommend,
    MachineActKind::kConfirm,    MachineActKind::kPlaceOrder,
    MachineActKind::kGreet,      MachineActKind::kFallback};

std::string_view to_string(UserActKind kind);
std::string_view to_string(MachineActKind kind);
std::optional<UserActKind> parse_user_act(std::string_view name);
std::optional<MachineActKind> parse_machine_act(std::string_view name);

struct Order {
  std::string user_id;
  std::string product_id;
  std::vector<SlotValue> slot_values;
};

struct UserAct {
  UserActKind kind = UserActKind::kChitchat;
  std::vector<SlotValue> slots;
  // Product the user referred to, if any (accept/reject by name).
  std::optional<std::string> item;
};

struct MachineAct {
  MachineActKind kind = MachineActKind::kFallback;
  std::string slot;                // ask only
  std::vector<std::string> items;  // recommend only
  std::optional<Order> order;      // place_order / confirm

  // Empty when the act satisfies its payload invariants.
  std::vector<std::string> violations() const;
};

enum class Speaker { kUser, kMachine };

struct Utterance {
  Speaker speaker = Speaker::kUser;
  std::string text;
  int turn_index = 0;
  // The agent logs its own acts; user turns never carry one.
  std::optional<MachineAct> machine_act;
};

struct Conversation {
  std::string user_id;
  std::vector<Utterance> turns;
  std::optional<Order> final_order;
};

// Lowercase, trim, collapse interior whitespace, then apply the synonym map.
std::string normalize_value(std::string_view raw,
                            const SynonymMap& synonyms = {});

// Whitespace split of already normalized text. Punctuation glued to either
// end of a token is dropped; tokens that are pure punctuation vanish.
std::vector<std::string> tokenize(std::string_view normalized);

// Every invariant violation of the schema, in a stable order. Empty = ok.
std::vector<std::string> validate_schema(const SlotSchema& schema);

std::vector<std::string> validate_order(const Order& order,
                                        const SlotSchema& schema);
std::vector<std::string> validate_conversation(const Conversation& conv,
                                               const SlotSchema& schema);

// JSON mapping. Field names follow the external file formats.
void to_json(json& j, const SlotDef& s);
void from_json(const json& j, SlotDef& s);
void to_json(json& j, const SlotSchema& s);
void from_json(const json& j, SlotSchema& s);
void to_json(json& j, const SlotValue& v);
void from_json(const json& j, SlotValue& v);
void to_json(json& j, const Order& o);
void from_json(const json& j, Order& o);
void to_json(json& j, const MachineAct& a);
void from_json(const json& j, MachineAct& a);
void to_json(json& j, const Utterance& u);
void from_json(const json& j, Utterance& u);
void to_json(json& j, const Conversation& c);
void from_json(const json& j, Conversation& c);

// File helpers. Failures raise Error with the path in the message.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view contents);
json load_json_file(const std::string& path);
SlotSchema load_schema(const std::string& path);
SynonymMap load_synonyms(const std::string& path);

}  // namespace convreco

#endif  // CONVRECO_CORE_HPP_

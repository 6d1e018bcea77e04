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

#include "convreco/core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace convreco {

namespace {

constexpr std::array<std::string_view, 9> kUserActNames = {
    "inform", "request", "accept", "reject", "affirm",
    "deny",   "greet",   "bye",    "chitchat"};
constexpr std::array<std::string_view, 6> kMachineActNames = {
    "ask", "recommend", "confirm", "place_order", "greet", "fallback"};

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

const SlotDef* SlotSchema::find(std::string_view name) const {
  for (const auto& s : slots) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::optional<size_t> SlotSchema::index_of(std::string_view name) const {
  for (size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> SlotSchema::required_slots() const {
  std::vector<std::string> out;
  for (const auto& s : slots) {
    if (s.required) out.push_back(s.name);
  }
  return out;
}

std::string_view to_string(UserActKind kind) {
  return kUserActNames[static_cast<size_t>(kind)];
}

std::string_view to_string(MachineActKind kind) {
  return kMachineActNames[static_cast<size_t>(kind)];
}

std::optional<UserActKind> parse_user_act(std::string_view name) {
  for (size_t i = 0; i < kUserActNames.size(); ++i) {
    if (kUserActNames[i] == name) return kUserActKinds[i];
  }
  return std::nullopt;
}

std::optional<MachineActKind> parse_machine_act(std::string_view name) {
  for (size_t i = 0; i < kMachineActNames.size(); ++i) {
    if (kMachineActNames[i] == name) return kMachineActKinds[i];
  }
  return std::nullopt;
}

std::vector<std::string> MachineAct::violations() const {
  std::vector<std::string> out;
  switch (kind) {
    case MachineActKind::kAsk:
      if (slot.empty()) out.push_back("ask requires exactly one slot");
      break;
    case MachineActKind::kRecommend:
      if (items.empty()) out.push_back("recommend requires at least one item");
      break;
    case MachineActKind::kPlaceOrder:
      if (!order) out.push_back("place_order requires an order");
      break;
    default:
      break;
  }
  return out;
}

std::string normalize_value(std::string_view raw, const SynonymMap& synonyms) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (!synonyms.empty()) {
    auto it = synonyms.find(out);
    if (it != synonyms.end()) return it->second;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view normalized) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && is_space(normalized[i])) ++i;
    size_t j = i;
    while (j < normalized.size() && !is_space(normalized[j])) ++j;
    size_t b = i, e = j;
    while (b < e && is_punct(normalized[b])) ++b;
    while (e > b && is_punct(normalized[e - 1])) --e;
    if (e > b) tokens.emplace_back(normalized.substr(b, e - b));
    i = j;
  }
  return tokens;
}

std::vector<std::string> validate_schema(const SlotSchema& schema) {
  std::vector<std::string> violations;
  std::set<std::string> seen;
  for (const auto& s : schema.slots) {
    if (s.name.empty()) {
      violations.push_back("empty slot name");
      continue;
    }
    if (!seen.insert(s.name).second) {
      violations.push_back("duplicate name \"" + s.name + "\"");
    }
    if (s.required && s.prompt_key.empty()) {
      violations.push_back("missing prompt_key for required slot \"" +
                           s.name + "\"");
    }
  }
  for (const auto& [slot, pattern] : schema.patterns) {
    const SlotDef* def = schema.find(slot);
    if (def == nullptr) {
      violations.push_back("pattern for unknown slot \"" + slot + "\"");
    } else if (def->value_domain != ValueDomain::kOpenText) {
      violations.push_back("pattern for enumerated slot \"" + slot + "\"");
    }
  }
  return violations;
}

std::vector<std::string> validate_order(const Order& order,
                                        const SlotSchema& schema) {
  std::vector<std::string> violations;
  std::map<std::string, int> counts;
  for (const auto& sv : order.slot_values) {
    if (schema.find(sv.slot) == nullptr) {
      violations.push_back("order references unknown slot \"" + sv.slot + "\"");
    }
    ++counts[sv.slot];
  }
  for (const auto& name : schema.required_slots()) {
    int n = counts[name];
    if (n != 1) {
      violations.push_back("order covers required slot \"" + name + "\" " +
                           std::to_string(n) + " times");
    }
  }
  if (order.product_id.empty()) violations.push_back("order has no product");
  return violations;
}

std::vector<std::string> validate_conversation(const Conversation& conv,
                                               const SlotSchema& schema) {
  std::vector<std::string> violations;
  for (size_t i = 1; i < conv.turns.size(); ++i) {
    if (conv.turns[i].turn_index <= conv.turns[i - 1].turn_index) {
      violations.push_back("turn_index not increasing at turn " +
                           std::to_string(i));
    }
    if (conv.turns[i].speaker == conv.turns[i - 1].speaker) {
      violations.push_back("speakers do not alternate at turn " +
                           std::to_string(i));
    }
  }
  if (conv.final_order) {
    for (auto& v : validate_order(*conv.final_order, schema)) {
      violations.push_back(std::move(v));
    }
  }
  return violations;
}

// JSON.

void to_json(json& j, const SlotDef& s) {
  j = json{{"name", s.name},
           {"value_domain", s.value_domain == ValueDomain::kEnumerated
                                ? "enumerated"
                                : "open_text"},
           {"required", s.required},
           {"prompt_key", s.prompt_key}};
}

void from_json(const json& j, SlotDef& s) {
  s.name = j.at("name").get<std::string>();
  std::string domain = j.value("value_domain", "enumerated");
  if (domain == "enumerated") {
    s.value_domain = ValueDomain::kEnumerated;
  } else if (domain == "open_text" || domain == "open-text") {
    s.value_domain = ValueDomain::kOpenText;
  } else {
    throw Error("slot \"" + s.name + "\": unknown value_domain \"" + domain +
                "\"");
  }
  s.required = j.value("required", false);
  s.prompt_key = j.value("prompt_key", "");
}

void to_json(json& j, const SlotSchema& s) {
  j = json{{"slots", s.slots}, {"patterns", s.patterns}};
}

void from_json(const json& j, SlotSchema& s) {
  s.slots = j.at("slots").get<std::vector<SlotDef>>();
  s.patterns.clear();
  if (j.contains("patterns")) {
    s.patterns = j.at("patterns").get<std::map<std::string, std::string>>();
  }
}

void to_json(json& j, const SlotValue& v) {
  j = json{{"slot", v.slot},
           {"value", v.value},
           {"confidence", v.confidence},
           {"source_turn", v.source_turn}};
}

void from_json(const json& j, SlotValue& v) {
  v.slot = j.at("slot").get<std::string>();
  v.value = j.at("value").get<std::string>();
  v.confidence = j.value("confidence", 1.0);
  v.source_turn = j.value("source_turn", 0);
}

void to_json(json& j, const Order& o) {
  j = json{{"user_id", o.user_id},
           {"product_id", o.product_id},
           {"slot_values", o.slot_values}};
}

void from_json(const json& j, Order& o) {
  o.user_id = j.at("user_id").get<std::string>();
  o.product_id = j.at("product_id").get<std::string>();
  o.slot_values = j.at("slot_values").get<std::vector<SlotValue>>();
}

void to_json(json& j, const MachineAct& a) {
  j = json{{"kind", to_string(a.kind)}};
  if (!a.slot.empty()) j["slot"] = a.slot;
  if (!a.items.empty()) j["items"] = a.items;
  if (a.order) j["order"] = *a.order;
}

void from_json(const json& j, MachineAct& a) {
  auto kind = parse_machine_act(j.at("kind").get<std::string>());
  if (!kind) throw Error("unknown machine act " + j.at("kind").dump());
  a.kind = *kind;
  a.slot = j.value("slot", "");
  a.items = j.value("items", std::vector<std::string>{});
  a.order.reset();
  if (j.contains("order") && !j.at("order").is_null()) {
    a.order = j.at("order").get<Order>();
  }
}

void to_json(json& j, const Utterance& u) {
  j = json{{"speaker", u.speaker == Speaker::kUser ? "user" : "machine"},
           {"text", u.text},
           {"turn_index", u.turn_index}};
  if (u.machine_act) j["act"] = *u.machine_act;
}

void from_json(const json& j, Utterance& u) {
  std::string speaker = j.at("speaker").get<std::string>();
  if (speaker == "user") {
    u.speaker = Speaker::kUser;
  } else if (speaker == "machine") {
    u.speaker = Speaker::kMachine;
  } else {
    throw Error("unknown speaker \"" + speaker + "\"");
  }
  u.text = j.at("text").get<std::string>();
  u.turn_index = j.at("turn_index").get<int>();
  u.machine_act.reset();
  if (j.contains("act")) u.machine_act = j.at("act").get<MachineAct>();
}

void to_json(json& j, const Conversation& c) {
  j = json{{"user_id", c.user_id}, {"turns", c.turns}};
  j["final_order"] = c.final_order ? json(*c.final_order) : json(nullptr);
}

void from_json(const json& j, Conversation& c) {
  c.user_id = j.at("user_id").get<std::string>();
  c.turns = j.at("turns").get<std::vector<Utterance>>();
  c.final_order.reset();
  if (j.contains("final_order") && !j.at("final_order").is_null()) {
    c.final_order = j.at("final_order").get<Order>();
  }
}

// Files.

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

json load_json_file(const std::string& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(path + ": parse error: " + e.what());
  }
}

SlotSchema load_schema(const std::string& path) {
  SlotSchema schema;
  try {
    schema = load_json_file(path).get<SlotSchema>();
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  auto violations = validate_schema(schema);
  if (!violations.empty()) {
    throw Error(path + ": invalid schema: " + violations.front());
  }
  return schema;
}

SynonymMap load_synonyms(const std::string& path) {
  SynonymMap raw;
  try {
    raw = load_json_file(path).get<SynonymMap>();
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  SynonymMap out;
  for (const auto& [phrase, target] : raw) {
    out[normalize_value(phrase)] = normalize_value(target);
  }
  return out;
}

}  // namespace convreco

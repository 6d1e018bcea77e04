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

#include "convreco/nlg.hpp"

#include <set>

namespace convreco {

namespace {

const std::set<std::string>& product_placeholders() {
  static const std::set<std::string> names = {"product_name", "price",
                                              "order_summary"};
  return names;
}

}  // namespace

double Template::smoothed_rate() const {
  return static_cast<double>(successes + 1) / static_cast<double>(uses + 2);
}

std::vector<std::string> placeholders(const std::string& pattern) {
  std::vector<std::string> out;
  size_t pos = 0;
  while ((pos = pattern.find('{', pos)) != std::string::npos) {
    size_t end = pattern.find('}', pos + 1);
    if (end == std::string::npos) break;
    out.push_back(pattern.substr(pos + 1, end - pos - 1));
    pos = end + 1;
  }
  return out;
}

std::string render(const Template& t, const Bindings& bindings) {
  std::string out;
  const std::string& p = t.pattern;
  size_t pos = 0;
  while (pos < p.size()) {
    size_t open = p.find('{', pos);
    size_t close = open == std::string::npos ? open : p.find('}', open + 1);
    if (close == std::string::npos) {
      out.append(p, pos, std::string::npos);
      break;
    }
    out.append(p, pos, open - pos);
    const std::string name = p.substr(open + 1, close - open - 1);
    auto it = bindings.find(name);
    if (it == bindings.end()) throw Error("unbound placeholder: " + name);
    out += it->second;
    pos = close + 1;
  }
  return out;
}

const Template& select_template(MachineActKind act,
                                std::span<const Template> library,
                                const std::string& prompt_key) {
  const Template* best = nullptr;
  for (const auto& t : library) {
    if (t.act_kind != act || t.prompt_key != prompt_key) continue;
    if (best == nullptr) {
      best = &t;
      continue;
    }
    const double a = t.smoothed_rate();
    const double b = best->smoothed_rate();
    if (a > b || (a == b && t.id < best->id)) best = &t;
  }
  if (best == nullptr) {
    std::string what(to_string(act));
    if (!prompt_key.empty()) what += " (" + prompt_key + ")";
    throw Error("no template for act " + what);
  }
  return *best;
}

Template record_outcome(const Template& t, bool success) {
  Template next = t;
  ++next.uses;
  if (success) ++next.successes;
  return next;
}

std::vector<Template> parse_templates(const json& doc, const SlotSchema& schema) {
  if (!doc.is_array()) throw Error("templates: expected a JSON array");
  std::vector<Template> out;
  std::set<std::string> ids;
  for (const auto& item : doc) {
    Template t;
    try {
      t.id = item.at("id").get<std::string>();
      auto kind = parse_machine_act(item.at("act_kind").get<std::string>());
      if (!kind) {
        throw Error("template \"" + t.id + "\": unknown act_kind " +
                    item.at("act_kind").dump());
      }
      t.act_kind = *kind;
      t.pattern = item.at("pattern").get<std::string>();
      t.prompt_key = item.value("prompt_key", "");
    } catch (const json::exception& e) {
      throw Error(std::string("templates: ") + e.what());
    }
    if (!ids.insert(t.id).second) {
      throw Error("template \"" + t.id + "\": duplicate id");
    }
    for (const auto& name : placeholders(t.pattern)) {
      if (schema.find(name) == nullptr && product_placeholders().count(name) == 0) {
        throw Error("template \"" + t.id + "\": unknown placeholder {" + name +
                    "}");
      }
    }
    out.push_back(std::move(t));
  }
  for (auto kind : kMachineActKinds) {
    bool found = false;
    for (const auto& t : out) found = found || t.act_kind == kind;
    if (!found) {
      throw Error("templates: no template for act " +
                  std::string(to_string(kind)));
    }
  }
  for (const auto& def : schema.slots) {
    if (!def.required) continue;
    bool found = false;
    for (const auto& t : out) {
      found = found || (t.act_kind == MachineActKind::kAsk &&
                        t.prompt_key == def.prompt_key);
    }
    if (!found) {
      throw Error("templates: no ask template for prompt_key \"" +
                  def.prompt_key + "\"");
    }
  }
  return out;
}

std::vector<Template> load_templates(const std::string& path,
                                     const SlotSchema& schema) {
  try {
    return parse_templates(load_json_file(path), schema);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

json templates_to_json(std::span<const Template> library) {
  json out = json::array();
  for (const auto& t : library) {
    json item{{"id", t.id},
              {"act_kind", to_string(t.act_kind)},
              {"pattern", t.pattern}};
    if (!t.prompt_key.empty()) item["prompt_key"] = t.prompt_key;
    out.push_back(std::move(item));
  }
  return out;
}

json nlg_stats_to_json(std::span<const Template> library) {
  json out = json::object();
  for (const auto& t : library) {
    out[t.id] = json{{"uses", t.uses}, {"successes", t.successes}};
  }
  return out;
}

void apply_nlg_stats(const json& stats, std::vector<Template>& library) {
  for (auto& t : library) {
    if (!stats.contains(t.id)) continue;
    const json& s = stats.at(t.id);
    t.uses = s.at("uses").get<long>();
    t.successes = s.at("successes").get<long>();
    if (t.successes > t.uses || t.successes < 0) {
      throw Error("nlg_stats: template \"" + t.id + "\" has successes > uses");
    }
  }
}

}  // namespace convreco

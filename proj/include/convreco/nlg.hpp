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

// Template-based generation. Each machine act has alternative templates; the
// one with the best Laplace-smoothed success rate is used and its
// placeholders are filled from the dialogue.

#ifndef CONVRECO_NLG_HPP_
#define CONVRECO_NLG_HPP_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "convreco/core.hpp"

namespace convreco {

struct Template {
  std::string id;
  MachineActKind act_kind = MachineActKind::kFallback;
  // Narrows selection within an act: the slot's prompt_key for ask, or a
  // named variant such as "farewell". Empty = the act's default templates.
  std::string prompt_key;
  std::string pattern;
  long uses = 0;
  long successes = 0;

  // (successes + 1) / (uses + 2).
  double smoothed_rate() const;
};

using Bindings = std::map<std::string, std::string>;

// Placeholder names in order of appearance.
std::vector<std::string> placeholders(const std::string& pattern);

// Throws Error("unbound placeholder: x") when a binding is missing.
std::string render(const Template& t, const Bindings& bindings);

// Highest smoothed rate among templates of `act` with `prompt_key`; ties go
// to the lowest id. Throws Error when none match.
const Template& select_template(MachineActKind act,
                                std::span<const Template> library,
                                const std::string& prompt_key = "");

Template record_outcome(const Template& t, bool success);

// Parses a JSON array of {id, act_kind, pattern[, prompt_key]}. Rejects
// placeholders outside the schema's slots and {product_name, price,
// order_summary}, act kinds without templates, and required slots whose
// prompt_key has no ask template.
std::vector<Template> load_templates(const std::string& path,
                                     const SlotSchema& schema);
std::vector<Template> parse_templates(const json& doc, const SlotSchema& schema);
json templates_to_json(std::span<const Template> library);

// Counter persistence: {id: {uses, successes}}.
json nlg_stats_to_json(std::span<const Template> library);
void apply_nlg_stats(const json& stats, std::vector<Template>& library);

}  // namespace convreco

#endif  // CONVRECO_NLG_HPP_

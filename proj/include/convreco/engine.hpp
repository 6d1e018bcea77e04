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

// The per-turn loop shared by simulation, the chat REPL and the HTTP
// service: understand the user, update state, rank candidates, pick the
// next act and phrase it.

#ifndef CONVRECO_ENGINE_HPP_
#define CONVRECO_ENGINE_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "convreco/catalog.hpp"
#include "convreco/core.hpp"
#include "convreco/dialogue_state.hpp"
#include "convreco/nlg.hpp"
#include "convreco/nlu.hpp"
#include "convreco/policy.hpp"
#include "convreco/random.hpp"
#include "convreco/recommender.hpp"

namespace convreco {

struct RecommendConfig {
  size_t n = 3;
  double blend_alpha = kDefaultBlendAlpha;
};

void to_json(json& j, const RecommendConfig& c);
void from_json(const json& j, RecommendConfig& c);

// Domain description: schema, catalog, lexical resources, templates.
struct Domain {
  SlotSchema schema;
  SynonymMap synonyms;
  Catalog catalog;
  Gazetteer gazetteer;
  SlotPatterns patterns;
  std::vector<Template> templates;

  // Builds gazetteer and patterns from the rest.
  static Domain create(SlotSchema schema, SynonymMap synonyms, Catalog catalog,
                       std::vector<Template> templates);
  static Domain load(const std::string& schema_path,
                     const std::string& catalog_path,
                     const std::string& synonyms_path,
                     const std::string& templates_path);
};

// Everything a live or simulated agent needs. Immutable once built; serving
// swaps whole snapshots.
struct Models {
  Domain domain;
  IntentModel intent_model;
  FactorModel factor_model;
  QTable q_table;
  Hyperparams mf_hyperparams;
  RecommendConfig recommend;
  PolicyConfig policy;
};

struct Understanding {
  UserAct act;
  ActPrediction prediction;
};

// Slots, act and (for accept/reject) the named product among shown items.
Understanding understand(const Domain& domain, const IntentModel& model,
                         const std::string& text, const DialogueState& state);

// kRandom draws uniformly from the whole action inventory; illegal draws
// are executed as fallback. kRandomLegal draws uniformly from the legal set.
enum class ActionMode { kPolicy, kRandom, kRandomLegal };

struct Situation {
  StateKey key;
  std::vector<PolicyAction> legal;
  std::vector<PolicyAction> inventory;
  std::vector<ScoredProduct> candidates;
};

Situation assess(const Models& models, const FactorModel& factors,
                 const DialogueState& state, const std::string& user_id);

// Picks an action for an assessed situation; only kPolicy reads the Q-table.
// The result may be illegal under kRandom.
PolicyAction choose(const QTable& q, const Situation& s, ActionMode mode,
                    double epsilon, RandomSource& rng);

// Fills the payload of `action`: candidate ids for recommend, the order for
// confirm and place_order.
MachineAct realize(const PolicyAction& action, const Situation& s,
                   const DialogueState& state, const SlotSchema& schema,
                   const std::string& user_id);

struct Phrase {
  std::string text;
  std::string template_id;
};

// Bindings available to templates for `act` in `state`.
Bindings bindings_for(const MachineAct& act, const DialogueState& state,
                      const Catalog& catalog);

// Selects and renders a template. Falls back to the fallback template when
// the chosen one cannot be rendered.
Phrase phrase(const MachineAct& act, const DialogueState& state,
              const Catalog& catalog, std::span<const Template> library,
              const std::string& prompt_key);

// Prompt key for ask acts, empty otherwise.
std::string prompt_key_for(const MachineAct& act, const SlotSchema& schema);

std::string format_price(double price);

}  // namespace convreco

#endif  // CONVRECO_ENGINE_HPP_

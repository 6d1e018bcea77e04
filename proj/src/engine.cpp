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

#include "convreco/engine.hpp"

#include <algorithm>
#include <cstdio>

namespace convreco {

void to_json(json& j, const RecommendConfig& c) {
  j = json{{"n", c.n}, {"blend_alpha", c.blend_alpha}};
}

void from_json(const json& j, RecommendConfig& c) {
  RecommendConfig d;
  c.n = j.value("n", d.n);
  c.blend_alpha = j.value("blend_alpha", d.blend_alpha);
}

Domain Domain::create(SlotSchema schema, SynonymMap synonyms, Catalog catalog,
                      std::vector<Template> templates) {
  Domain d;
  d.schema = std::move(schema);
  d.synonyms = std::move(synonyms);
  d.catalog = std::move(catalog);
  d.templates = std::move(templates);
  d.gazetteer = build_gazetteer(d.catalog, d.synonyms);
  d.patterns = SlotPatterns(d.schema);
  return d;
}

Domain Domain::load(const std::string& schema_path,
                    const std::string& catalog_path,
                    const std::string& synonyms_path,
                    const std::string& templates_path) {
  SlotSchema schema = load_schema(schema_path);
  SynonymMap synonyms;
  if (!synonyms_path.empty()) synonyms = load_synonyms(synonyms_path);
  Catalog catalog = load_catalog(catalog_path, schema);
  auto templates = load_templates(templates_path, schema);
  return create(std::move(schema), std::move(synonyms), std::move(catalog),
                std::move(templates));
}

Understanding understand(const Domain& domain, const IntentModel& model,
                         const std::string& text, const DialogueState& state) {
  Understanding u;
  u.act.slots = extract_slots(text, domain.gazetteer, domain.patterns);
  u.prediction = classify_act(text, model, u.act.slots);
  u.act.kind = u.prediction.act;
  if (u.act.kind == UserActKind::kAccept || u.act.kind == UserActKind::kReject) {
    std::vector<const Product*> shown;
    for (const auto& id : state.shown_items) {
      if (const Product* p = domain.catalog.find(id)) shown.push_back(p);
    }
    u.act.item = match_item_reference(text, shown);
  }
  return u;
}

Situation assess(const Models& models, const FactorModel& factors,
                 const DialogueState& state, const std::string& user_id) {
  Situation s;
  s.candidates = recommend(factors, state, user_id, models.domain.catalog,
                           models.recommend.n, models.recommend.blend_alpha);
  const bool has_candidates = !s.candidates.empty();
  s.key = abstract_state(state, models.domain.schema, has_candidates);
  s.legal = legal_actions(state, models.domain.schema, has_candidates);
  s.inventory = action_inventory(models.domain.schema);
  return s;
}

PolicyAction choose(const QTable& q, const Situation& s, ActionMode mode,
                    double epsilon, RandomSource& rng) {
  if (mode == ActionMode::kRandom) {
    return s.inventory[rng.index(s.inventory.size())];
  }
  if (mode == ActionMode::kRandomLegal) return s.legal[rng.index(s.legal.size())];
  PolicyConfig cfg;
  cfg.epsilon = epsilon;
  return select_action(q, s.key, s.legal, cfg, rng);
}

MachineAct realize(const PolicyAction& action, const Situation& s,
                   const DialogueState& state, const SlotSchema& schema,
                   const std::string& user_id) {
  MachineAct act;
  act.kind = action.kind;
  switch (action.kind) {
    case MachineActKind::kAsk:
      act.slot = action.slot;
      break;
    case MachineActKind::kRecommend:
      for (const auto& c : s.candidates) act.items.push_back(c.product_id);
      break;
    case MachineActKind::kConfirm:
    case MachineActKind::kPlaceOrder:
      act.order = build_order(state, schema, user_id);
      break;
    default:
      break;
  }
  return act;
}

std::string format_price(double price) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "$%.2f", price);
  return buf;
}

Bindings bindings_for(const MachineAct& act, const DialogueState& state,
                      const Catalog& catalog) {
  Bindings b;
  for (const auto& [slot, v] : state.filled) b[slot] = v.value;

  std::vector<const Product*> products;
  if (act.kind == MachineActKind::kRecommend) {
    for (const auto& id : act.items) {
      if (const Product* p = catalog.find(id)) products.push_back(p);
    }
  } else if (state.accepted_item) {
    if (const Product* p = catalog.find(*state.accepted_item)) {
      products.push_back(p);
    }
  }
  if (!products.empty()) {
    std::string names;
    double min_price = products.front()->price;
    for (size_t i = 0; i < products.size(); ++i) {
      if (i > 0) names += i + 1 == products.size() ? " or " : ", ";
      names += products[i]->name;
      min_price = std::min(min_price, products[i]->price);
    }
    b["product_name"] = names;
    b["price"] = format_price(min_price);
  }
  if (state.accepted_item && !products.empty() &&
      act.kind != MachineActKind::kRecommend) {
    const Product* p = products.front();
    std::string summary = p->name + " (";
    bool first = true;
    for (const auto& def : catalog.schema().slots) {
      auto it = state.filled.find(def.name);
      if (it == state.filled.end()) continue;
      if (!first) summary += ", ";
      summary += it->second.value;
      first = false;
    }
    summary += ") for " + format_price(p->price);
    b["order_summary"] = summary;
  }
  return b;
}

std::string prompt_key_for(const MachineAct& act, const SlotSchema& schema) {
  if (act.kind != MachineActKind::kAsk) return "";
  const SlotDef* def = schema.find(act.slot);
  return def == nullptr ? "" : def->prompt_key;
}

Phrase phrase(const MachineAct& act, const DialogueState& state,
              const Catalog& catalog, std::span<const Template> library,
              const std::string& prompt_key) {
  try {
    const Template& t = select_template(act.kind, library, prompt_key);
    return Phrase{render(t, bindings_for(act, state, catalog)), t.id};
  } catch (const Error&) {
    const Template& t = select_template(MachineActKind::kFallback, library);
    return Phrase{render(t, {}), t.id};
  }
}

}  // namespace convreco

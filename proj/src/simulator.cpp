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

#include "convreco/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

namespace convreco {

namespace {

// User-side surface forms. Slot values always appear verbatim, so the
// catalog gazetteer (or the open-slot pattern) can recover them.
const std::vector<std::string>& slot_forms(const std::string& slot) {
  static const std::map<std::string, std::vector<std::string>> forms = {
      {"food", {"{v} food", "some {v} food", "{v}"}},
      {"location", {"near {v}", "in {v}", "around zip code {v}"}},
      {"price_range", {"something {v}", "somewhere {v}", "{v} prices"}},
      {"diet", {"{v} options", "something {v}", "{v} dishes"}},
  };
  static const std::vector<std::string> generic = {"{v}", "{v} please",
                                                   "just {v}"};
  auto it = forms.find(slot);
  return it == forms.end() ? generic : it->second;
}

const std::vector<std::string> kInformFrames = {
    "I want {x}.", "I'd like {x}.", "{x} please.", "Looking for {x}.",
    "Let's go with {x}."};
const std::vector<std::string> kGreetingPrefixes = {"Hi, ", "Hello, ",
                                                    "Hey there, "};
const std::vector<std::string> kDistractors = {
    "thanks a lot.", "it is for my family.", "we are really hungry.",
    "my friend recommended you."};
const std::vector<std::string> kGreetings = {"Hi", "Hello there", "Hey",
                                             "Good evening"};
const std::vector<std::string> kAcceptFrames = {
    "I'll take {p}.", "{p} sounds good.", "{p} works for me.",
    "{p}, that one please."};
const std::vector<std::string> kUnnamedAcceptForms = {
    "That one sounds good.", "I'll take it.", "Perfect, let's do that."};
const std::vector<std::string> kQuestionFrames = {
    "Do you have {x}?", "Any options for {x}?", "Could I get {x}?"};
const std::vector<std::string> kRejectForms = {
    "Something else please.", "I don't like those.",
    "Not what I'm looking for.", "Any other options?",
    "No, something else please.", "Hmm, none of those."};
const std::vector<std::string> kAffirmForms = {"yes", "yes please", "sure",
                                               "correct"};
const std::vector<std::string> kDenyForms = {"no", "nope", "no thanks"};
const std::vector<std::string> kByeForms = {"Thanks, bye!", "Great, goodbye.",
                                            "Bye"};
const std::vector<std::string> kQuitForms = {
    "Forget it, bye.", "Never mind, I'll look elsewhere.",
    "This is taking too long. Bye."};
const std::vector<std::string> kChitchatForms = {
    "Hmm, let me think.", "Not sure yet.", "Good question.",
    "I'm just browsing.", "Do you deliver?", "What are your hours?"};

std::string replace_all(std::string s, const std::string& what,
                        const std::string& with) {
  size_t pos = 0;
  while ((pos = s.find(what, pos)) != std::string::npos) {
    s.replace(pos, what.size(), with);
    pos += with.size();
  }
  return s;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string mention(const SlotValue& sv, RandomSource& rng) {
  return replace_all(rng.pick(slot_forms(sv.slot)), "{v}", sv.value);
}

std::string inform_text(const std::vector<SlotValue>& slots,
                        const UserProfile& profile, RandomSource& rng) {
  std::string x;
  for (size_t i = 0; i < slots.size(); ++i) {
    if (i > 0) x += " and ";
    x += mention(slots[i], rng);
  }
  const auto& frames = rng.bernoulli(0.15) ? kQuestionFrames : kInformFrames;
  std::string text = capitalize(replace_all(rng.pick(frames), "{x}", x));
  if (rng.bernoulli(profile.distractor_rate)) {
    text += " " + capitalize(rng.pick(kDistractors));
  }
  return text;
}

SimulatedTurn make_turn(UserActKind act, std::string text,
                        std::vector<SlotValue> slots = {},
                        std::optional<std::string> item = std::nullopt) {
  SimulatedTurn t;
  t.utterance.speaker = Speaker::kUser;
  t.utterance.text = std::move(text);
  t.annotation.true_act = act;
  t.annotation.true_slots = std::move(slots);
  t.annotation.true_item = std::move(item);
  return t;
}

// Goal slots the agent has not recorded yet, excluding `except`.
std::vector<SlotValue> unfilled_goal_slots(const UserGoal& goal,
                                           const DialogueState& history,
                                           const std::string& except) {
  std::vector<SlotValue> out;
  for (const auto& sv : goal.target_constraints) {
    if (sv.slot == except) continue;
    auto it = history.filled.find(sv.slot);
    if (it == history.filled.end()) out.push_back(sv);
  }
  return out;
}

const Template& random_template(MachineActKind kind, const std::string& key,
                                std::span<const Template> library,
                                RandomSource& rng) {
  std::vector<const Template*> matches;
  for (const auto& t : library) {
    if (t.act_kind == kind && t.prompt_key == key) matches.push_back(&t);
  }
  if (matches.empty()) return select_template(kind, library, key);
  return *matches[rng.index(matches.size())];
}

}  // namespace

const SlotValue* UserGoal::value_for(const std::string& slot) const {
  for (const auto& sv : target_constraints) {
    if (sv.slot == slot) return &sv;
  }
  return nullptr;
}

std::vector<std::string> UserProfile::violations() const {
  std::vector<std::string> out;
  auto prob = [&](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) out.push_back(std::string(name) + " outside [0,1]");
  };
  prob(cooperativeness, "cooperativeness");
  prob(verbosity, "verbosity");
  prob(distractor_rate, "distractor_rate");
  prob(dropout, "dropout");
  prob(teacher_pitch_rate, "teacher_pitch_rate");
  prob(loyalty, "loyalty");
  if (patience < 3) out.push_back("patience below 3");
  return out;
}

void to_json(json& j, const UserProfile& p) {
  j = json{{"patience", p.patience},
           {"cooperativeness", p.cooperativeness},
           {"verbosity", p.verbosity},
           {"distractor_rate", p.distractor_rate},
           {"dropout", p.dropout},
           {"loyalty", p.loyalty},
           {"teacher_pitch_rate", p.teacher_pitch_rate}};
}

void from_json(const json& j, UserProfile& p) {
  UserProfile d;
  p.patience = j.value("patience", d.patience);
  p.cooperativeness = j.value("cooperativeness", d.cooperativeness);
  p.verbosity = j.value("verbosity", d.verbosity);
  p.distractor_rate = j.value("distractor_rate", d.distractor_rate);
  p.dropout = j.value("dropout", d.dropout);
  p.loyalty = j.value("loyalty", d.loyalty);
  p.teacher_pitch_rate = j.value("teacher_pitch_rate", d.teacher_pitch_rate);
}

void to_json(json& j, const HiddenAnnotation& a) {
  j = json{{"turn_index", a.turn_index},
           {"act", to_string(a.true_act)},
           {"slots", a.true_slots}};
  j["item"] = a.true_item ? json(*a.true_item) : json(nullptr);
}

void from_json(const json& j, HiddenAnnotation& a) {
  a.turn_index = j.at("turn_index").get<int>();
  auto act = parse_user_act(j.at("act").get<std::string>());
  if (!act) throw Error("annotation: unknown act " + j.at("act").dump());
  a.true_act = *act;
  a.true_slots = j.at("slots").get<std::vector<SlotValue>>();
  a.true_item.reset();
  if (j.contains("item") && !j.at("item").is_null()) {
    a.true_item = j.at("item").get<std::string>();
  }
}

UserTaste taste_for(size_t user_index, const Catalog& catalog,
                    const SlotSchema& schema) {
  constexpr uint64_t kTasteSeed = 0x7a57e;
  RandomSource rng(RandomSource::derive(kTasteSeed, user_index));
  UserTaste taste;
  for (const auto& slot : schema.required_slots()) {
    auto values = catalog.values_for(slot);
    if (!values.empty()) taste[slot] = rng.pick(values);
  }
  return taste;
}

UserGoal sample_goal(const Catalog& catalog, const SlotSchema& schema,
                     RandomSource& rng, const UserTaste* taste, double loyalty) {
  if (catalog.empty()) throw Error("catalog too sparse: no products");
  std::vector<std::pair<std::string, std::vector<std::string>>> domains;
  for (const auto& slot : schema.required_slots()) {
    auto values = catalog.values_for(slot);
    if (values.empty()) throw Error("catalog too sparse: no values for " + slot);
    domains.emplace_back(slot, std::move(values));
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    UserGoal goal;
    for (const auto& [slot, values] : domains) {
      std::string value = rng.pick(values);
      if (taste != nullptr && rng.bernoulli(loyalty)) {
        auto it = taste->find(slot);
        if (it != taste->end()) value = it->second;
      }
      goal.target_constraints.push_back(SlotValue{slot, value, 1.0, 0});
    }
    for (const Product* p : filter_products(catalog, goal.target_constraints)) {
      goal.acceptable_products.insert(p->id);
    }
    if (!goal.acceptable_products.empty()) return goal;
  }
  throw Error("catalog too sparse");
}

SimulatedTurn user_turn(const UserGoal& goal, const UserProfile& profile,
                        const std::optional<MachineAct>& machine_act,
                        const DialogueState& history, const Catalog& catalog,
                        RandomSource& rng) {
  if (machine_act && machine_act->kind == MachineActKind::kPlaceOrder) {
    return make_turn(UserActKind::kBye, rng.pick(kByeForms));
  }
  if (history.turn_count >= profile.patience) {
    return make_turn(UserActKind::kBye, rng.pick(kQuitForms));
  }
  if (machine_act && rng.bernoulli(profile.dropout)) {
    return make_turn(UserActKind::kBye, rng.pick(kQuitForms));
  }

  if (!machine_act) {
    // Opening: a greeting, or a request naming one to three goal slots.
    if (rng.bernoulli(0.4)) {
      return make_turn(UserActKind::kGreet, rng.pick(kGreetings));
    }
    std::vector<SlotValue> slots = goal.target_constraints;
    rng.shuffle(slots);
    const double r = rng.uniform();
    size_t count = r < 0.5 ? 1 : r < 0.8 ? 2 : 3;
    slots.resize(std::min(count, slots.size()));
    std::string text = inform_text(slots, profile, rng);
    if (rng.bernoulli(0.3)) {
      text = rng.pick(kGreetingPrefixes) + normalize_value(text.substr(0, 1)) +
             text.substr(1);
    }
    return make_turn(UserActKind::kInform, std::move(text), std::move(slots));
  }

  switch (machine_act->kind) {
    case MachineActKind::kAsk: {
      const SlotValue* wanted = goal.value_for(machine_act->slot);
      if (wanted == nullptr || !rng.bernoulli(profile.cooperativeness)) {
        return make_turn(UserActKind::kChitchat, rng.pick(kChitchatForms));
      }
      std::vector<SlotValue> slots = {*wanted};
      if (rng.bernoulli(profile.verbosity)) {
        auto extra = unfilled_goal_slots(goal, history, wanted->slot);
        if (!extra.empty()) slots.push_back(rng.pick(extra));
      }
      std::string text = inform_text(slots, profile, rng);
      return make_turn(UserActKind::kInform, std::move(text), std::move(slots));
    }
    case MachineActKind::kRecommend:
      for (const auto& id : machine_act->items) {
        if (goal.acceptable_products.count(id) == 0) continue;
        const Product* p = catalog.find(id);
        std::string name = p ? p->name : id;
        // Without a name the agent can only resolve a single pitched item.
        if (machine_act->items.size() == 1 && rng.bernoulli(0.5)) {
          return make_turn(UserActKind::kAccept, rng.pick(kUnnamedAcceptForms), {}, id);
        }
        return make_turn(UserActKind::kAccept,
                         capitalize(replace_all(rng.pick(kAcceptFrames), "{p}", name)),
                         {}, id);
      }
      return make_turn(UserActKind::kReject, rng.pick(kRejectForms));
    case MachineActKind::kConfirm:
      if (history.accepted_item &&
          goal.acceptable_products.count(*history.accepted_item) > 0) {
        return make_turn(UserActKind::kAffirm, rng.pick(kAffirmForms));
      }
      return make_turn(UserActKind::kDeny, rng.pick(kDenyForms));
    case MachineActKind::kGreet:
      return make_turn(UserActKind::kGreet, rng.pick(kGreetings));
    default:
      return make_turn(UserActKind::kChitchat, rng.pick(kChitchatForms));
  }
}

std::string simulated_user_id(size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%03zu", index);
  return buf;
}

GeneratedCorpus generate_corpus(size_t n, const Domain& domain,
                                const UserProfile& profile, RandomSource& rng) {
  constexpr int kTeacherMaxTurns = 20;
  const SlotSchema& schema = domain.schema;
  const Catalog& catalog = domain.catalog;
  GeneratedCorpus corpus;
  corpus.conversations.reserve(n);
  corpus.annotations.reserve(n);

  for (size_t c = 0; c < n; ++c) {
    Conversation conv;
    const size_t user = rng.index(kSimulatedUsers);
    conv.user_id = simulated_user_id(user);
    const UserTaste taste = taste_for(user, catalog, schema);
    UserGoal goal = sample_goal(catalog, schema, rng, &taste, profile.loyalty);
    std::vector<HiddenAnnotation> notes;
    // The teacher understands the user perfectly: its state follows the
    // hidden annotations.
    DialogueState truth;
    int turn_index = 0;

    auto user_says = [&](const std::optional<MachineAct>& m) {
      SimulatedTurn st = user_turn(goal, profile, m, truth, catalog, rng);
      st.utterance.turn_index = turn_index;
      st.annotation.turn_index = turn_index;
      ++turn_index;
      if (!truth.order_placed) {
        truth = update_state(truth,
                             UserAct{st.annotation.true_act,
                                     st.annotation.true_slots,
                                     st.annotation.true_item},
                             schema);
      }
      conv.turns.push_back(st.utterance);
      notes.push_back(st.annotation);
      return st.annotation.true_act;
    };

    UserActKind last = user_says(std::nullopt);
    bool pitched = false;
    int pitch_left = 0;
    for (int t = 0; t < kTeacherMaxTurns && last != UserActKind::kBye; ++t) {
      std::vector<std::string> candidates;
      for (const Product* p :
           filter_products(catalog, filled_constraints(truth, schema, true))) {
        if (!truth.is_shown(p->id) && truth.rejected_items.count(p->id) == 0) {
          candidates.push_back(p->id);
        }
      }
      rng.shuffle(candidates);
      if (candidates.size() > 3) candidates.resize(3);

      const auto missing = missing_required(truth, schema);
      MachineAct act;
      if (can_place_order(truth, schema)) {
        act.kind = MachineActKind::kPlaceOrder;
        act.order = build_order(truth, schema, conv.user_id);
      } else if (pitch_left > 0 && last == UserActKind::kReject &&
                 !candidates.empty()) {
        act.kind = MachineActKind::kRecommend;
        act.items = candidates;
        --pitch_left;
      } else if (!missing.empty()) {
        if (!pitched && !truth.filled.empty() && !candidates.empty() &&
            rng.bernoulli(profile.teacher_pitch_rate)) {
          act.kind = MachineActKind::kRecommend;
          act.items = candidates;
          pitched = true;
          pitch_left = 1;
        } else {
          act.kind = MachineActKind::kAsk;
          act.slot = missing.front();
        }
      } else if (!candidates.empty()) {
        act.kind = MachineActKind::kRecommend;
        act.items = candidates;
      } else {
        act.kind = MachineActKind::kFallback;
      }

      truth = apply_machine_act(truth, act, schema);
      const Template& tmpl =
          random_template(act.kind, prompt_key_for(act, schema), domain.templates, rng);
      std::string text;
      try {
        text = render(tmpl, bindings_for(act, truth, catalog));
      } catch (const Error&) {
        text = render(select_template(MachineActKind::kFallback, domain.templates), {});
      }
      Utterance u{Speaker::kMachine, std::move(text), turn_index++, act};
      conv.turns.push_back(std::move(u));
      if (act.kind == MachineActKind::kPlaceOrder) conv.final_order = act.order;
      last = user_says(act);
    }
    corpus.conversations.push_back(std::move(conv));
    corpus.annotations.push_back(std::move(notes));
  }
  return corpus;
}

std::string corpus_to_jsonl(const std::vector<Conversation>& conversations) {
  std::string out;
  for (const auto& c : conversations) {
    out += json(c).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<Conversation> corpus_from_jsonl(std::string_view text) {
  std::vector<Conversation> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<Conversation>());
    } catch (const std::exception& e) {
      throw Error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string annotations_to_jsonl(
    const std::vector<std::vector<HiddenAnnotation>>& annotations) {
  std::string out;
  for (size_t i = 0; i < annotations.size(); ++i) {
    out += json{{"conversation", i}, {"turns", annotations[i]}}.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<std::vector<HiddenAnnotation>> annotations_from_jsonl(
    std::string_view text) {
  std::vector<std::vector<HiddenAnnotation>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    out.push_back(j.at("turns").get<std::vector<HiddenAnnotation>>());
  }
  return out;
}

// Episodes.

EpisodeResult run_episode(const Models& models, const QTable& q,
                          std::span<const Template> templates,
                          const UserProfile& profile,
                          const EpisodeOptions& options, RandomSource& user_rng,
                          RandomSource& policy_rng) {
  const Domain& domain = models.domain;
  const SlotSchema& schema = domain.schema;
  const PolicyConfig& cfg = models.policy;
  EpisodeResult result;

  const size_t user = user_rng.index(kSimulatedUsers);
  const std::string user_id = simulated_user_id(user);
  const UserTaste taste = taste_for(user, domain.catalog, schema);
  UserGoal goal = sample_goal(domain.catalog, schema, user_rng, &taste,
                              profile.loyalty);
  result.transcript.user_id = user_id;
  DialogueState state;
  int turn_index = 0;

  auto hear = [&](const SimulatedTurn& st) {
    Utterance u = st.utterance;
    u.turn_index = turn_index++;
    result.transcript.turns.push_back(u);
    Understanding parsed = understand(domain, models.intent_model, u.text, state);
    state = update_state(state, parsed.act, schema);
  };

  hear(user_turn(goal, profile, std::nullopt, state, domain.catalog, user_rng));
  Situation now = assess(models, models.factor_model, state, user_id);

  for (int t = 0; t < cfg.max_turns; ++t) {
    PolicyAction action;
    double reward = cfg.reward_turn;
    if (!options.mask_illegal && options.mode == ActionMode::kPolicy &&
        options.epsilon > 0.0 && policy_rng.uniform() < options.epsilon) {
      action = now.inventory[policy_rng.index(now.inventory.size())];
    } else {
      action = choose(q, now, options.mode, options.epsilon, policy_rng);
    }

    PolicyAction executed = action;
    if (std::find(now.legal.begin(), now.legal.end(), action) == now.legal.end()) {
      reward += cfg.reward_illegal;
      executed = PolicyAction{MachineActKind::kFallback, ""};
    }
    MachineAct act = realize(executed, now, state, schema, user_id);
    state = apply_machine_act(state, act, schema);
    Phrase said = phrase(act, state, domain.catalog, templates,
                         prompt_key_for(act, schema));
    result.template_ids.push_back(said.template_id);
    result.transcript.turns.push_back(
        Utterance{Speaker::kMachine, said.text, turn_index++, act});
    ++result.machine_turns;

    bool terminal = false;
    Situation next;
    if (act.kind == MachineActKind::kPlaceOrder) {
      terminal = true;
      result.order_placed = true;
      result.transcript.final_order = act.order;
      result.success = goal.acceptable_products.count(*state.accepted_item) > 0;
      if (result.success) reward += cfg.reward_order;
    } else {
      SimulatedTurn reply =
          user_turn(goal, profile, act, state, domain.catalog, user_rng);
      if (reply.annotation.true_act == UserActKind::kBye) {
        // The user left; the environment ends the episode.
        Utterance u = reply.utterance;
        u.turn_index = turn_index++;
        result.transcript.turns.push_back(u);
        terminal = true;
      } else {
        hear(reply);
        next = assess(models, models.factor_model, state, user_id);
      }
    }
    if (t + 1 == cfg.max_turns) terminal = true;

    if (options.learn != nullptr) {
      q_update(*options.learn, now.key, action, reward,
               terminal ? std::nullopt : std::optional<StateKey>(next.key),
               next.legal, cfg);
    }
    result.total_reward += reward;
    if (terminal) break;
    now = std::move(next);
  }
  return result;
}

void to_json(json& j, const EvalMetrics& m) {
  j = json{{"dialogues", m.dialogues},
           {"successes", m.successes},
           {"success_rate", m.success_rate},
           {"avg_turns", m.avg_turns},
           {"avg_reward", m.avg_reward}};
}

EvalMetrics evaluate(const Models& models, const QTable& q,
                     const UserProfile& profile, size_t n, uint64_t seed,
                     ActionMode mode) {
  EvalMetrics m;
  m.dialogues = n;
  if (n == 0) return m;
  EpisodeOptions options;
  options.mode = mode;
  options.epsilon = 0.0;
  double turns = 0.0, reward = 0.0;
  for (size_t i = 0; i < n; ++i) {
    RandomSource user_rng(RandomSource::derive(seed, i));
    RandomSource policy_rng(RandomSource::derive(~seed, i));
    EpisodeResult r = run_episode(models, q, models.domain.templates, profile,
                                  options, user_rng, policy_rng);
    if (r.success) ++m.successes;
    turns += r.machine_turns;
    reward += r.total_reward;
  }
  m.success_rate = static_cast<double>(m.successes) / static_cast<double>(n);
  m.avg_turns = turns / static_cast<double>(n);
  m.avg_reward = reward / static_cast<double>(n);
  return m;
}

}  // namespace convreco

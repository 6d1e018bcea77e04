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

// Goal-driven user simulation.
//
// The simulator stands in for logged chats between users and human agents.
// It produces (a) unlabeled conversations ending in orders, played against a
// scripted teacher agent, and (b) the environment for policy training and
// evaluation. Hidden annotations (the true act and slots of each user turn)
// are kept in a separate structure that no training entry point accepts.

#ifndef CONVRECO_SIMULATOR_HPP_
#define CONVRECO_SIMULATOR_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "convreco/catalog.hpp"
#include "convreco/core.hpp"
#include "convreco/dialogue_state.hpp"
#include "convreco/engine.hpp"
#include "convreco/nlg.hpp"
#include "convreco/random.hpp"

namespace convreco {

struct UserGoal {
  std::vector<SlotValue> target_constraints;
  std::set<std::string> acceptable_products;

  const SlotValue* value_for(const std::string& slot) const;
};

struct UserProfile {
  // User turns tolerated before quitting.
  int patience = 12;
  // Probability of answering an asked slot.
  double cooperativeness = 0.9;
  // Probability of volunteering one extra unasked slot per inform.
  double verbosity = 0.3;
  // Probability that an inform carries trailing distractor words.
  double distractor_rate = 0.1;
  // Per-turn probability of abandoning the chat.
  double dropout = 0.02;
  // Probability that a goal slot takes the user's preferred value.
  double loyalty = 0.7;
  // Teacher only: probability of pitching products before all slots are known.
  double teacher_pitch_rate = 0.3;

  std::vector<std::string> violations() const;
};

void to_json(json& j, const UserProfile& p);
void from_json(const json& j, UserProfile& p);

struct HiddenAnnotation {
  int turn_index = 0;
  UserActKind true_act = UserActKind::kChitchat;
  std::vector<SlotValue> true_slots;
  std::optional<std::string> true_item;
};

void to_json(json& j, const HiddenAnnotation& a);
void from_json(const json& j, HiddenAnnotation& a);

struct SimulatedTurn {
  Utterance utterance;
  HiddenAnnotation annotation;
};

// Stable per-user preferred values, one per required slot.
using UserTaste = std::map<std::string, std::string>;

// Deterministic in (user index, catalog).
UserTaste taste_for(size_t user_index, const Catalog& catalog,
                    const SlotSchema& schema);

// Draws each required slot uniformly from the values the catalog realizes
// (or, with probability `loyalty`, takes the taste's value), until some
// product satisfies all of them. Throws Error("catalog too sparse") after
// 1,000 failed draws and on an empty catalog.
UserGoal sample_goal(const Catalog& catalog, const SlotSchema& schema,
                     RandomSource& rng, const UserTaste* taste = nullptr,
                     double loyalty = 0.0);

// The user's reply to `machine_act`; no act means the user opens the chat.
// `history` is the agent's view of the dialogue so far.
SimulatedTurn user_turn(const UserGoal& goal, const UserProfile& profile,
                        const std::optional<MachineAct>& machine_act,
                        const DialogueState& history, const Catalog& catalog,
                        RandomSource& rng);

struct GeneratedCorpus {
  std::vector<Conversation> conversations;
  // Parallel to `conversations`; one entry per user turn.
  std::vector<std::vector<HiddenAnnotation>> annotations;
};

// n chats between simulated users and the scripted teacher agent, which asks
// missing required slots in order, sometimes pitches products early, then
// recommends constraint-matching products and places the order on accept.
GeneratedCorpus generate_corpus(size_t n, const Domain& domain,
                                const UserProfile& profile, RandomSource& rng);

// JSON-lines I/O. Sidecar lines are {"conversation": i, "turns": [...]}.
std::string corpus_to_jsonl(const std::vector<Conversation>& conversations);
std::vector<Conversation> corpus_from_jsonl(std::string_view text);
std::string annotations_to_jsonl(
    const std::vector<std::vector<HiddenAnnotation>>& annotations);
std::vector<std::vector<HiddenAnnotation>> annotations_from_jsonl(
    std::string_view text);

// Pool of simulated user ids.
std::string simulated_user_id(size_t index);
inline constexpr size_t kSimulatedUsers = 200;

struct EpisodeOptions {
  ActionMode mode = ActionMode::kPolicy;
  double epsilon = 0.0;
  // When set, every transition is applied to this table with q_update.
  QTable* learn = nullptr;
  // When false, exploration may pick acts outside the legal set; those are
  // penalized with reward_illegal and executed as fallback.
  bool mask_illegal = true;
};

struct EpisodeResult {
  bool success = false;
  bool order_placed = false;
  int machine_turns = 0;
  double total_reward = 0.0;
  std::vector<std::string> template_ids;
  Conversation transcript;
};

// One dialogue between the agent in `models` and a fresh simulated user.
// `user_rng` drives the goal and the user; `policy_rng` drives exploration.
EpisodeResult run_episode(const Models& models, const QTable& q,
                          std::span<const Template> templates,
                          const UserProfile& profile,
                          const EpisodeOptions& options, RandomSource& user_rng,
                          RandomSource& policy_rng);

struct EvalMetrics {
  size_t dialogues = 0;
  size_t successes = 0;
  double success_rate = 0.0;
  double avg_turns = 0.0;
  double avg_reward = 0.0;
};

void to_json(json& j, const EvalMetrics& m);

// n dialogues, epsilon 0, episode i seeded with RandomSource::derive(seed, i)
// so different policies face identical users.
EvalMetrics evaluate(const Models& models, const QTable& q,
                     const UserProfile& profile, size_t n, uint64_t seed,
                     ActionMode mode = ActionMode::kPolicy);

}  // namespace convreco

#endif  // CONVRECO_SIMULATOR_HPP_

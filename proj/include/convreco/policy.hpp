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

// Dialogue policy: abstract state keys, action legality, epsilon-greedy
// selection and tabular Q-learning from the delayed order reward.

#ifndef CONVRECO_POLICY_HPP_
#define CONVRECO_POLICY_HPP_

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "convreco/core.hpp"
#include "convreco/dialogue_state.hpp"
#include "convreco/random.hpp"

namespace convreco {

// A machine act kind plus, for ask, the slot it asks about. This is the unit
// the Q-table scores; payloads (items, orders) are filled in afterwards.
struct PolicyAction {
  MachineActKind kind = MachineActKind::kFallback;
  std::string slot;

  // "ask:food", "recommend", ...
  std::string encode() const;
  static std::optional<PolicyAction> decode(std::string_view text);
  bool operator==(const PolicyAction&) const = default;
};

struct StateKey {
  // One character per required slot in schema order, '1' when filled.
  std::string required_filled_mask;
  int turn_bucket = 0;    // turns 0-2, 3-5, 6-9, >=10
  int reject_bucket = 0;  // rejected items 0, 1-2, >=3
  bool candidate_flag = false;
  std::optional<UserActKind> last_user_act;

  std::string encode() const;
  bool operator==(const StateKey&) const = default;
};

struct PolicyConfig {
  double epsilon = 0.1;
  double alpha = 0.1;
  double gamma = 0.95;
  double reward_order = 1.0;
  double reward_turn = -0.02;
  double reward_illegal = -0.1;
  int max_turns = 20;

  std::vector<std::string> violations(const SlotSchema& schema) const;
};

void to_json(json& j, const PolicyConfig& c);
void from_json(const json& j, PolicyConfig& c);

class QTable {
 public:
  struct Entry {
    double value = 0.0;
    long visits = 0;
  };

  // Absent entries read as 0.
  double value(const std::string& state, const std::string& action) const;
  long visits(const std::string& state, const std::string& action) const;
  void set(const std::string& state, const std::string& action, Entry e);
  Entry& at(const std::string& state, const std::string& action);

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double max_abs_value() const;

  // Sorted (state, action) order; used for stable serialization.
  std::vector<std::pair<std::pair<std::string, std::string>, Entry>> sorted()
      const;

  friend void to_json(json& j, const QTable& q);
  friend void from_json(const json& j, QTable& q);

 private:
  static std::string join(const std::string& s, const std::string& a) {
    return s + '\x1f' + a;
  }
  std::unordered_map<std::string, Entry> entries_;
};

StateKey abstract_state(const DialogueState& state, const SlotSchema& schema,
                        bool has_candidates);

// Legal actions in the fixed tie-break order: act kind, then slot order.
std::vector<PolicyAction> legal_actions(const DialogueState& state,
                                        const SlotSchema& schema,
                                        bool has_candidates);

// Every action the agent can express: ask for each required slot, then the
// remaining act kinds in fixed order.
std::vector<PolicyAction> action_inventory(const SlotSchema& schema);

// Epsilon-greedy. Throws Error on an empty legal set.
PolicyAction select_action(const QTable& q, const StateKey& key,
                           const std::vector<PolicyAction>& legal,
                           const PolicyConfig& cfg, RandomSource& rng);

// Q(s,a) += alpha * (r + gamma * max_{a' in next_legal} Q(s',a') - Q(s,a)).
// A missing next state is terminal and bootstraps 0.
void q_update(QTable& q, const std::string& state, const std::string& action,
              double reward, const std::optional<std::string>& next_state,
              const std::vector<std::string>& next_legal,
              const PolicyConfig& cfg);

void q_update(QTable& q, const StateKey& key, const PolicyAction& action,
              double reward, const std::optional<StateKey>& next_key,
              const std::vector<PolicyAction>& next_legal,
              const PolicyConfig& cfg);

}  // namespace convreco

#endif  // CONVRECO_POLICY_HPP_

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

#include <algorithm>
#include <chrono>
#include <cmath>

#include "convreco/dialogue_state.hpp"
#include "convreco/pipeline.hpp"
#include "convreco/policy.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

namespace convreco {
namespace {

using testing::sv;

SlotSchema two_slot_schema() {
  SlotSchema s;
  s.slots = {{"food", ValueDomain::kEnumerated, true, "ask_food"},
             {"location", ValueDomain::kOpenText, true, "ask_location"}};
  return s;
}

PolicyAction ask(const std::string& slot) { return {MachineActKind::kAsk, slot}; }
PolicyAction of(MachineActKind kind) { return {kind, ""}; }

TEST_CASE("action encoding round-trips") {
  for (const auto& a : action_inventory(testing::small_schema())) {
    CHECK(PolicyAction::decode(a.encode()) == a);
  }
  CHECK(ask("food").encode() == "ask:food");
  CHECK_FALSE(PolicyAction::decode("ask").has_value());
  CHECK_FALSE(PolicyAction::decode("recommend:x").has_value());
  CHECK_FALSE(PolicyAction::decode("dance").has_value());
}

TEST_CASE("abstract_state examples") {
  const SlotSchema s = two_slot_schema();
  DialogueState st;
  st.filled["food"] = sv("food", "japanese");
  st.turn_count = 3;
  st.last_user_act = UserActKind::kInform;
  StateKey k = abstract_state(st, s, true);
  CHECK(k.required_filled_mask == "10");
  CHECK(k.turn_bucket == 1);
  CHECK(k.reject_bucket == 0);
  CHECK(k.candidate_flag);
  CHECK(k.last_user_act == UserActKind::kInform);
  CHECK(k.encode() == "m=10|t=1|r=0|c=1|u=inform");

  StateKey fresh = abstract_state({}, s, false);
  CHECK(fresh.required_filled_mask == "00");
  CHECK(fresh.turn_bucket == 0);
  CHECK(fresh.encode() == "m=00|t=0|r=0|c=0|u=none");

  DialogueState rejects;
  rejects.shown_items = {"a", "b", "c", "d"};
  rejects.rejected_items = {"a", "b", "c", "d"};
  CHECK(abstract_state(rejects, s, false).reject_bucket == 2);
  rejects.rejected_items = {"a"};
  CHECK(abstract_state(rejects, s, false).reject_bucket == 1);

  for (int t : {0, 2, 3, 5, 6, 9, 10, 40}) {
    DialogueState x;
    x.turn_count = t;
    const int expected = t <= 2 ? 0 : t <= 5 ? 1 : t <= 9 ? 2 : 3;
    CHECK(abstract_state(x, s, false).turn_bucket == expected);
  }
}

TEST_CASE("legal_actions") {
  const SlotSchema s = two_slot_schema();
  CHECK(legal_actions({}, s, false) ==
        std::vector<PolicyAction>{ask("food"), ask("location"),
                                  of(MachineActKind::kGreet),
                                  of(MachineActKind::kFallback)});
  CHECK(legal_actions({}, s, true) ==
        std::vector<PolicyAction>{ask("food"), ask("location"),
                                  of(MachineActKind::kRecommend),
                                  of(MachineActKind::kGreet),
                                  of(MachineActKind::kFallback)});

  DialogueState full;
  full.filled["food"] = sv("food", "japanese");
  full.filled["location"] = sv("location", "95070");
  full.shown_items = {"p1"};
  full.accepted_item = "p1";
  full.last_machine_act = MachineActKind::kRecommend;
  CHECK(legal_actions(full, s, false) ==
        std::vector<PolicyAction>{of(MachineActKind::kConfirm),
                                  of(MachineActKind::kPlaceOrder),
                                  of(MachineActKind::kFallback)});
  auto with = legal_actions(full, s, true);
  CHECK(std::find(with.begin(), with.end(), of(MachineActKind::kRecommend)) !=
        with.end());
}

TEST_CASE("action_inventory lists every expressible act") {
  auto inv = action_inventory(two_slot_schema());
  CHECK(inv == std::vector<PolicyAction>{
                   ask("food"), ask("location"), of(MachineActKind::kRecommend),
                   of(MachineActKind::kConfirm), of(MachineActKind::kPlaceOrder),
                   of(MachineActKind::kGreet), of(MachineActKind::kFallback)});
}

TEST_CASE("select_action") {
  const SlotSchema s = two_slot_schema();
  StateKey key = abstract_state({}, s, true);
  auto legal = legal_actions({}, s, true);
  PolicyConfig greedy;
  greedy.epsilon = 0.0;
  RandomSource rng(1);

  QTable zero;
  CHECK(select_action(zero, key, legal, greedy, rng) == ask("food"));

  QTable q;
  q.set(key.encode(), "ask:food", {0.5, 1});
  q.set(key.encode(), "recommend", {0.7, 1});
  CHECK(select_action(q, key, legal, greedy, rng) == of(MachineActKind::kRecommend));
  CHECK(select_action(q, key, legal, greedy, rng) ==
        select_action(q, key, legal, greedy, rng));

  PolicyConfig explore;
  explore.epsilon = 1.0;
  RandomSource a(77), b(77);
  std::set<std::string> seen;
  for (int i = 0; i < 200; ++i) {
    PolicyAction x = select_action(q, key, legal, explore, a);
    CHECK(x == select_action(q, key, legal, explore, b));
    CHECK(std::find(legal.begin(), legal.end(), x) != legal.end());
    seen.insert(x.encode());
  }
  CHECK(seen.size() == legal.size());

  CHECK_THROWS_AS(select_action(q, key, {}, greedy, rng), Error);
}

TEST_CASE("place_order is only selected when legal") {
  const SlotSchema s = two_slot_schema();
  QTable q;
  RandomSource rng(5);
  PolicyConfig cfg;
  cfg.epsilon = 0.3;
  for (int i = 0; i < 2000; ++i) {
    DialogueState st;
    if (rng.bernoulli(0.5)) st.filled["food"] = sv("food", "japanese");
    if (rng.bernoulli(0.5)) st.filled["location"] = sv("location", "95070");
    if (rng.bernoulli(0.5)) {
      st.shown_items = {"p1"};
      if (rng.bernoulli(0.5)) st.accepted_item = "p1";
    }
    const bool cands = rng.bernoulli(0.5);
    StateKey key = abstract_state(st, s, cands);
    q.set(key.encode(), "place_order", {10.0, 1});
    PolicyAction a = select_action(q, key, legal_actions(st, s, cands), cfg, rng);
    if (a.kind == MachineActKind::kPlaceOrder) CHECK(can_place_order(st, s));
  }
}

TEST_CASE("q_update arithmetic") {
  PolicyConfig cfg;
  cfg.alpha = 0.5;
  QTable q;
  q_update(q, "s", "a", 1.0, std::nullopt, {}, cfg);
  CHECK(q.value("s", "a") == doctest::Approx(0.5));
  CHECK(q.visits("s", "a") == 1);

  cfg.alpha = 0.1;
  cfg.gamma = 0.9;
  QTable r;
  r.set("s2", "b", {1.0, 1});
  r.set("s2", "c", {-3.0, 1});
  q_update(r, "s1", "a", -0.02, std::string("s2"), {"b", "c"}, cfg);
  CHECK(r.value("s1", "a") == doctest::Approx(0.088));

  QTable z;
  z.set("s1", "a", {0.0, 0});
  q_update(z, "s1", "a", 0.0, std::string("s2"), {"b"}, cfg);
  CHECK(z.value("s1", "a") == 0.0);
}

TEST_CASE("Q-table JSON is sorted and round-trips") {
  QTable q;
  q.set("s2", "b", {0.25, 3});
  q.set("s1", "z", {-1.5, 1});
  q.set("s1", "a", {2.0, 2});
  json j = q;
  REQUIRE(j.size() == 3);
  CHECK(j[0]["state_key"] == "s1");
  CHECK(j[0]["act"] == "a");
  CHECK(j[2]["state_key"] == "s2");
  QTable back = j.get<QTable>();
  CHECK(json(back) == j);
  CHECK(q.max_abs_value() == 2.0);
  CHECK_THROWS_AS(q.set("s", "a", {std::nan(""), 0}), Error);
}

TEST_CASE("toy MDP Q-learning matches value iteration") {
  const auto mdp = testing::ToyMdp::standard();
  const auto start = std::chrono::steady_clock::now();
  const auto oracle = testing::value_iteration(mdp);
  const auto run = testing::learn_toy_mdp(mdp, 1.0, 10000);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double worst = 0.0;
  for (int s = 0; s < testing::ToyMdp::kStates; ++s) {
    for (int a = 0; a < testing::ToyMdp::kActions; ++a) {
      worst = std::max(worst, std::abs(run.q.value(testing::ToyMdp::state_name(s),
                                                   testing::ToyMdp::action_name(a)) -
                                       oracle[s][a]));
    }
  }
  CHECK(worst <= 1e-6);
  CHECK(run.updates <= 10000);
  CHECK(testing::greedy(run.q) == testing::greedy(oracle));
  CHECK(seconds < 1.0);
}

TEST_CASE("policy config checks") {
  const SlotSchema s = two_slot_schema();
  CHECK(PolicyConfig{}.violations(s).empty());
  PolicyConfig bad;
  bad.gamma = 1.0;
  bad.max_turns = 3;
  CHECK(bad.violations(s).size() == 2);
  json j = PolicyConfig{};
  CHECK(json(j.get<PolicyConfig>()) == j);
}

TEST_CASE("train_policy: empty run and Q bound") {
  const Models& models = testing::trained_default().bundle.models;
  UserProfile profile;
  auto none = train_policy(models, profile, 0, 11);
  CHECK(none.q_table.empty());
  CHECK(none.curve.empty());

  auto run = train_policy(models, profile, 3000, 11, 1000);
  const PolicyConfig& c = models.policy;
  const double bound =
      (c.reward_order + c.max_turns * std::abs(c.reward_turn)) / (1.0 - c.gamma);
  CHECK(run.q_table.max_abs_value() <= bound);
  REQUIRE(run.curve.size() == 3);
  CHECK(run.curve.back().episode == 3000);

  auto again = train_policy(models, profile, 3000, 11, 1000);
  CHECK(json(again.q_table) == json(run.q_table));
  CHECK(curve_to_csv(again.curve) == curve_to_csv(run.curve));
}

}  // namespace
}  // namespace convreco

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

#include <cmath>

#include "convreco/dialogue_state.hpp"
#include "convreco/recommender.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

namespace convreco {
namespace {

using testing::sv;

FactorModel zero_model(int k) {
  FactorModel m;
  m.k = k;
  return m;
}

TEST_CASE("predict arithmetic") {
  FactorModel m = zero_model(2);
  m.global_bias = 3.0;
  CHECK(predict(m, "u", "i") == doctest::Approx(3.0));

  m.users["u"] = {0.1, {0.1, 0.2}};
  m.items["i"] = {-0.1, {1.0, 0.5}};
  CHECK(predict(m, "u", "i") == doctest::Approx(3.2));

  FactorModel n = zero_model(2);
  n.global_bias = 0.5;
  n.items["i"] = {0.2, {1.0, 1.0}};
  CHECK(predict(n, "stranger", "i") == doctest::Approx(0.7));
}

TEST_CASE("single record with zero init keeps the bias at zero") {
  Hyperparams h;
  h.k = 2;
  h.epochs = 1;
  h.init_scale = 0.0;
  std::vector<InteractionRecord> data = {{"u1", "p1", 1.0}};
  FactorModel m = train_mf(data, h);
  CHECK(m.global_bias == 1.0);
  CHECK(m.users.at("u1").bias == 0.0);
  CHECK(m.items.at("p1").bias == 0.0);
}

TEST_CASE("train_mf input checks") {
  CHECK_THROWS_AS(train_mf(std::vector<InteractionRecord>{}, Hyperparams{}), Error);
  Hyperparams bad;
  bad.k = 0;
  CHECK_THROWS_AS(train_mf(std::vector<InteractionRecord>{{"u", "i", 1.0}}, bad),
                  Error);
  CHECK_FALSE(bad.violations().empty());
  CHECK(Hyperparams{}.violations().empty());
}

TEST_CASE("gradient check against central differences") {
  CHECK(testing::mf_gradient_check_error(42, 1e-5) <= 1e-4);
}

TEST_CASE("synthetic rank-2 recovery beats the global mean") {
  auto r = testing::run_synthetic_mf(42);
  CHECK(r.heldout_rmse <= 0.6 * r.baseline_rmse);
}

TEST_CASE("more epochs fit the training data at least as well") {
  auto data = testing::synthetic_rank2(50, 40, 0.2, 42);
  Hyperparams h = testing::synthetic_hyperparams();
  Hyperparams one = h;
  one.epochs = 1;
  CHECK(mean_squared_error(train_mf(data.train, h), data.train) <=
        mean_squared_error(train_mf(data.train, one), data.train));
}

TEST_CASE("training is deterministic") {
  auto data = testing::synthetic_rank2(20, 15, 0.3, 3);
  Hyperparams h;
  h.epochs = 20;
  CHECK(json(train_mf(data.train, h)).dump() == json(train_mf(data.train, h)).dump());
}

TEST_CASE("slot_match_score") {
  Product p{"p", "P", {{"food", "japanese"}, {"location", "95070"}}, 1.0};
  CHECK(slot_match_score(p, {sv("food", "japanese"), sv("location", "95070"),
                             sv("diet", "vegan")}) == doctest::Approx(2.0 / 3.0));
  CHECK(slot_match_score(p, {}) == 1.0);
  CHECK(slot_match_score(p, {sv("food", "japanese")}) == 1.0);
}

TEST_CASE("recommend skips rejected items and favours slot matches") {
  SlotSchema s;
  s.slots = {{"food", ValueDomain::kEnumerated, true, "ask_food"},
             {"diet", ValueDomain::kEnumerated, false, "ask_diet"}};
  Catalog c({{"p1", "A", {{"food", "italian"}}, 1.0},
             {"p2", "B", {{"food", "italian"}, {"diet", "vegan"}}, 1.0},
             {"p3", "C", {{"food", "japanese"}, {"diet", "vegan"}}, 1.0},
             {"p4", "D", {{"food", "japanese"}}, 1.0}},
            s);
  DialogueState st;
  st.filled["food"] = sv("food", "japanese");
  st.filled["diet"] = sv("diet", "vegan");
  auto out = recommend(zero_model(2), st, "u", c, 3);
  REQUIRE(out.size() == 2);
  CHECK(out[0].product_id == "p3");
  CHECK(out[1].product_id == "p4");
  CHECK(out[0].score > out[1].score);

  st.shown_items = {"p3", "p4"};
  st.rejected_items = {"p3", "p4"};
  CHECK(recommend(zero_model(2), st, "u", c, 3).empty());
}

TEST_CASE("recommend ties break in catalog order") {
  Catalog c = testing::small_catalog();
  auto out = recommend(zero_model(2), DialogueState{}, "u", c, 10);
  REQUIRE(out.size() == 4);
  CHECK(out[0].product_id == "p1");
  CHECK(out[3].product_id == "p4");
}

TEST_CASE("randomized recommend calls respect constraints and history") {
  const Domain& d = testing::default_domain();
  const auto& products = d.catalog.products();
  RandomSource rng(99);
  FactorModel model = zero_model(3);
  model.global_bias = 0.3;
  for (size_t u = 0; u < 10; ++u) {
    auto& lf = model.users["u" + std::to_string(u)];
    lf.bias = rng.uniform(-1, 1);
    lf.factors = {rng.normal(), rng.normal(), rng.normal()};
  }
  for (const auto& p : products) {
    auto& lf = model.items[p.id];
    lf.bias = rng.uniform(-1, 1);
    lf.factors = {rng.normal(), rng.normal(), rng.normal()};
  }
  for (int call = 0; call < 10000; ++call) {
    DialogueState st;
    for (const auto& def : d.schema.slots) {
      if (!rng.bernoulli(0.5)) continue;
      auto values = d.catalog.values_for(def.name);
      if (!values.empty()) st.filled[def.name] = sv(def.name, rng.pick(values));
    }
    for (const auto& p : products) {
      if (rng.bernoulli(0.1)) {
        st.shown_items.push_back(p.id);
        if (rng.bernoulli(0.5)) st.rejected_items.insert(p.id);
      }
    }
    const size_t n = 1 + rng.index(5);
    const double alpha = rng.uniform();
    const std::string user = "u" + std::to_string(rng.index(12));
    auto out = recommend(model, st, user, d.catalog, n, alpha);
    CHECK(out.size() <= n);
    const auto required = filled_constraints(st, d.schema, true);
    for (size_t i = 0; i < out.size(); ++i) {
      const Product* p = d.catalog.find(out[i].product_id);
      REQUIRE(p != nullptr);
      CHECK(st.rejected_items.count(p->id) == 0);
      CHECK_FALSE(st.is_shown(p->id));
      CHECK(satisfies(*p, required));
      CHECK((out[i].score >= 0.0 && out[i].score <= 1.0));
      if (i > 0) CHECK(out[i].score <= out[i - 1].score);
    }
  }
}

TEST_CASE("feedback_update moves the prediction toward the outcome") {
  Hyperparams h;
  h.k = 2;
  h.regularization = 0.0;
  h.learning_rate = 0.1;
  FactorModel m = zero_model(2);
  m.users["u"] = {0.0, {0.3, -0.2}};
  m.items["i"] = {0.0, {0.1, 0.4}};
  m.global_bias = -predict(m, "u", "i");
  REQUIRE(predict(m, "u", "i") == doctest::Approx(0.0));
  FactorModel up = feedback_update(m, "u", "i", Feedback::kAccept, h);
  CHECK(predict(up, "u", "i") > 0.0);
  CHECK(predict(up, "u", "i") == predict(up, "u", "i"));

  m.global_bias += 1.0;
  FactorModel down = feedback_update(m, "u", "i", Feedback::kReject, h);
  CHECK(predict(down, "u", "i") < 1.0);
  // The input model is untouched.
  CHECK(predict(m, "u", "i") == doctest::Approx(1.0));
}

TEST_CASE("predict stays finite") {
  FactorModel m = zero_model(2);
  m.users["u"] = {1e3, {1e3, -1e3}};
  m.items["i"] = {-1e3, {1e3, 1e3}};
  CHECK(std::isfinite(predict(m, "u", "i")));
  CHECK(std::isfinite(predict(m, "", "")));
}

TEST_CASE("factor model and hyperparams JSON round-trip") {
  auto data = testing::synthetic_rank2(10, 8, 0.5, 1);
  FactorModel m = train_mf(data.train, Hyperparams{});
  json j = m;
  CHECK(json(j.get<FactorModel>()) == j);
  Hyperparams h = testing::synthetic_hyperparams();
  CHECK(json(json(h).get<Hyperparams>()) == json(h));
}

TEST_CASE("interactions CSV") {
  std::vector<InteractionRecord> data = {{"u1", "p1", 1.0}, {"u2", "p3", 0.0}};
  const std::string text = format_interactions_csv(data);
  CHECK(text.rfind("user_id,product_id,value\n", 0) == 0);
  auto back = parse_interactions_csv(text);
  REQUIRE(back.size() == 2);
  CHECK(back[1].product_id == "p3");
  CHECK(back[0].value == 1.0);
  CHECK_THROWS_WITH_AS(parse_interactions_csv("u1,p1\n"),
                       "interactions line 1: expected 3 fields", Error);
  CHECK_THROWS_AS(parse_interactions_csv("u1,p1,x\n"), Error);
}

}  // namespace
}  // namespace convreco

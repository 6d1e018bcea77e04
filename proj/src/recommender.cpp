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

#include "convreco/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convreco/random.hpp"

namespace convreco {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LatentFactors& ensure(std::map<std::string, LatentFactors>& table,
                      const std::string& id, int k) {
  auto [it, inserted] = table.try_emplace(id);
  if (inserted) it->second.factors.assign(static_cast<size_t>(k), 0.0);
  return it->second;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

std::vector<std::string> Hyperparams::violations() const {
  std::vector<std::string> out;
  if (k <= 0) out.push_back("k must be positive");
  if (!(learning_rate > 0.0)) out.push_back("learning_rate must be positive");
  if (regularization < 0.0) out.push_back("regularization must be nonnegative");
  if (epochs <= 0) out.push_back("epochs must be positive");
  if (!(init_scale >= 0.0)) out.push_back("init_scale must be nonnegative");
  return out;
}

double predict(const FactorModel& model, const std::string& user,
               const std::string& item) {
  double score = model.global_bias;
  auto u = model.users.find(user);
  auto i = model.items.find(item);
  if (u != model.users.end()) score += u->second.bias;
  if (i != model.items.end()) score += i->second.bias;
  if (u != model.users.end() && i != model.items.end()) {
    const auto& p = u->second.factors;
    const auto& q = i->second.factors;
    for (size_t f = 0; f < p.size() && f < q.size(); ++f) score += p[f] * q[f];
  }
  return score;
}

void sgd_step(FactorModel& model, const InteractionRecord& record,
              const Hyperparams& h) {
  LatentFactors& u = ensure(model.users, record.user_id, model.k);
  LatentFactors& i = ensure(model.items, record.product_id, model.k);
  const double e = record.value - predict(model, record.user_id, record.product_id);
  const double lr = h.learning_rate;
  const double reg = h.regularization;
  u.bias += lr * (e - reg * u.bias);
  i.bias += lr * (e - reg * i.bias);
  for (size_t f = 0; f < u.factors.size(); ++f) {
    const double p_old = u.factors[f];
    u.factors[f] += lr * (e * i.factors[f] - reg * p_old);
    i.factors[f] += lr * (e * p_old - reg * i.factors[f]);
  }
}

FactorModel train_mf(std::span<const InteractionRecord> data,
                     const Hyperparams& h) {
  if (data.empty()) throw Error("no interaction data");
  auto bad = h.violations();
  if (!bad.empty()) throw Error("hyperparams: " + bad.front());

  FactorModel model;
  model.k = h.k;
  double sum = 0.0;
  for (const auto& r : data) sum += r.value;
  model.global_bias = sum / static_cast<double>(data.size());

  RandomSource rng(h.seed);
  auto init = [&](std::map<std::string, LatentFactors>& table,
                  const std::string& id) {
    auto [it, inserted] = table.try_emplace(id);
    if (!inserted) return;
    it->second.factors.resize(static_cast<size_t>(h.k));
    for (auto& f : it->second.factors) {
      f = rng.uniform(-h.init_scale, h.init_scale);
    }
  };
  for (const auto& r : data) {
    init(model.users, r.user_id);
    init(model.items, r.product_id);
  }

  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    for (const auto& r : data) sgd_step(model, r, h);
  }
  return model;
}

double mean_squared_error(const FactorModel& model,
                          std::span<const InteractionRecord> data) {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : data) {
    const double e = r.value - predict(model, r.user_id, r.product_id);
    sum += e * e;
  }
  return sum / static_cast<double>(data.size());
}

double rmse(const FactorModel& model, std::span<const InteractionRecord> data) {
  return std::sqrt(mean_squared_error(model, data));
}

double slot_match_score(const Product& product,
                        const std::vector<SlotValue>& constraints) {
  if (constraints.empty()) return 1.0;
  size_t hits = 0;
  for (const auto& c : constraints) {
    const std::string* v = product.attribute(c.slot);
    if (v != nullptr && *v == c.value) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(constraints.size());
}

std::vector<ScoredProduct> recommend(const FactorModel& model,
                                     const DialogueState& state,
                                     const std::string& user,
                                     const Catalog& catalog, size_t n,
                                     double blend_alpha) {
  const SlotSchema& schema = catalog.schema();
  const auto hard = filled_constraints(state, schema, /*required_only=*/true);
  const auto soft = filled_constraints(state, schema, /*required_only=*/false);

  std::vector<ScoredProduct> scored;
  for (const Product* p : filter_products(catalog, hard)) {
    if (state.rejected_items.count(p->id) > 0 || state.is_shown(p->id)) {
      continue;
    }
    const double score = blend_alpha * sigmoid(predict(model, user, p->id)) +
                         (1.0 - blend_alpha) * slot_match_score(*p, soft);
    scored.push_back(ScoredProduct{p->id, score});
  }
  // Candidates arrive in catalog order; a stable sort keeps that order on ties.
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredProduct& a, const ScoredProduct& b) {
                     return a.score > b.score;
                   });
  if (scored.size() > n) scored.resize(n);
  return scored;
}

FactorModel feedback_update(const FactorModel& model, const std::string& user,
                            const std::string& item, Feedback outcome,
                            const Hyperparams& h) {
  FactorModel next = model;
  sgd_step(next,
           InteractionRecord{user, item, outcome == Feedback::kAccept ? 1.0 : 0.0},
           h);
  return next;
}

void to_json(json& j, const FactorModel& m) {
  auto table = [](const std::map<std::string, LatentFactors>& t) {
    json out = json::object();
    for (const auto& [id, lf] : t) {
      out[id] = json{{"bias", lf.bias}, {"factors", lf.factors}};
    }
    return out;
  };
  j = json{{"k", m.k},
           {"global_bias", m.global_bias},
           {"users", table(m.users)},
           {"items", table(m.items)}};
}

void from_json(const json& j, FactorModel& m) {
  m = FactorModel{};
  m.k = j.at("k").get<int>();
  m.global_bias = j.at("global_bias").get<double>();
  auto table = [&](const json& t, std::map<std::string, LatentFactors>& out) {
    for (const auto& [id, body] : t.items()) {
      LatentFactors lf;
      lf.bias = body.at("bias").get<double>();
      lf.factors = body.at("factors").get<std::vector<double>>();
      if (lf.factors.size() != static_cast<size_t>(m.k)) {
        throw Error("factor_model: \"" + id + "\" has wrong dimension");
      }
      out.emplace(id, std::move(lf));
    }
  };
  table(j.at("users"), m.users);
  table(j.at("items"), m.items);
}

void to_json(json& j, const Hyperparams& h) {
  j = json{{"k", h.k},
           {"learning_rate", h.learning_rate},
           {"regularization", h.regularization},
           {"epochs", h.epochs},
           {"init_scale", h.init_scale},
           {"seed", h.seed}};
}

void from_json(const json& j, Hyperparams& h) {
  Hyperparams d;
  h.k = j.value("k", d.k);
  h.learning_rate = j.value("learning_rate", d.learning_rate);
  h.regularization = j.value("regularization", d.regularization);
  h.epochs = j.value("epochs", d.epochs);
  h.init_scale = j.value("init_scale", d.init_scale);
  h.seed = j.value("seed", d.seed);
}

std::vector<InteractionRecord> parse_interactions_csv(std::string_view text) {
  std::vector<InteractionRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("user_id,", 0) == 0) continue;
    auto c1 = line.find(',');
    auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw Error("interactions line " + std::to_string(line_no) +
                  ": expected 3 fields");
    }
    InteractionRecord r;
    r.user_id = line.substr(0, c1);
    r.product_id = line.substr(c1 + 1, c2 - c1 - 1);
    try {
      r.value = std::stod(line.substr(c2 + 1));
    } catch (const std::exception&) {
      throw Error("interactions line " + std::to_string(line_no) +
                  ": bad value");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_interactions_csv(std::span<const InteractionRecord> data) {
  std::string out = "user_id,product_id,value\n";
  for (const auto& r : data) {
    out += r.user_id + "," + r.product_id + "," + format_double(r.value) + "\n";
  }
  return out;
}

}  // namespace convreco

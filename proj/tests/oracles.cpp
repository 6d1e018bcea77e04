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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "convreco/random.hpp"

namespace convreco::testing {

ToyMdp ToyMdp::standard() {
  ToyMdp m;
  // s0: "a" walks to s1, "b" ends with a small payoff.
  m.next[0] = {1, -1};
  m.reward[0] = {0.0, 0.2};
  // s1: "a" walks to s2 at a cost, "b" returns to s0.
  m.next[1] = {2, 0};
  m.reward[1] = {-0.1, 0.0};
  // s2: "a" ends with the large payoff, "b" steps back.
  m.next[2] = {-1, 1};
  m.reward[2] = {1.0, 0.0};
  return m;
}

std::string ToyMdp::state_name(int s) { return "s" + std::to_string(s); }
std::string ToyMdp::action_name(int a) { return a == 0 ? "a" : "b"; }

QMatrix value_iteration(const ToyMdp& mdp) {
  QMatrix q{};
  for (int iter = 0; iter < 100000; ++iter) {
    QMatrix next{};
    double delta = 0.0;
    for (int s = 0; s < ToyMdp::kStates; ++s) {
      for (int a = 0; a < ToyMdp::kActions; ++a) {
        const int t = mdp.next[s][a];
        double future = 0.0;
        if (t >= 0) future = *std::max_element(q[t].begin(), q[t].end());
        next[s][a] = mdp.reward[s][a] + mdp.gamma * future;
        delta = std::max(delta, std::abs(next[s][a] - q[s][a]));
      }
    }
    q = next;
    if (delta < 1e-13) break;
  }
  return q;
}

ToyRun learn_toy_mdp(const ToyMdp& mdp, double alpha, int max_updates) {
  ToyRun run;
  PolicyConfig cfg;
  cfg.alpha = alpha;
  cfg.gamma = mdp.gamma;
  const std::vector<std::string> actions = {ToyMdp::action_name(0),
                                            ToyMdp::action_name(1)};
  while (run.updates < max_updates) {
    for (int s = 0; s < ToyMdp::kStates && run.updates < max_updates; ++s) {
      for (int a = 0; a < ToyMdp::kActions && run.updates < max_updates; ++a) {
        const int t = mdp.next[s][a];
        std::optional<std::string> next;
        if (t >= 0) next = ToyMdp::state_name(t);
        q_update(run.q, ToyMdp::state_name(s), actions[a], mdp.reward[s][a],
                 next, t >= 0 ? actions : std::vector<std::string>{}, cfg);
        ++run.updates;
      }
    }
  }
  return run;
}

std::array<int, ToyMdp::kStates> greedy(const QMatrix& q) {
  std::array<int, ToyMdp::kStates> out{};
  for (int s = 0; s < ToyMdp::kStates; ++s) out[s] = q[s][1] > q[s][0] ? 1 : 0;
  return out;
}

std::array<int, ToyMdp::kStates> greedy(const QTable& q) {
  QMatrix m{};
  for (int s = 0; s < ToyMdp::kStates; ++s) {
    for (int a = 0; a < ToyMdp::kActions; ++a) {
      m[s][a] = q.value(ToyMdp::state_name(s), ToyMdp::action_name(a));
    }
  }
  return greedy(m);
}

double record_loss(const FactorModel& m, const InteractionRecord& r, double reg) {
  const LatentFactors& u = m.users.at(r.user_id);
  const LatentFactors& i = m.items.at(r.product_id);
  double dot = 0.0, norm = u.bias * u.bias + i.bias * i.bias;
  for (size_t f = 0; f < u.factors.size(); ++f) {
    dot += u.factors[f] * i.factors[f];
    norm += u.factors[f] * u.factors[f] + i.factors[f] * i.factors[f];
  }
  const double e = r.value - (m.global_bias + u.bias + i.bias + dot);
  return 0.5 * e * e + 0.5 * reg * norm;
}

double mf_gradient_check_error(uint64_t seed, double step) {
  RandomSource rng(seed);
  constexpr int kUsers = 6, kItems = 5, kRank = 4, kRecords = 20;
  FactorModel model;
  model.k = kRank;
  model.global_bias = rng.uniform(-1.0, 1.0);
  auto fill = [&](LatentFactors& lf) {
    lf.bias = rng.uniform(-0.5, 0.5);
    lf.factors.resize(kRank);
    for (auto& f : lf.factors) f = rng.uniform(-0.5, 0.5);
  };
  for (int u = 0; u < kUsers; ++u) fill(model.users["u" + std::to_string(u)]);
  for (int i = 0; i < kItems; ++i) fill(model.items["i" + std::to_string(i)]);

  Hyperparams h;
  h.k = kRank;
  h.learning_rate = 1e-3;
  h.regularization = 0.05;

  double worst = 0.0;
  for (int n = 0; n < kRecords; ++n) {
    InteractionRecord r{"u" + std::to_string(rng.index(kUsers)),
                        "i" + std::to_string(rng.index(kItems)),
                        rng.uniform(0.0, 5.0)};
    // Parameters touched by the record, as pointers into a scratch copy.
    FactorModel probe = model;
    std::vector<double*> params;
    LatentFactors& pu = probe.users.at(r.user_id);
    LatentFactors& pi = probe.items.at(r.product_id);
    params.push_back(&pu.bias);
    params.push_back(&pi.bias);
    for (auto& f : pu.factors) params.push_back(&f);
    for (auto& f : pi.factors) params.push_back(&f);

    FactorModel stepped = model;
    sgd_step(stepped, r, h);
    std::vector<double> analytic;
    const LatentFactors& su = stepped.users.at(r.user_id);
    const LatentFactors& si = stepped.items.at(r.product_id);
    const LatentFactors& ou = model.users.at(r.user_id);
    const LatentFactors& oi = model.items.at(r.product_id);
    analytic.push_back((su.bias - ou.bias) / h.learning_rate);
    analytic.push_back((si.bias - oi.bias) / h.learning_rate);
    for (int f = 0; f < kRank; ++f) {
      analytic.push_back((su.factors[f] - ou.factors[f]) / h.learning_rate);
    }
    for (int f = 0; f < kRank; ++f) {
      analytic.push_back((si.factors[f] - oi.factors[f]) / h.learning_rate);
    }

    for (size_t p = 0; p < params.size(); ++p) {
      const double saved = *params[p];
      *params[p] = saved + step;
      const double up = record_loss(probe, r, h.regularization);
      *params[p] = saved - step;
      const double down = record_loss(probe, r, h.regularization);
      *params[p] = saved;
      const double numeric = -(up - down) / (2.0 * step);
      const double scale = std::max({std::abs(numeric), std::abs(analytic[p]), 1e-8});
      worst = std::max(worst, std::abs(numeric - analytic[p]) / scale);
    }
  }
  return worst;
}

SyntheticSplit synthetic_rank2(int users, int items, double observed,
                               uint64_t seed) {
  RandomSource rng(seed);
  std::vector<std::array<double, 2>> u(users), v(items);
  for (auto& row : u) row = {rng.normal(), rng.normal()};
  for (auto& row : v) row = {rng.normal(), rng.normal()};
  SyntheticSplit out;
  for (int a = 0; a < users; ++a) {
    for (int b = 0; b < items; ++b) {
      if (!rng.bernoulli(observed)) continue;
      InteractionRecord r{"u" + std::to_string(a), "i" + std::to_string(b),
                          u[a][0] * v[b][0] + u[a][1] * v[b][1]};
      (rng.bernoulli(0.2) ? out.test : out.train).push_back(std::move(r));
    }
  }
  return out;
}

Hyperparams synthetic_hyperparams() {
  Hyperparams h;
  h.k = 2;
  h.learning_rate = 0.05;
  h.regularization = 0.05;
  h.epochs = 1000;
  h.init_scale = 0.1;
  h.seed = 42;
  return h;
}

SyntheticResult run_synthetic_mf(uint64_t seed) {
  SyntheticSplit data = synthetic_rank2(50, 40, 0.2, seed);
  FactorModel m = train_mf(data.train, synthetic_hyperparams());
  SyntheticResult out;
  out.heldout_rmse = rmse(m, data.test);
  double sum = 0.0;
  for (const auto& r : data.test) {
    const double e = r.value - m.global_bias;
    sum += e * e;
  }
  out.baseline_rmse = std::sqrt(sum / static_cast<double>(data.test.size()));
  return out;
}

}  // namespace convreco::testing

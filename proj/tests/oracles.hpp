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

// Independent reference computations shared by the unit tests and the
// acceptance runner.

#ifndef CONVRECO_TESTS_ORACLES_HPP_
#define CONVRECO_TESTS_ORACLES_HPP_

#include <array>
#include <string>
#include <vector>

#include "convreco/policy.hpp"
#include "convreco/recommender.hpp"

namespace convreco::testing {

// Three-state deterministic MDP with two actions per state.
struct ToyMdp {
  static constexpr int kStates = 3;
  static constexpr int kActions = 2;
  // -1 marks a terminal transition.
  std::array<std::array<int, kActions>, kStates> next{};
  std::array<std::array<double, kActions>, kStates> reward{};
  double gamma = 0.9;

  static ToyMdp standard();
  static std::string state_name(int s);
  static std::string action_name(int a);
};

using QMatrix = std::array<std::array<double, ToyMdp::kActions>, ToyMdp::kStates>;

// Value iteration on Q until the largest change is below 1e-13.
QMatrix value_iteration(const ToyMdp& mdp);

struct ToyRun {
  QTable q;
  int updates = 0;
};

// Q-learning by repeated sweeps over every (state, action) pair with the
// library's q_update, stopping at `max_updates`.
ToyRun learn_toy_mdp(const ToyMdp& mdp, double alpha, int max_updates);

// Greedy action per state; ties go to the lower action index.
std::array<int, ToyMdp::kStates> greedy(const QMatrix& q);
std::array<int, ToyMdp::kStates> greedy(const QTable& q);

// Maximum relative error between the SGD update direction and the negative
// central-difference gradient of the regularized squared loss.
double mf_gradient_check_error(uint64_t seed, double step);

// Regularized squared loss of one record: 1/2 e^2 + reg/2 (|b|^2 + |p|^2 +
// |q|^2), written independently of the library.
double record_loss(const FactorModel& m, const InteractionRecord& r, double reg);

struct SyntheticSplit {
  std::vector<InteractionRecord> train;
  std::vector<InteractionRecord> test;
};

// Rank-2 ground truth on users x items with `observed` fraction of entries
// revealed; a fifth of the revealed entries are held out.
SyntheticSplit synthetic_rank2(int users, int items, double observed,
                               uint64_t seed);

struct SyntheticResult {
  double heldout_rmse = 0.0;
  double baseline_rmse = 0.0;
};

// Trains with the hyperparameters used for the synthetic check.
SyntheticResult run_synthetic_mf(uint64_t seed);
Hyperparams synthetic_hyperparams();

}  // namespace convreco::testing

#endif  // CONVRECO_TESTS_ORACLES_HPP_

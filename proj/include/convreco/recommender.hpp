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

// Biased matrix factorization trained by SGD, blended with slot-constraint
// match to rank catalog products inside a conversation.

#ifndef CONVRECO_RECOMMENDER_HPP_
#define CONVRECO_RECOMMENDER_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "convreco/catalog.hpp"
#include "convreco/core.hpp"
#include "convreco/dialogue_state.hpp"

namespace convreco {

struct InteractionRecord {
  std::string user_id;
  std::string product_id;
  // 1.0 = purchase/accept, 0.0 = reject. Ratings files may carry [0, 5].
  double value = 0.0;
};

struct Hyperparams {
  int k = 8;
  double learning_rate = 0.01;
  double regularization = 0.05;
  int epochs = 30;
  double init_scale = 0.1;
  uint64_t seed = 42;

  std::vector<std::string> violations() const;
};

struct LatentFactors {
  double bias = 0.0;
  std::vector<double> factors;
};

struct FactorModel {
  int k = 8;
  double global_bias = 0.0;
  std::map<std::string, LatentFactors> users;
  std::map<std::string, LatentFactors> items;
};

// global + user bias + item bias + <user factors, item factors>. Unknown ids
// contribute zero bias and zero factors.
double predict(const FactorModel& model, const std::string& user,
               const std::string& item);

// One SGD step on the regularized squared loss
//   0.5 * e^2 + 0.5 * reg * (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2),
// where e = value - predict. The item update uses the pre-update user vector.
// Unknown ids are added with zero parameters.
void sgd_step(FactorModel& model, const InteractionRecord& record,
              const Hyperparams& h);

// Factors start uniform in [-init_scale, init_scale], assigned in order of
// first appearance (user before item within a record). global_bias is the
// mean value, fixed before SGD. Epochs visit records in the given order.
// Throws Error on empty data.
FactorModel train_mf(std::span<const InteractionRecord> data,
                     const Hyperparams& h);

double rmse(const FactorModel& model, std::span<const InteractionRecord> data);
double mean_squared_error(const FactorModel& model,
                          std::span<const InteractionRecord> data);

// Fraction of constraints the product satisfies; 1.0 when there are none.
double slot_match_score(const Product& product,
                        const std::vector<SlotValue>& constraints);

struct ScoredProduct {
  std::string product_id;
  double score = 0.0;
};

inline constexpr double kDefaultBlendAlpha = 0.7;

// Candidates pass every filled required-slot constraint and are neither
// shown nor rejected. Score = alpha * sigmoid(predict) + (1 - alpha) *
// slot_match over all filled slots. Top n, ties in catalog order.
std::vector<ScoredProduct> recommend(const FactorModel& model,
                                     const DialogueState& state,
                                     const std::string& user,
                                     const Catalog& catalog, size_t n,
                                     double blend_alpha = kDefaultBlendAlpha);

enum class Feedback { kAccept, kReject };

// One train_mf step with value 1.0 (accept) or 0.0 (reject).
FactorModel feedback_update(const FactorModel& model, const std::string& user,
                            const std::string& item, Feedback outcome,
                            const Hyperparams& h);

void to_json(json& j, const FactorModel& m);
void from_json(const json& j, FactorModel& m);
void to_json(json& j, const Hyperparams& h);
void from_json(const json& j, Hyperparams& h);

// CSV with header `user_id,product_id,value`.
std::vector<InteractionRecord> parse_interactions_csv(std::string_view text);
std::string format_interactions_csv(std::span<const InteractionRecord> data);

}  // namespace convreco

#endif  // CONVRECO_RECOMMENDER_HPP_

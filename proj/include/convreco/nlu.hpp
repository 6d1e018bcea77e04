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

// Language understanding: slot extraction from the catalog gazetteer and
// open-slot patterns, a naive-Bayes act classifier with rule overrides, and
// the distant-supervision aligner that produces its training data from
// unlabeled conversations and their final orders.

#ifndef CONVRECO_NLU_HPP_
#define CONVRECO_NLU_HPP_

#include <map>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "convreco/catalog.hpp"
#include "convreco/core.hpp"

namespace convreco {

// Open-slot patterns compiled once, in canonical schema order.
class SlotPatterns {
 public:
  SlotPatterns() = default;
  // Throws Error when a pattern does not compile or names an unknown slot.
  SlotPatterns(const SlotSchema& schema,
               const std::map<std::string, std::string>& patterns);
  explicit SlotPatterns(const SlotSchema& schema)
      : SlotPatterns(schema, schema.patterns) {}

  const std::vector<std::pair<std::string, std::regex>>& compiled() const {
    return compiled_;
  }

 private:
  std::vector<std::pair<std::string, std::regex>> compiled_;
};

// Longest-match gazetteer scan, then open-slot patterns over the tokens the
// gazetteer did not consume. At most one value per slot; first match wins.
std::vector<SlotValue> extract_slots(std::string_view text,
                                     const Gazetteer& gazetteer,
                                     const SlotPatterns& patterns);

// The product among `candidates` whose normalized name occurs in the text on
// word boundaries. Longest name wins; ties go to the earlier candidate.
std::optional<std::string> match_item_reference(
    std::string_view text, const std::vector<const Product*>& candidates);

// True when the text reads as a question.
bool has_interrogative_cue(std::string_view text);

// Multinomial naive Bayes over whitespace tokens with add-one smoothing.
// Counts are the stored state; probabilities are derived on demand, so a
// serialized model round-trips exactly.
class IntentModel {
 public:
  struct ClassCounts {
    long documents = 0;
    long total_tokens = 0;
    std::map<std::string, long> tokens;
  };

  void add_example(UserActKind act, const std::vector<std::string>& tokens);

  long documents() const { return documents_; }
  const std::map<UserActKind, ClassCounts>& classes() const { return classes_; }
  const std::set<std::string>& vocabulary() const { return vocabulary_; }
  bool observed(UserActKind act) const;

  // log((docs_c + 1) / (N + |acts|)).
  double log_prior(UserActKind act) const;
  // log((count(c, t) + 1) / (total_c + |V| + 1)); unseen tokens share the
  // unknown mass.
  double log_likelihood(UserActKind act, const std::string& token) const;

  friend void to_json(json& j, const IntentModel& m);
  friend void from_json(const json& j, IntentModel& m);

 private:
  std::map<UserActKind, ClassCounts> classes_;
  std::set<std::string> vocabulary_;
  long documents_ = 0;
};

struct ActPrediction {
  UserActKind act = UserActKind::kChitchat;
  // Posterior over act kinds (sums to 1).
  std::map<UserActKind, double> scores;
};

ActPrediction classify_act(std::string_view text, const IntentModel& model,
                           const std::vector<SlotValue>& extracted);

struct PseudoLabeledUtterance {
  Utterance utterance;
  UserActKind act = UserActKind::kChitchat;
  std::vector<SlotValue> slots;
  std::string provenance;
};

struct DistantSupervision {
  std::vector<PseudoLabeledUtterance> examples;
  size_t skipped_conversations = 0;
};

// Pseudo-labels user turns from conversation structure and final orders
// only. Conversations failing validation are skipped and counted.
DistantSupervision distant_supervise(std::span<const Conversation> conversations,
                                     const SlotSchema& schema,
                                     const Gazetteer& gazetteer,
                                     const SlotPatterns& patterns);

// Deterministic, single pass. Throws Error("no training data") when empty.
IntentModel train_intent_model(std::span<const PseudoLabeledUtterance> data);

}  // namespace convreco

#endif  // CONVRECO_NLU_HPP_

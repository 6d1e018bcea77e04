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

#include "convreco/nlu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace convreco {

namespace {

const std::set<std::string>& interrogative_starts() {
  static const std::set<std::string> words = {
      "what", "which", "where", "when", "who", "why", "how",
      "do",   "does",  "is",    "are",  "can"};
  return words;
}

// Whole-utterance cues, matched against the joined token sequence.
const std::map<std::string, UserActKind>& cue_lexicon() {
  static const std::map<std::string, UserActKind> cues = {
      {"bye", UserActKind::kBye},
      {"goodbye", UserActKind::kBye},
      {"bye bye", UserActKind::kBye},
      {"thanks bye", UserActKind::kBye},
      {"thank you bye", UserActKind::kBye},
      {"yes", UserActKind::kAffirm},
      {"yes please", UserActKind::kAffirm},
      {"yeah", UserActKind::kAffirm},
      {"yep", UserActKind::kAffirm},
      {"sure", UserActKind::kAffirm},
      {"correct", UserActKind::kAffirm},
      {"that's right", UserActKind::kAffirm},
      {"no", UserActKind::kDeny},
      {"nope", UserActKind::kDeny},
      {"no thanks", UserActKind::kDeny},
      {"not really", UserActKind::kDeny},
  };
  return cues;
}

std::string join(const std::vector<std::string>& tokens, size_t begin,
                 size_t end) {
  std::string out;
  for (size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

bool has_slot(const std::vector<SlotValue>& slots, const std::string& slot) {
  return std::any_of(slots.begin(), slots.end(),
                     [&](const SlotValue& s) { return s.slot == slot; });
}

std::map<UserActKind, double> uniform_scores() {
  std::map<UserActKind, double> scores;
  for (auto k : kUserActKinds) scores[k] = 1.0 / kUserActKinds.size();
  return scores;
}

}  // namespace

SlotPatterns::SlotPatterns(const SlotSchema& schema,
                           const std::map<std::string, std::string>& patterns) {
  for (const auto& [slot, pattern] : patterns) {
    if (schema.find(slot) == nullptr) {
      throw Error("pattern for unknown slot \"" + slot + "\"");
    }
  }
  for (const auto& def : schema.slots) {
    auto it = patterns.find(def.name);
    if (it == patterns.end()) continue;
    try {
      compiled_.emplace_back(def.name, std::regex(it->second));
    } catch (const std::regex_error& e) {
      throw Error("slot \"" + def.name + "\": bad pattern: " + e.what());
    }
  }
}

std::vector<SlotValue> extract_slots(std::string_view text,
                                     const Gazetteer& gazetteer,
                                     const SlotPatterns& patterns) {
  std::vector<SlotValue> out;
  const std::vector<std::string> tokens = tokenize(normalize_value(text));
  std::vector<bool> consumed(tokens.size(), false);

  size_t i = 0;
  while (i < tokens.size()) {
    size_t longest = std::min<size_t>(gazetteer.max_phrase_words,
                                      tokens.size() - i);
    bool matched = false;
    for (size_t len = longest; len >= 1; --len) {
      auto it = gazetteer.entries.find(join(tokens, i, i + len));
      if (it == gazetteer.entries.end()) continue;
      std::fill(consumed.begin() + i, consumed.begin() + i + len, true);
      if (!has_slot(out, it->second.slot)) {
        out.push_back(SlotValue{it->second.slot, it->second.value, 1.0, 0});
      }
      i += len;
      matched = true;
      break;
    }
    if (!matched) ++i;
  }

  // Maximal runs of unconsumed tokens.
  std::vector<std::string> spans;
  for (size_t b = 0; b < tokens.size();) {
    if (consumed[b]) {
      ++b;
      continue;
    }
    size_t e = b;
    while (e < tokens.size() && !consumed[e]) ++e;
    spans.push_back(join(tokens, b, e));
    b = e;
  }
  for (const auto& [slot, re] : patterns.compiled()) {
    if (has_slot(out, slot)) continue;
    for (const auto& span : spans) {
      std::smatch m;
      if (std::regex_search(span, m, re)) {
        out.push_back(SlotValue{slot, normalize_value(m.str()), 1.0, 0});
        break;
      }
    }
  }
  return out;
}

std::optional<std::string> match_item_reference(
    std::string_view text, const std::vector<const Product*>& candidates) {
  const auto tokens = tokenize(normalize_value(text));
  const std::string padded = " " + join(tokens, 0, tokens.size()) + " ";
  const Product* best = nullptr;
  size_t best_len = 0;
  for (const Product* p : candidates) {
    auto name_tokens = tokenize(normalize_value(p->name));
    if (name_tokens.empty()) continue;
    std::string name = join(name_tokens, 0, name_tokens.size());
    if (padded.find(" " + name + " ") != std::string::npos &&
        name.size() > best_len) {
      best = p;
      best_len = name.size();
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->id;
}

bool has_interrogative_cue(std::string_view text) {
  std::string normalized = normalize_value(text);
  if (normalized.find('?') != std::string::npos) return true;
  auto tokens = tokenize(normalized);
  return !tokens.empty() && interrogative_starts().count(tokens.front()) > 0;
}

// IntentModel.

void IntentModel::add_example(UserActKind act,
                              const std::vector<std::string>& tokens) {
  ClassCounts& c = classes_[act];
  ++c.documents;
  ++documents_;
  for (const auto& t : tokens) {
    ++c.tokens[t];
    ++c.total_tokens;
    vocabulary_.insert(t);
  }
}

bool IntentModel::observed(UserActKind act) const {
  auto it = classes_.find(act);
  return it != classes_.end() && it->second.documents > 0;
}

double IntentModel::log_prior(UserActKind act) const {
  auto it = classes_.find(act);
  long docs = it == classes_.end() ? 0 : it->second.documents;
  return std::log(static_cast<double>(docs + 1) /
                  static_cast<double>(documents_ + kUserActKinds.size()));
}

double IntentModel::log_likelihood(UserActKind act,
                                   const std::string& token) const {
  const double denom_extra = static_cast<double>(vocabulary_.size() + 1);
  auto it = classes_.find(act);
  if (it == classes_.end()) return -std::log(denom_extra);
  const ClassCounts& c = it->second;
  long count = 0;
  if (vocabulary_.count(token) > 0) {
    auto t = c.tokens.find(token);
    if (t != c.tokens.end()) count = t->second;
  }
  return std::log(static_cast<double>(count + 1) /
                  (static_cast<double>(c.total_tokens) + denom_extra));
}

void to_json(json& j, const IntentModel& m) {
  json classes = json::object();
  for (const auto& [act, counts] : m.classes_) {
    classes[std::string(to_string(act))] =
        json{{"documents", counts.documents}, {"tokens", counts.tokens}};
  }
  j = json{{"documents", m.documents_},
           {"classes", classes},
           {"vocabulary", m.vocabulary_}};
}

void from_json(const json& j, IntentModel& m) {
  m = IntentModel{};
  m.documents_ = j.at("documents").get<long>();
  m.vocabulary_ = j.at("vocabulary").get<std::set<std::string>>();
  long docs = 0;
  for (const auto& [name, body] : j.at("classes").items()) {
    auto act = parse_user_act(name);
    if (!act) throw Error("intent_model: unknown act \"" + name + "\"");
    IntentModel::ClassCounts c;
    c.documents = body.at("documents").get<long>();
    c.tokens = body.at("tokens").get<std::map<std::string, long>>();
    for (const auto& [tok, n] : c.tokens) {
      if (m.vocabulary_.count(tok) == 0) {
        throw Error("intent_model: token \"" + tok + "\" not in vocabulary");
      }
      c.total_tokens += n;
    }
    docs += c.documents;
    m.classes_[*act] = std::move(c);
  }
  if (docs != m.documents_) throw Error("intent_model: document count mismatch");
}

ActPrediction classify_act(std::string_view text, const IntentModel& model,
                           const std::vector<SlotValue>& extracted) {
  ActPrediction pred;
  const std::vector<std::string> tokens = tokenize(normalize_value(text));
  if (tokens.empty()) {
    pred.act = UserActKind::kChitchat;
    pred.scores = uniform_scores();
    return pred;
  }

  // Naive-Bayes posterior over the act kinds seen in training.
  std::map<UserActKind, double> log_scores;
  double best = -std::numeric_limits<double>::infinity();
  UserActKind best_act = UserActKind::kChitchat;
  for (auto act : kUserActKinds) {
    if (!model.observed(act)) continue;
    double s = model.log_prior(act);
    for (const auto& t : tokens) s += model.log_likelihood(act, t);
    log_scores[act] = s;
    if (s > best) {
      best = s;
      best_act = act;
    }
  }
  if (log_scores.empty()) {
    pred.scores = uniform_scores();
  } else {
    double z = 0.0;
    for (const auto& [act, s] : log_scores) z += std::exp(s - best);
    for (auto act : kUserActKinds) {
      auto it = log_scores.find(act);
      pred.scores[act] = it == log_scores.end() ? 0.0 : std::exp(it->second - best) / z;
    }
  }
  pred.act = best_act;

  if (!extracted.empty() && !has_interrogative_cue(text)) {
    pred.act = UserActKind::kInform;
    return pred;
  }
  auto cue = cue_lexicon().find(join(tokens, 0, tokens.size()));
  if (cue != cue_lexicon().end()) {
    pred.act = cue->second;
    return pred;
  }
  return pred;
}

// Distant supervision.

DistantSupervision distant_supervise(std::span<const Conversation> conversations,
                                     const SlotSchema& schema,
                                     const Gazetteer& gazetteer,
                                     const SlotPatterns& patterns) {
  DistantSupervision out;
  auto machine_kind = [](const Conversation& c,
                         size_t pos) -> std::optional<MachineActKind> {
    if (pos >= c.turns.size()) return std::nullopt;
    const Utterance& u = c.turns[pos];
    if (u.speaker != Speaker::kMachine || !u.machine_act) return std::nullopt;
    return u.machine_act->kind;
  };

  auto pitched = [](const Utterance& u, const std::string& id) {
    const auto& items = u.machine_act->items;
    return std::find(items.begin(), items.end(), id) != items.end();
  };

  for (const Conversation& conv : conversations) {
    if (!validate_conversation(conv, schema).empty()) {
      ++out.skipped_conversations;
      continue;
    }
    std::vector<size_t> user_turns;
    for (size_t p = 0; p < conv.turns.size(); ++p) {
      if (conv.turns[p].speaker == Speaker::kUser) user_turns.push_back(p);
    }
    bool order_seen = false;
    for (size_t k = 0; k < user_turns.size(); ++k) {
      const size_t p = user_turns[k];
      if (p > 0 && machine_kind(conv, p - 1) == MachineActKind::kPlaceOrder) {
        order_seen = true;
      }
      const Utterance& u = conv.turns[p];
      std::vector<SlotValue> extracted =
          extract_slots(u.text, gazetteer, patterns);
      PseudoLabeledUtterance ex{u, UserActKind::kChitchat, {}, "default"};

      std::vector<SlotValue> overlap;
      if (conv.final_order) {
        for (const auto& sv : extracted) {
          for (const auto& ov : conv.final_order->slot_values) {
            if (sv.same_pair(ov)) {
              overlap.push_back(sv);
              break;
            }
          }
        }
      }
      const bool first = k == 0;
      const bool last = k + 1 == user_turns.size();
      if (conv.final_order && !overlap.empty()) {
        ex.act = UserActKind::kInform;
        ex.slots = std::move(overlap);
        ex.provenance = "order-slot-overlap";
      } else if (conv.final_order &&
                 machine_kind(conv, p + 1) == MachineActKind::kPlaceOrder) {
        ex.act = UserActKind::kAccept;
        ex.provenance = "before-place-order";
      } else if (conv.final_order && p > 0 &&
                 machine_kind(conv, p - 1) == MachineActKind::kRecommend &&
                 pitched(conv.turns[p - 1], conv.final_order->product_id)) {
        ex.act = UserActKind::kAccept;
        ex.provenance = "after-ordered-item-pitch";
      } else if (conv.final_order && p > 0 &&
                 machine_kind(conv, p - 1) == MachineActKind::kRecommend &&
                 machine_kind(conv, p + 1) == MachineActKind::kRecommend) {
        ex.act = UserActKind::kReject;
        ex.provenance = "between-recommends";
      } else if (first && extracted.empty()) {
        ex.act = UserActKind::kGreet;
        ex.provenance = "first-turn";
      } else if (last && (order_seen || !conv.final_order)) {
        ex.act = UserActKind::kBye;
        ex.provenance = conv.final_order ? "after-order" : "last-turn";
      }
      out.examples.push_back(std::move(ex));
    }
  }
  return out;
}

IntentModel train_intent_model(std::span<const PseudoLabeledUtterance> data) {
  if (data.empty()) throw Error("no training data");
  IntentModel model;
  for (const auto& ex : data) {
    model.add_example(ex.act, tokenize(normalize_value(ex.utterance.text)));
  }
  return model;
}

}  // namespace convreco

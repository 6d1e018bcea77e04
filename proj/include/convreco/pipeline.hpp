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

// End-to-end training: corpus generation, distant supervision, NLU, matrix
// factorization, policy learning and evaluation, plus the model bundle.

#ifndef CONVRECO_PIPELINE_HPP_
#define CONVRECO_PIPELINE_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "convreco/core.hpp"
#include "convreco/engine.hpp"
#include "convreco/policy.hpp"
#include "convreco/recommender.hpp"
#include "convreco/simulator.hpp"

namespace convreco {

// Policy training.

struct CurvePoint {
  size_t episode = 0;
  double success_rate = 0.0;
  double avg_turns = 0.0;
  double avg_reward = 0.0;
};

struct PolicyTraining {
  QTable q_table;
  std::vector<CurvePoint> curve;
  // The input templates with their use/success counters advanced.
  std::vector<Template> templates;
};

// Q-learning against the simulator. `models.q_table` is ignored; training
// starts from an empty table. Episode i draws its user from
// RandomSource::derive(seed, i). One curve point per `curve_every` episodes
// summarizes that window, plus one for a trailing partial window.
PolicyTraining train_policy(const Models& models, const UserProfile& profile,
                            size_t episodes, uint64_t seed,
                            size_t curve_every = 1000, bool mask_illegal = true);

std::string curve_to_csv(std::span<const CurvePoint> curve);

// Interaction records reconstructed from raw transcripts: 1.0 for each final
// order, 0.0 for each product recommended in a turn the user answered and the
// agent followed with another recommendation (the user turned it down).
std::vector<InteractionRecord> extract_interactions(
    std::span<const Conversation> corpus);

// Configuration.

struct PipelineConfig {
  // Input files; relative paths resolve against `base_dir`.
  std::string schema_path = "schema.json";
  std::string catalog_path = "catalog.json";
  std::string synonyms_path = "synonyms.json";
  std::string templates_path = "templates.json";
  std::string base_dir = ".";  // not serialized

  size_t corpus_size = 2000;
  uint64_t corpus_seed = 7;
  UserProfile profile;
  // Trailing fraction of conversations held out for NLU evaluation.
  double nlu_holdout = 0.2;

  Hyperparams mf;
  // Fraction of interaction records held out for MF evaluation.
  double mf_holdout = 0.1;
  RecommendConfig recommend;

  PolicyConfig policy;
  size_t episodes = 50000;
  uint64_t policy_seed = 11;
  size_t curve_every = 1000;

  size_t eval_n = 1000;
  uint64_t eval_seed = 3;

  std::string resolve(const std::string& path) const;
  std::vector<std::string> violations() const;
};

void to_json(json& j, const PipelineConfig& c);
void from_json(const json& j, PipelineConfig& c);

// Reads a config file; `base_dir` becomes the file's directory.
PipelineConfig load_pipeline_config(const std::string& path);

// Model bundle.

inline constexpr int kBundleVersion = 1;

struct ModelBundle {
  int version = kBundleVersion;
  // Seconds since the epoch; SOURCE_DATE_EPOCH when set, else 0.
  int64_t created_at = 0;
  json config;
  json seeds;
  Models models;
};

std::string schema_hash(const SlotSchema& schema);

// Canonical JSON text followed by a "sha256:<hex>" footer line.
std::string serialize_bundle(const ModelBundle& bundle);
ModelBundle parse_bundle(std::string_view text);
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

int64_t build_timestamp();

// Pipeline.

struct PipelineResult {
  ModelBundle bundle;
  json report;
  std::string report_text;
  std::string curve_csv;
};

using ProgressFn = std::function<void(const std::string&)>;

// Runs every stage in order. Any failure raises Error("<stage>: <cause>").
PipelineResult run_pipeline(const PipelineConfig& cfg,
                            const ProgressFn& progress = {});

// Writes bundle.json, report.json, report.txt and curve.csv. Nothing is
// written unless the pipeline already succeeded.
void write_pipeline_outputs(const PipelineResult& result,
                            const std::string& bundle_path,
                            const std::string& report_dir);

// NLU scores of `model` on user turns against hidden annotations.
struct NluScores {
  size_t turns = 0;
  double act_accuracy = 0.0;
  double slot_precision = 0.0;
  double slot_recall = 0.0;
  double slot_f1 = 0.0;
};

void to_json(json& j, const NluScores& s);

NluScores score_nlu(const Domain& domain, const IntentModel& model,
                    std::span<const Conversation> conversations,
                    std::span<const std::vector<HiddenAnnotation>> annotations);

}  // namespace convreco

#endif  // CONVRECO_PIPELINE_HPP_

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

#include "convreco/pipeline.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

namespace convreco {

namespace {

constexpr char kBundleFormat[] = "convreco-bundle";
constexpr char kFooterPrefix[] = "sha256:";

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &size, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(size * 2);
  for (unsigned int i = 0; i < size; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Runs one stage, prefixing any failure with the stage name.
template <typename F>
auto stage(const char* name, const ProgressFn& progress, F&& body) {
  if (progress) progress(std::string("stage ") + name);
  try {
    return body();
  } catch (const std::exception& e) {
    throw Error(std::string(name) + ": " + e.what());
  }
}

json metrics_json(const CurvePoint& p) {
  return json{{"episode", p.episode},
              {"success_rate", p.success_rate},
              {"avg_turns", p.avg_turns},
              {"avg_reward", p.avg_reward}};
}

}  // namespace

// Policy training.

PolicyTraining train_policy(const Models& models, const UserProfile& profile,
                            size_t episodes, uint64_t seed, size_t curve_every,
                            bool mask_illegal) {
  if (curve_every == 0) throw Error("curve_every must be positive");
  PolicyTraining out;
  out.templates = models.domain.templates;
  std::map<std::string, size_t> template_index;
  for (size_t i = 0; i < out.templates.size(); ++i) {
    template_index[out.templates[i].id] = i;
  }

  EpisodeOptions options;
  options.mode = ActionMode::kPolicy;
  options.epsilon = models.policy.epsilon;
  options.learn = &out.q_table;
  options.mask_illegal = mask_illegal;
  RandomSource policy_rng(RandomSource::derive(seed, ~uint64_t{0}));

  size_t window = 0, window_success = 0;
  double window_turns = 0.0, window_reward = 0.0;
  auto flush = [&](size_t episode) {
    if (window == 0) return;
    const double n = static_cast<double>(window);
    out.curve.push_back(CurvePoint{episode, window_success / n,
                                   window_turns / n, window_reward / n});
    window = window_success = 0;
    window_turns = window_reward = 0.0;
  };

  for (size_t i = 0; i < episodes; ++i) {
    RandomSource user_rng(RandomSource::derive(seed, i));
    EpisodeResult r = run_episode(models, out.q_table, out.templates, profile,
                                  options, user_rng, policy_rng);
    for (const auto& id : r.template_ids) {
      auto it = template_index.find(id);
      if (it == template_index.end()) continue;
      Template& t = out.templates[it->second];
      t = record_outcome(t, r.order_placed);
    }
    ++window;
    if (r.success) ++window_success;
    window_turns += r.machine_turns;
    window_reward += r.total_reward;
    if ((i + 1) % curve_every == 0) flush(i + 1);
  }
  flush(episodes);
  return out;
}

std::string curve_to_csv(std::span<const CurvePoint> curve) {
  std::string out = "episode,success_rate,avg_turns,avg_reward\n";
  char buf[160];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f\n", p.episode,
                  p.success_rate, p.avg_turns, p.avg_reward);
    out += buf;
  }
  return out;
}

std::vector<InteractionRecord> extract_interactions(
    std::span<const Conversation> corpus) {
  std::vector<InteractionRecord> out;
  auto recommend_at = [](const Conversation& c, size_t i) -> const MachineAct* {
    if (i >= c.turns.size()) return nullptr;
    const Utterance& u = c.turns[i];
    if (u.speaker != Speaker::kMachine || !u.machine_act ||
        u.machine_act->kind != MachineActKind::kRecommend) {
      return nullptr;
    }
    return &*u.machine_act;
  };
  for (const auto& conv : corpus) {
    const std::string ordered =
        conv.final_order ? conv.final_order->product_id : std::string();
    std::set<std::string> emitted;
    for (size_t i = 0; i + 2 < conv.turns.size(); ++i) {
      const MachineAct* shown = recommend_at(conv, i);
      if (shown == nullptr || conv.turns[i + 1].speaker != Speaker::kUser ||
          recommend_at(conv, i + 2) == nullptr) {
        continue;
      }
      for (const auto& id : shown->items) {
        if (id == ordered || !emitted.insert(id).second) continue;
        out.push_back(InteractionRecord{conv.user_id, id, 0.0});
      }
    }
    if (conv.final_order) {
      out.push_back(InteractionRecord{conv.user_id, ordered, 1.0});
    }
  }
  return out;
}

// Configuration.

std::string PipelineConfig::resolve(const std::string& path) const {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

std::vector<std::string> PipelineConfig::violations() const {
  std::vector<std::string> out;
  if (schema_path.empty()) out.push_back("files.schema is empty");
  if (catalog_path.empty()) out.push_back("files.catalog is empty");
  if (templates_path.empty()) out.push_back("files.templates is empty");
  for (const auto& v : profile.violations()) out.push_back("corpus.profile: " + v);
  if (!(nlu_holdout >= 0.0 && nlu_holdout < 1.0)) {
    out.push_back("corpus.nlu_holdout outside [0,1)");
  }
  for (const auto& v : mf.violations()) out.push_back("mf: " + v);
  if (!(mf_holdout >= 0.0 && mf_holdout < 1.0)) {
    out.push_back("mf.holdout outside [0,1)");
  }
  if (recommend.n == 0) out.push_back("recommend.n must be positive");
  if (!(recommend.blend_alpha >= 0.0 && recommend.blend_alpha <= 1.0)) {
    out.push_back("recommend.blend_alpha outside [0,1]");
  }
  if (curve_every == 0) out.push_back("policy.curve_every must be positive");
  return out;
}

void to_json(json& j, const PipelineConfig& c) {
  json mf = c.mf;
  mf["holdout"] = c.mf_holdout;
  json policy = c.policy;
  policy["episodes"] = c.episodes;
  policy["seed"] = c.policy_seed;
  policy["curve_every"] = c.curve_every;
  j = json{{"files",
            {{"schema", c.schema_path},
             {"catalog", c.catalog_path},
             {"synonyms", c.synonyms_path},
             {"templates", c.templates_path}}},
           {"corpus",
            {{"size", c.corpus_size},
             {"seed", c.corpus_seed},
             {"profile", c.profile},
             {"nlu_holdout", c.nlu_holdout}}},
           {"mf", mf},
           {"recommend", c.recommend},
           {"policy", policy},
           {"eval", {{"n", c.eval_n}, {"seed", c.eval_seed}}}};
}

void from_json(const json& j, PipelineConfig& c) {
  const PipelineConfig d;
  const json empty = json::object();
  auto section = [&](const char* name) -> const json& {
    if (!j.contains(name)) return empty;
    if (!j.at(name).is_object()) throw Error(std::string("config: ") + name + " must be an object");
    return j.at(name);
  };
  const json& files = section("files");
  c.schema_path = files.value("schema", d.schema_path);
  c.catalog_path = files.value("catalog", d.catalog_path);
  c.synonyms_path = files.value("synonyms", d.synonyms_path);
  c.templates_path = files.value("templates", d.templates_path);

  const json& corpus = section("corpus");
  c.corpus_size = corpus.value("size", d.corpus_size);
  c.corpus_seed = corpus.value("seed", d.corpus_seed);
  c.profile = corpus.value("profile", d.profile);
  c.nlu_holdout = corpus.value("nlu_holdout", d.nlu_holdout);

  const json& mf = section("mf");
  c.mf = mf.get<Hyperparams>();
  c.mf_holdout = mf.value("holdout", d.mf_holdout);

  c.recommend = section("recommend").get<RecommendConfig>();

  const json& policy = section("policy");
  c.policy = policy.get<PolicyConfig>();
  c.episodes = policy.value("episodes", d.episodes);
  c.policy_seed = policy.value("seed", d.policy_seed);
  c.curve_every = policy.value("curve_every", d.curve_every);

  const json& eval = section("eval");
  c.eval_n = eval.value("n", d.eval_n);
  c.eval_seed = eval.value("seed", d.eval_seed);
}

PipelineConfig load_pipeline_config(const std::string& path) {
  json doc = load_json_file(path);
  PipelineConfig cfg;
  try {
    cfg = doc.get<PipelineConfig>();
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  auto parent = std::filesystem::path(path).parent_path();
  cfg.base_dir = parent.empty() ? "." : parent.string();
  return cfg;
}

// Model bundle.

std::string schema_hash(const SlotSchema& schema) {
  return sha256_hex(json(schema).dump());
}

int64_t build_timestamp() {
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  long long v = std::strtoll(env, &end, 10);
  if (end == env || *end != '\0' || v < 0) return 0;
  return v;
}

std::string serialize_bundle(const ModelBundle& b) {
  const Domain& d = b.models.domain;
  json j;
  j["format"] = kBundleFormat;
  j["version"] = b.version;
  j["created_at"] = b.created_at;
  j["schema_hash"] = schema_hash(d.schema);
  j["config"] = b.config;
  j["seeds"] = b.seeds;
  j["domain"] = json{{"schema", d.schema},
                     {"synonyms", d.synonyms},
                     {"catalog", catalog_to_json(d.catalog)},
                     {"templates", templates_to_json(d.templates)}};
  j["intent_model"] = b.models.intent_model;
  j["factor_model"] = b.models.factor_model;
  j["q_table"] = b.models.q_table;
  j["nlg_stats"] = nlg_stats_to_json(d.templates);
  std::string body = j.dump(1);
  body.push_back('\n');
  return body + kFooterPrefix + sha256_hex(body) + "\n";
}

ModelBundle parse_bundle(std::string_view text) {
  const std::string marker = std::string("\n") + kFooterPrefix;
  const size_t at = text.rfind(marker);
  if (at == std::string_view::npos) {
    throw Error("bundle checksum missing (truncated or corrupt file)");
  }
  std::string_view body = text.substr(0, at + 1);
  std::string_view footer = text.substr(at + marker.size());
  while (!footer.empty() && (footer.back() == '\n' || footer.back() == '\r')) {
    footer.remove_suffix(1);
  }
  if (footer != sha256_hex(body)) {
    throw Error("bundle checksum mismatch (truncated or corrupt file)");
  }

  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(std::string("bundle: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kBundleFormat) {
    throw Error("bundle: not a convreco bundle");
  }
  if (!j.contains("version") || !j.at("version").is_number_integer()) {
    throw Error("bundle missing section version");
  }
  const int version = j.at("version").get<int>();
  if (version != kBundleVersion) {
    throw Error("unsupported bundle version " + std::to_string(version));
  }
  for (const char* name : {"created_at", "schema_hash", "config", "seeds",
                           "domain", "intent_model", "factor_model", "q_table",
                           "nlg_stats"}) {
    if (!j.contains(name)) throw Error(std::string("bundle missing section ") + name);
  }

  try {
    ModelBundle b;
    b.version = version;
    b.created_at = j.at("created_at").get<int64_t>();
    b.config = j.at("config");
    b.seeds = j.at("seeds");
    const json& dom = j.at("domain");
    SlotSchema schema = dom.at("schema").get<SlotSchema>();
    if (schema_hash(schema) != j.at("schema_hash").get<std::string>()) {
      throw Error("schema hash mismatch");
    }
    SynonymMap synonyms = dom.at("synonyms").get<SynonymMap>();
    Catalog catalog = parse_catalog(dom.at("catalog").dump(), schema, "<bundle>");
    std::vector<Template> templates = parse_templates(dom.at("templates"), schema);
    apply_nlg_stats(j.at("nlg_stats"), templates);
    b.models.domain = Domain::create(std::move(schema), std::move(synonyms),
                                     std::move(catalog), std::move(templates));
    b.models.intent_model = j.at("intent_model").get<IntentModel>();
    b.models.factor_model = j.at("factor_model").get<FactorModel>();
    b.models.q_table = j.at("q_table").get<QTable>();
    PipelineConfig cfg = b.config.get<PipelineConfig>();
    b.models.mf_hyperparams = cfg.mf;
    b.models.recommend = cfg.recommend;
    b.models.policy = cfg.policy;
    return b;
  } catch (const json::exception& e) {
    throw Error(std::string("bundle: ") + e.what());
  } catch (const Error& e) {
    throw Error(std::string("bundle: ") + e.what());
  }
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  write_file_atomic(path, serialize_bundle(bundle));
}

ModelBundle load_bundle(const std::string& path) {
  try {
    return parse_bundle(read_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

// NLU scoring.

void to_json(json& j, const NluScores& s) {
  j = json{{"turns", s.turns},
           {"act_accuracy", s.act_accuracy},
           {"slot_precision", s.slot_precision},
           {"slot_recall", s.slot_recall},
           {"slot_f1", s.slot_f1}};
}

NluScores score_nlu(const Domain& domain, const IntentModel& model,
                    std::span<const Conversation> conversations,
                    std::span<const std::vector<HiddenAnnotation>> annotations) {
  if (conversations.size() != annotations.size()) {
    throw Error("annotations do not match conversations");
  }
  NluScores s;
  size_t correct = 0, tp = 0, predicted = 0, actual = 0;
  for (size_t c = 0; c < conversations.size(); ++c) {
    size_t k = 0;
    for (const auto& turn : conversations[c].turns) {
      if (turn.speaker != Speaker::kUser) continue;
      if (k >= annotations[c].size()) {
        throw Error("annotations do not match conversation " + std::to_string(c));
      }
      const HiddenAnnotation& truth = annotations[c][k++];
      auto slots = extract_slots(turn.text, domain.gazetteer, domain.patterns);
      auto act = classify_act(turn.text, model, slots).act;
      ++s.turns;
      if (act == truth.true_act) ++correct;
      predicted += slots.size();
      actual += truth.true_slots.size();
      for (const auto& p : slots) {
        for (const auto& t : truth.true_slots) {
          if (p.same_pair(t)) {
            ++tp;
            break;
          }
        }
      }
    }
  }
  if (s.turns > 0) s.act_accuracy = static_cast<double>(correct) / s.turns;
  s.slot_precision = predicted ? static_cast<double>(tp) / predicted : 0.0;
  s.slot_recall = actual ? static_cast<double>(tp) / actual : 0.0;
  const double pr = s.slot_precision + s.slot_recall;
  s.slot_f1 = pr > 0 ? 2 * s.slot_precision * s.slot_recall / pr : 0.0;
  return s;
}

// Pipeline.

PipelineResult run_pipeline(const PipelineConfig& cfg, const ProgressFn& progress) {
  auto problems = cfg.violations();
  if (!problems.empty()) throw Error("config: " + problems.front());

  Domain domain = stage("load", progress, [&] {
    Domain d = Domain::load(cfg.resolve(cfg.schema_path), cfg.resolve(cfg.catalog_path),
                            cfg.resolve(cfg.synonyms_path),
                            cfg.resolve(cfg.templates_path));
    auto bad = cfg.policy.violations(d.schema);
    if (!bad.empty()) throw Error("policy config: " + bad.front());
    return d;
  });

  GeneratedCorpus corpus = stage("simulate", progress, [&] {
    RandomSource rng(cfg.corpus_seed);
    return generate_corpus(cfg.corpus_size, domain, cfg.profile, rng);
  });
  const auto& convs = corpus.conversations;
  const size_t n_test =
      static_cast<size_t>(static_cast<double>(convs.size()) * cfg.nlu_holdout);
  const size_t n_train = convs.size() - n_test;
  std::span<const Conversation> train_convs(convs.data(), n_train);
  std::span<const Conversation> test_convs(convs.data() + n_train, n_test);

  json report;
  report["seeds"] = json{{"corpus", cfg.corpus_seed},
                         {"mf", cfg.mf.seed},
                         {"policy", cfg.policy_seed},
                         {"eval", cfg.eval_seed}};
  {
    size_t user_turns = 0, machine_turns = 0, orders = 0;
    for (const auto& c : convs) {
      for (const auto& t : c.turns) {
        (t.speaker == Speaker::kUser ? user_turns : machine_turns)++;
      }
      if (c.final_order) ++orders;
    }
    const double n = convs.empty() ? 1.0 : static_cast<double>(convs.size());
    report["corpus"] = json{{"conversations", convs.size()},
                            {"user_turns", user_turns},
                            {"machine_turns", machine_turns},
                            {"orders", orders},
                            {"order_rate", convs.empty() ? 0.0 : orders / n},
                            {"avg_turns", convs.empty() ? 0.0 : (user_turns + machine_turns) / n}};
  }

  IntentModel intent_model = stage("nlu", progress, [&] {
    DistantSupervision train_ds = distant_supervise(
        train_convs, domain.schema, domain.gazetteer, domain.patterns);
    IntentModel split_model = train_intent_model(train_ds.examples);
    NluScores heldout = score_nlu(
        domain, split_model, test_convs,
        std::span<const std::vector<HiddenAnnotation>>(
            corpus.annotations.data() + n_train, n_test));

    DistantSupervision all = distant_supervise(convs, domain.schema,
                                               domain.gazetteer, domain.patterns);
    size_t labeled = 0;
    for (const auto& e : all.examples) {
      if (e.act != UserActKind::kChitchat) ++labeled;
    }
    IntentModel full = train_intent_model(all.examples);
    report["nlu"] = json{
        {"train_conversations", n_train},
        {"test_conversations", n_test},
        {"pseudo_labels", all.examples.size()},
        {"skipped_conversations", all.skipped_conversations},
        {"non_chitchat_fraction",
         all.examples.empty() ? 0.0
                              : static_cast<double>(labeled) / all.examples.size()},
        {"vocabulary", full.vocabulary().size()},
        {"heldout", heldout}};
    return full;
  });

  FactorModel factor_model = stage("mf", progress, [&] {
    std::vector<InteractionRecord> records = extract_interactions(convs);
    if (records.empty()) throw Error("no interaction records");
    const size_t test = static_cast<size_t>(records.size() * cfg.mf_holdout);
    const size_t train = records.size() - test;
    std::span<const InteractionRecord> train_records(records.data(), train);
    std::span<const InteractionRecord> test_records(records.data() + train, test);
    FactorModel split_model = train_mf(train_records, cfg.mf);
    double baseline = 0.0;
    for (const auto& r : test_records) {
      const double e = r.value - split_model.global_bias;
      baseline += e * e;
    }
    baseline = test ? std::sqrt(baseline / test) : 0.0;
    const double heldout = test ? rmse(split_model, test_records) : 0.0;
    size_t positive = 0;
    for (const auto& r : records) positive += r.value > 0.5 ? 1 : 0;
    report["mf"] = json{{"records", records.size()},
                        {"positive", positive},
                        {"negative", records.size() - positive},
                        {"train_records", train},
                        {"test_records", test},
                        {"heldout_rmse", heldout},
                        {"baseline_rmse", baseline},
                        {"train_rmse", rmse(split_model, train_records)}};
    return train_mf(records, cfg.mf);
  });

  Models models;
  models.domain = std::move(domain);
  models.intent_model = std::move(intent_model);
  models.factor_model = std::move(factor_model);
  models.mf_hyperparams = cfg.mf;
  models.recommend = cfg.recommend;
  models.policy = cfg.policy;

  PolicyTraining trained = stage("policy", progress, [&] {
    return train_policy(models, cfg.profile, cfg.episodes, cfg.policy_seed,
                        cfg.curve_every);
  });
  models.q_table = std::move(trained.q_table);
  models.domain.templates = std::move(trained.templates);
  {
    json curve = json::array();
    for (const auto& p : trained.curve) curve.push_back(metrics_json(p));
    report["policy"] = json{{"episodes", cfg.episodes},
                            {"q_entries", models.q_table.size()},
                            {"curve", curve}};
  }

  stage("eval", progress, [&] {
    EvalMetrics greedy = evaluate(models, models.q_table, cfg.profile, cfg.eval_n,
                                  cfg.eval_seed, ActionMode::kPolicy);
    EvalMetrics random = evaluate(models, models.q_table, cfg.profile, cfg.eval_n,
                                  cfg.eval_seed, ActionMode::kRandom);
    EvalMetrics random_legal = evaluate(models, models.q_table, cfg.profile,
                                        cfg.eval_n, cfg.eval_seed,
                                        ActionMode::kRandomLegal);
    report["evaluation"] = json{{"n", cfg.eval_n},
                                {"seed", cfg.eval_seed},
                                {"required_slots", models.domain.schema.required_slots().size()},
                                {"policy", greedy},
                                {"random", random},
                                {"random_legal", random_legal}};
    return 0;
  });

  PipelineResult result;
  result.bundle.created_at = build_timestamp();
  result.bundle.config = cfg;
  result.bundle.seeds = report["seeds"];
  result.bundle.models = std::move(models);
  report["schema_hash"] = schema_hash(result.bundle.models.domain.schema);
  result.curve_csv = curve_to_csv(trained.curve);

  std::ostringstream txt;
  const json& c = report["corpus"];
  const json& nlu = report["nlu"];
  const json& mf = report["mf"];
  const json& ev = report["evaluation"];
  txt << "convreco training report\n\n";
  txt << "seeds: corpus=" << cfg.corpus_seed << " mf=" << cfg.mf.seed
      << " policy=" << cfg.policy_seed << " eval=" << cfg.eval_seed << "\n\n";
  txt << "corpus\n"
      << "  conversations        " << c["conversations"].get<size_t>() << "\n"
      << "  orders               " << c["orders"].get<size_t>() << " ("
      << fixed(c["order_rate"].get<double>()) << ")\n"
      << "  avg turns            " << fixed(c["avg_turns"].get<double>(), 2) << "\n\n";
  txt << "nlu (trained on " << n_train << ", scored on " << n_test
      << " held-out conversations)\n"
      << "  pseudo labels        " << nlu["pseudo_labels"].get<size_t>() << "\n"
      << "  non-chitchat share   " << fixed(nlu["non_chitchat_fraction"].get<double>()) << "\n"
      << "  act accuracy         " << fixed(nlu["heldout"]["act_accuracy"].get<double>()) << "\n"
      << "  slot precision       " << fixed(nlu["heldout"]["slot_precision"].get<double>()) << "\n"
      << "  slot recall          " << fixed(nlu["heldout"]["slot_recall"].get<double>()) << "\n"
      << "  slot micro-F1        " << fixed(nlu["heldout"]["slot_f1"].get<double>()) << "\n\n";
  txt << "matrix factorization\n"
      << "  records              " << mf["records"].get<size_t>() << " ("
      << mf["positive"].get<size_t>() << " positive)\n"
      << "  held-out RMSE        " << fixed(mf["heldout_rmse"].get<double>()) << "\n"
      << "  global-mean RMSE     " << fixed(mf["baseline_rmse"].get<double>()) << "\n\n";
  txt << "policy\n"
      << "  episodes             " << cfg.episodes << "\n"
      << "  q entries            " << report["policy"]["q_entries"].get<size_t>() << "\n";
  if (!trained.curve.empty()) {
    const CurvePoint& last = trained.curve.back();
    txt << "  last window          success " << fixed(last.success_rate)
        << ", turns " << fixed(last.avg_turns, 2) << ", reward "
        << fixed(last.avg_reward) << "\n";
  }
  txt << "\nevaluation (" << cfg.eval_n << " dialogues, seed " << cfg.eval_seed << ")\n";
  for (const char* mode : {"policy", "random", "random_legal"}) {
    const json& m = ev[mode];
    txt << "  " << mode << std::string(21 - std::string(mode).size(), ' ')
        << "success "
        << fixed(m["success_rate"].get<double>()) << ", turns "
        << fixed(m["avg_turns"].get<double>(), 2) << ", reward "
        << fixed(m["avg_reward"].get<double>()) << "\n";
  }
  result.report = std::move(report);
  result.report_text = txt.str();
  return result;
}

void write_pipeline_outputs(const PipelineResult& result,
                            const std::string& bundle_path,
                            const std::string& report_dir) {
  const std::filesystem::path dir(report_dir.empty() ? "." : report_dir);
  std::filesystem::create_directories(dir);
  const std::string bundle_text = serialize_bundle(result.bundle);
  const std::string report_json = result.report.dump(2) + "\n";
  write_file_atomic((dir / "report.json").string(), report_json);
  write_file_atomic((dir / "report.txt").string(), result.report_text);
  write_file_atomic((dir / "curve.csv").string(), result.curve_csv);
  write_file_atomic(bundle_path, bundle_text);
}

}  // namespace convreco

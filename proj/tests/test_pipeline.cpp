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

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>

#include "convreco/pipeline.hpp"
#include "doctest.h"
#include "support.hpp"

namespace convreco {
namespace {

using testing::sv;

std::string sha256(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

// Re-serializes a bundle document with a valid checksum footer.
std::string seal(const json& doc) {
  std::string body = doc.dump(1) + "\n";
  return body + "sha256:" + sha256(body) + "\n";
}

json body_of(const std::string& text) {
  return json::parse(text.substr(0, text.rfind("\nsha256:") + 1));
}

// Keys and leaf types, with arrays reduced to their first element.
json structure(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = structure(v);
    return out;
  }
  if (j.is_array()) return j.empty() ? json::array() : json::array({structure(j[0])});
  if (j.is_boolean()) return "bool";
  if (j.is_number_integer()) return "int";
  if (j.is_number()) return "number";
  return "string";
}

PipelineConfig small_config() {
  PipelineConfig cfg = testing::default_config();
  cfg.corpus_size = 300;
  cfg.episodes = 3000;
  cfg.eval_n = 200;
  return cfg;
}

Conversation conv_with(std::vector<Utterance> turns, std::optional<Order> order) {
  Conversation c;
  c.user_id = "u1";
  for (size_t i = 0; i < turns.size(); ++i) turns[i].turn_index = static_cast<int>(i);
  c.turns = std::move(turns);
  c.final_order = std::move(order);
  return c;
}

Utterance user(const std::string& text) {
  return {Speaker::kUser, text, 0, std::nullopt};
}
Utterance machine(MachineAct act) { return {Speaker::kMachine, "...", 0, std::move(act)}; }
MachineAct rec(std::vector<std::string> items) {
  return {MachineActKind::kRecommend, "", std::move(items), std::nullopt};
}

TEST_CASE("extract_interactions") {
  Order order{"u1", "p9", {}};
  CHECK(extract_interactions(std::vector<Conversation>{}).empty());

  auto one = extract_interactions(std::vector<Conversation>{conv_with(
      {user("hi"), machine(rec({"p9"})), user("p9 please"),
       machine({MachineActKind::kPlaceOrder, "", {}, order})},
      order)});
  REQUIRE(one.size() == 1);
  CHECK(one[0].product_id == "p9");
  CHECK(one[0].value == 1.0);

  auto two = extract_interactions(std::vector<Conversation>{conv_with(
      {user("hi"), machine(rec({"p1"})), user("no"), machine(rec({"p2"})),
       user("no"), machine(rec({"p9"})), user("yes"),
       machine({MachineActKind::kPlaceOrder, "", {}, order})},
      order)});
  REQUIRE(two.size() == 3);
  CHECK((two[0].product_id == "p1" && two[0].value == 0.0));
  CHECK((two[1].product_id == "p2" && two[1].value == 0.0));
  CHECK((two[2].product_id == "p9" && two[2].value == 1.0));

  // Without an order nothing is positive; turned-down pitches still count.
  auto none = extract_interactions(std::vector<Conversation>{conv_with(
      {user("hi"), machine(rec({"p1", "p2"})), user("no"), machine(rec({"p3"})),
       user("bye")},
      std::nullopt)});
  CHECK(none.size() == 2);
}

TEST_CASE("curve CSV") {
  std::vector<CurvePoint> curve = {{1000, 0.5, 6.25, 0.1}, {2000, 0.75, 5.0, 0.4}};
  const std::string csv = curve_to_csv(curve);
  CHECK(csv.rfind("episode,success_rate,avg_turns,avg_reward\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("config defaults, validation and round-trip") {
  PipelineConfig cfg = testing::default_config();
  CHECK(cfg.violations().empty());
  CHECK(cfg.corpus_size == 2000);
  CHECK(cfg.corpus_seed == 7);
  CHECK(cfg.episodes == 50000);
  CHECK(cfg.policy_seed == 11);
  CHECK(cfg.resolve("schema.json") == testing::data_file("schema.json"));
  CHECK(cfg.resolve("/abs/x.json") == "/abs/x.json");
  json j = cfg;
  CHECK(json(j.get<PipelineConfig>()) == j);

  PipelineConfig bad = cfg;
  bad.nlu_holdout = 1.5;
  bad.mf.k = 0;
  CHECK(bad.violations().size() >= 2);
}

TEST_CASE("empty corpus aborts at the NLU stage") {
  PipelineConfig cfg = small_config();
  cfg.corpus_size = 0;
  CHECK_THROWS_WITH_AS(run_pipeline(cfg), "nlu: no training data", Error);
}

TEST_CASE("missing input files abort at the load stage") {
  PipelineConfig cfg = small_config();
  cfg.catalog_path = "does-not-exist.json";
  try {
    run_pipeline(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("load: ", 0) == 0);
  }
}

TEST_CASE("small pipeline is deterministic") {
  PipelineResult a = run_pipeline(small_config());
  PipelineResult b = run_pipeline(small_config());
  CHECK(serialize_bundle(a.bundle) == serialize_bundle(b.bundle));
  CHECK(a.report.dump() == b.report.dump());
  CHECK(a.report_text == b.report_text);
  CHECK(a.curve_csv == b.curve_csv);
}

TEST_CASE("report structure is stable") {
  const PipelineResult& r = testing::trained_default();
  const json golden =
      json::parse(read_file(std::string(CONVRECO_TESTS_DIR) + "/golden/report_structure.json"));
  CHECK(structure(r.report).dump(1) == golden.dump(1));
  CHECK(r.report_text.find("policy               success") != std::string::npos);
}

TEST_CASE("bundle save, load, save gives identical bytes") {
  const PipelineResult& r = testing::trained_default();
  const auto dir = std::filesystem::temp_directory_path() / "convreco_bundle_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "bundle.json").string();
  save_bundle(r.bundle, path);
  const std::string first = read_file(path);
  ModelBundle loaded = load_bundle(path);
  save_bundle(loaded, path);
  CHECK(read_file(path) == first);
  CHECK(loaded.models.q_table.size() == r.bundle.models.q_table.size());

  write_pipeline_outputs(r, (dir / "out.json").string(), dir.string());
  for (const char* name : {"out.json", "report.json", "report.txt", "curve.csv"}) {
    CHECK(std::filesystem::exists(dir / name));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("bundle corruption and version errors") {
  const std::string text = serialize_bundle(testing::trained_default().bundle);
  CHECK_THROWS_WITH_AS(parse_bundle(text.substr(0, text.size() / 2)),
                       "bundle checksum missing (truncated or corrupt file)", Error);
  std::string flipped = text;
  flipped[flipped.size() / 3] ^= 0x01;
  CHECK_THROWS_WITH_AS(parse_bundle(flipped),
                       "bundle checksum mismatch (truncated or corrupt file)", Error);

  ModelBundle future = testing::trained_default().bundle;
  future.version = kBundleVersion + 1;
  CHECK_THROWS_WITH_AS(parse_bundle(serialize_bundle(future)),
                       "unsupported bundle version 2", Error);

  json doc = body_of(text);
  doc.erase("q_table");
  CHECK_THROWS_WITH_AS(parse_bundle(seal(doc)), "bundle missing section q_table",
                       Error);

  doc = body_of(text);
  doc["schema_hash"] = "0000";
  CHECK_THROWS_WITH_AS(parse_bundle(seal(doc)), "bundle: schema hash mismatch", Error);
}

TEST_CASE("bundle timestamp follows SOURCE_DATE_EPOCH") {
  setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  CHECK(build_timestamp() == 1700000000);
  setenv("SOURCE_DATE_EPOCH", "junk", 1);
  CHECK(build_timestamp() == 0);
  unsetenv("SOURCE_DATE_EPOCH");
  CHECK(build_timestamp() == 0);
}

TEST_CASE("score_nlu against hidden annotations") {
  const Domain& d = testing::default_domain();
  RandomSource rng(7);
  auto corpus = generate_corpus(100, d, UserProfile{}, rng);
  auto ds = distant_supervise(corpus.conversations, d.schema, d.gazetteer, d.patterns);
  IntentModel m = train_intent_model(ds.examples);
  NluScores s = score_nlu(d, m, corpus.conversations, corpus.annotations);
  CHECK(s.turns > 0);
  CHECK((s.act_accuracy >= 0.0 && s.act_accuracy <= 1.0));
  CHECK(s.slot_f1 >= 0.9);
}

}  // namespace
}  // namespace convreco

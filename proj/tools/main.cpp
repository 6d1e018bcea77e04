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

// convreco command-line interface: train, simulate, eval, chat, serve.

#include <chrono>
#include <csignal>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "convreco/pipeline.hpp"
#include "convreco/service.hpp"
#include "convreco/simulator.hpp"

namespace {

using convreco::json;

int run_train(const std::string& config_path, const std::string& out,
              std::string report_dir) {
  convreco::PipelineConfig cfg = convreco::load_pipeline_config(config_path);
  if (report_dir.empty()) {
    auto parent = std::filesystem::path(out).parent_path();
    report_dir = parent.empty() ? "." : parent.string();
  }
  const auto start = std::chrono::steady_clock::now();
  auto progress = [&](const std::string& msg) {
    const double s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    std::cerr << "[" << std::fixed << std::setprecision(1) << s << "s] " << msg
              << "\n";
  };
  convreco::PipelineResult result = convreco::run_pipeline(cfg, progress);
  convreco::write_pipeline_outputs(result, out, report_dir);
  progress("done");
  std::cout << result.report_text;
  return 0;
}

int run_simulate(const std::string& config_path, size_t n, uint64_t seed,
                 const std::string& out, std::string sidecar) {
  convreco::PipelineConfig cfg = convreco::load_pipeline_config(config_path);
  convreco::Domain domain = convreco::Domain::load(
      cfg.resolve(cfg.schema_path), cfg.resolve(cfg.catalog_path),
      cfg.resolve(cfg.synonyms_path), cfg.resolve(cfg.templates_path));
  convreco::RandomSource rng(seed);
  auto corpus = convreco::generate_corpus(n, domain, cfg.profile, rng);
  if (sidecar.empty()) {
    std::filesystem::path p(out);
    sidecar = (p.parent_path() / (p.stem().string() + ".annotations.jsonl")).string();
  }
  convreco::write_file_atomic(out, convreco::corpus_to_jsonl(corpus.conversations));
  convreco::write_file_atomic(sidecar, convreco::annotations_to_jsonl(corpus.annotations));
  std::cerr << "wrote " << n << " conversations to " << out
            << " and annotations to " << sidecar << "\n";
  return 0;
}

int run_eval(const std::string& bundle_path, size_t n, uint64_t seed) {
  convreco::ModelBundle bundle = convreco::load_bundle(bundle_path);
  convreco::PipelineConfig cfg = bundle.config.get<convreco::PipelineConfig>();
  const auto& models = bundle.models;
  auto greedy = convreco::evaluate(models, models.q_table, cfg.profile, n, seed,
                                   convreco::ActionMode::kPolicy);
  auto random = convreco::evaluate(models, models.q_table, cfg.profile, n, seed,
                                   convreco::ActionMode::kRandom);
  auto random_legal = convreco::evaluate(models, models.q_table, cfg.profile, n,
                                         seed, convreco::ActionMode::kRandomLegal);
  json out{{"n", n},
           {"seed", seed},
           {"policy", greedy},
           {"random", random},
           {"random_legal", random_legal}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

void print_reply(const convreco::AgentReply& r) {
  std::cout << "agent> " << r.text << "\n";
  for (const auto& rec : r.recommendations) {
    std::cout << "         - " << rec.name << " [" << rec.product_id << "] "
              << convreco::format_price(rec.price) << "\n";
  }
  if (r.order) {
    std::cout << "         order placed: " << r.order->product_id << "\n";
  }
}

int run_chat(const std::string& bundle_path, const std::string& user_id) {
  convreco::ChatService service(convreco::load_bundle(bundle_path));
  const std::string id = service.create_session(user_id);
  std::cout << "Type a message, or an empty line to quit.\n";
  std::string line;
  while (std::cout << "you> " << std::flush, std::getline(std::cin, line)) {
    if (line.empty()) break;
    convreco::AgentReply reply = service.handle_message(id, line);
    print_reply(reply);
    if (reply.closed) break;
  }
  return 0;
}

convreco::HttpServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int run_serve(const std::string& bundle_path, const std::string& addr,
              const std::string& catalog_path, const std::string& log_dir,
              const std::string& snapshot_path) {
  convreco::ModelBundle bundle = convreco::load_bundle(bundle_path);
  if (!catalog_path.empty()) {
    auto& d = bundle.models.domain;
    convreco::Catalog catalog = convreco::load_catalog(catalog_path, d.schema);
    d = convreco::Domain::create(d.schema, d.synonyms, std::move(catalog),
                                 d.templates);
  }
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw convreco::Error("--addr must be HOST:PORT");
  const std::string host = addr.substr(0, colon);
  const int port = std::stoi(addr.substr(colon + 1));

  convreco::ServiceOptions options;
  options.log_dir = log_dir;
  options.snapshot_path = snapshot_path;
  convreco::ChatService service(std::move(bundle), options);
  convreco::HttpServer server(service);
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cerr << "listening on " << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    g_server = nullptr;
    throw convreco::Error("could not listen on " + addr);
  }
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convreco: conversational product recommender"};
  app.require_subcommand(1);

  std::string config = "data/config.json";
  std::string out = "bundle.json";
  std::string report_dir;
  auto* train = app.add_subcommand("train", "Run the training pipeline");
  train->add_option("--config", config, "Pipeline config")->envname("CONVRECO_CONFIG");
  train->add_option("--out", out, "Bundle output path")->envname("CONVRECO_OUT");
  train->add_option("--report-dir", report_dir,
                    "Directory for report.json, report.txt and curve.csv "
                    "(default: the bundle's directory)")
      ->envname("CONVRECO_REPORT_DIR");

  size_t n = 2000;
  uint64_t seed = 7;
  std::string corpus_out = "corpus.jsonl";
  std::string sidecar;
  auto* simulate = app.add_subcommand("simulate", "Generate a simulated corpus");
  simulate->add_option("--config", config, "Pipeline config (domain files, profile)")
      ->envname("CONVRECO_CONFIG");
  simulate->add_option("--n", n, "Conversations")->envname("CONVRECO_N");
  simulate->add_option("--seed", seed, "Seed")->envname("CONVRECO_SEED");
  simulate->add_option("--out", corpus_out, "Corpus path (JSON lines)")
      ->envname("CONVRECO_OUT");
  simulate->add_option("--sidecar", sidecar,
                       "Hidden annotation path (default: <out>.annotations.jsonl)")
      ->envname("CONVRECO_SIDECAR");

  std::string bundle = "bundle.json";
  size_t eval_n = 1000;
  uint64_t eval_seed = 3;
  auto* eval = app.add_subcommand("eval", "Evaluate a bundle against simulated users");
  eval->add_option("--bundle", bundle, "Model bundle")->envname("CONVRECO_BUNDLE");
  eval->add_option("--n", eval_n, "Dialogues")->envname("CONVRECO_N");
  eval->add_option("--seed", eval_seed, "Seed")->envname("CONVRECO_SEED");

  std::string user_id = "local";
  auto* chat = app.add_subcommand("chat", "Chat with the agent in the terminal");
  chat->add_option("--bundle", bundle, "Model bundle")->envname("CONVRECO_BUNDLE");
  chat->add_option("--user-id", user_id, "User id")->envname("CONVRECO_USER_ID");

  std::string addr = "127.0.0.1:8080";
  std::string catalog;
  std::string log_dir;
  std::string snapshot;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--bundle", bundle, "Model bundle")->envname("CONVRECO_BUNDLE");
  serve->add_option("--addr", addr, "HOST:PORT")->envname("CONVRECO_ADDR");
  serve->add_option("--catalog", catalog, "Catalog overriding the bundle's")
      ->envname("CONVRECO_CATALOG");
  serve->add_option("--log-dir", log_dir, "Session event log directory")
      ->envname("CONVRECO_LOG_DIR");
  serve->add_option("--snapshot", snapshot, "Periodic bundle snapshot path")
      ->envname("CONVRECO_SNAPSHOT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(config, out, report_dir);
    if (*simulate) return run_simulate(config, n, seed, corpus_out, sidecar);
    if (*eval) return run_eval(bundle, eval_n, eval_seed);
    if (*chat) return run_chat(bundle, user_id);
    if (*serve) return run_serve(bundle, addr, catalog, log_dir, snapshot);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

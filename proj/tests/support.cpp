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

#include "support.hpp"

namespace convreco::testing {

std::string data_file(const std::string& name) {
  return std::string(CONVRECO_DATA_DIR) + "/" + name;
}

const Domain& default_domain() {
  static const Domain domain =
      Domain::load(data_file("schema.json"), data_file("catalog.json"),
                   data_file("synonyms.json"), data_file("templates.json"));
  return domain;
}

PipelineConfig default_config() {
  return load_pipeline_config(data_file("config.json"));
}

SlotSchema small_schema() {
  SlotSchema s;
  s.slots = {{"food", ValueDomain::kEnumerated, true, "ask_food"},
             {"location", ValueDomain::kOpenText, true, "ask_location"},
             {"price_range", ValueDomain::kEnumerated, true, "ask_price_range"},
             {"diet", ValueDomain::kEnumerated, false, "ask_diet"}};
  s.patterns = {{"location", "\\b[0-9]{5}\\b"}};
  return s;
}

Catalog small_catalog() {
  std::vector<Product> products = {
      {"p1", "Sushi Go", {{"food", "japanese"}, {"location", "95070"}, {"price_range", "cheap"}}, 9.0},
      {"p2", "Trattoria", {{"food", "italian"}, {"location", "95070"}, {"price_range", "moderate"}}, 18.0},
      {"p3", "Kaiseki House", {{"food", "japanese"}, {"location", "95014"}, {"price_range", "expensive"}}, 60.0},
      {"p4", "Green Bento", {{"food", "japanese"}, {"location", "95070"}, {"price_range", "moderate"}, {"diet", "vegetarian"}}, 15.0},
  };
  return Catalog(std::move(products), small_schema());
}

const PipelineResult& trained_default() {
  static const PipelineResult result = run_pipeline(default_config());
  return result;
}

SlotValue sv(const std::string& slot, const std::string& value) {
  SlotValue v;
  v.slot = slot;
  v.value = value;
  return v;
}

}  // namespace convreco::testing

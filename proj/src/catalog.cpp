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

#include "convreco/catalog.hpp"

#include <algorithm>
#include <set>

namespace convreco {

namespace {

// 1-based line of the `ordinal`-th occurrence of `"id"` in `text`.
int line_of_id_field(std::string_view text, size_t ordinal) {
  size_t pos = 0;
  for (size_t seen = 0;; ++seen) {
    pos = text.find("\"id\"", pos);
    if (pos == std::string_view::npos) return 0;
    if (seen == ordinal) break;
    pos += 4;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

size_t word_count(const std::string& phrase) {
  return static_cast<size_t>(std::count(phrase.begin(), phrase.end(), ' ')) + 1;
}

}  // namespace

Catalog::Catalog(std::vector<Product> products, SlotSchema schema)
    : products_(std::move(products)), schema_(std::move(schema)) {
  for (size_t i = 0; i < products_.size(); ++i) {
    const Product& p = products_[i];
    if (!index_.emplace(p.id, i).second) {
      throw Error("duplicate product id \"" + p.id + "\"");
    }
    for (const auto& [slot, value] : p.attributes) {
      if (schema_.find(slot) == nullptr) {
        throw Error("product \"" + p.id + "\": unknown slot \"" + slot + "\"");
      }
    }
  }
}

const Product* Catalog::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &products_[it->second];
}

std::optional<size_t> Catalog::position(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Catalog::values_for(const std::string& slot) const {
  std::vector<std::string> values;
  std::set<std::string> seen;
  for (const auto& p : products_) {
    const std::string* v = p.attribute(slot);
    if (v != nullptr && seen.insert(*v).second) values.push_back(*v);
  }
  return values;
}

Catalog parse_catalog(std::string_view text, const SlotSchema& schema,
                      const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(source + ": parse error: " + e.what());
  }
  if (!doc.is_array()) throw Error(source + ": catalog must be a JSON array");

  std::vector<Product> products;
  std::set<std::string> ids;
  for (size_t i = 0; i < doc.size(); ++i) {
    const json& item = doc[i];
    Product p;
    int line = line_of_id_field(text, i);
    auto where = [&](const std::string& id) {
      return source + ":" + std::to_string(line) + ": product \"" + id + "\": ";
    };
    try {
      p.id = item.at("id").get<std::string>();
      p.name = item.value("name", p.id);
      p.price = item.value("price", 0.0);
      if (item.contains("attributes")) {
        for (const auto& [slot, value] : item.at("attributes").items()) {
          p.attributes[slot] = normalize_value(value.get<std::string>());
        }
      }
    } catch (const json::exception& e) {
      throw Error(where(p.id) + e.what());
    }
    if (p.price < 0.0) throw Error(where(p.id) + "negative price");
    if (!ids.insert(p.id).second) throw Error(where(p.id) + "duplicate id");
    for (const auto& [slot, value] : p.attributes) {
      if (schema.find(slot) == nullptr) {
        throw Error(where(p.id) + "unknown slot \"" + slot + "\"");
      }
    }
    products.push_back(std::move(p));
  }
  return Catalog(std::move(products), schema);
}

Catalog load_catalog(const std::string& path, const SlotSchema& schema) {
  return parse_catalog(read_file(path), schema, path);
}

json catalog_to_json(const Catalog& catalog) {
  json out = json::array();
  for (const auto& p : catalog.products()) {
    out.push_back(json{{"id", p.id},
                       {"name", p.name},
                       {"price", p.price},
                       {"attributes", p.attributes}});
  }
  return out;
}

Gazetteer build_gazetteer(const Catalog& catalog, const SynonymMap& synonyms) {
  Gazetteer gaz;
  // Canonical value -> slot, for synonym resolution.
  std::map<std::string, std::string> value_slot;
  for (const auto& def : catalog.schema().slots) {
    if (def.value_domain != ValueDomain::kEnumerated) continue;
    for (const auto& value : catalog.values_for(def.name)) {
      gaz.entries.emplace(value, GazetteerEntry{def.name, value});
      value_slot.emplace(value, def.name);
    }
  }
  for (const auto& [raw_phrase, raw_target] : synonyms) {
    std::string phrase = normalize_value(raw_phrase);
    std::string target = normalize_value(raw_target);
    auto it = value_slot.find(target);
    if (it == value_slot.end()) {
      gaz.warnings.push_back("synonym \"" + phrase + "\" -> \"" + target +
                             "\": target not in catalog, skipped");
      continue;
    }
    gaz.entries.emplace(phrase, GazetteerEntry{it->second, target});
  }
  for (const auto& [phrase, entry] : gaz.entries) {
    gaz.max_phrase_words =
        std::max(gaz.max_phrase_words, static_cast<int>(word_count(phrase)));
  }
  return gaz;
}

bool satisfies(const Product& product, const std::vector<SlotValue>& constraints) {
  for (const auto& c : constraints) {
    const std::string* v = product.attribute(c.slot);
    if (v == nullptr || *v != c.value) return false;
  }
  return true;
}

std::vector<const Product*> filter_products(
    const Catalog& catalog, const std::vector<SlotValue>& constraints) {
  std::vector<const Product*> out;
  for (const auto& p : catalog.products()) {
    if (satisfies(p, constraints)) out.push_back(&p);
  }
  return out;
}

}  // namespace convreco

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

// Product catalog, the slot-value gazetteer derived from it, and hard
// constraint filtering.

#ifndef CONVRECO_CATALOG_HPP_
#define CONVRECO_CATALOG_HPP_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "convreco/core.hpp"

namespace convreco {

struct Product {
  std::string id;
  std::string name;
  std::map<std::string, std::string> attributes;
  double price = 0.0;

  // Value of `slot`, or nullptr when the product does not define it.
  const std::string* attribute(const std::string& slot) const {
    auto it = attributes.find(slot);
    return it == attributes.end() ? nullptr : &it->second;
  }
};

class Catalog {
 public:
  Catalog() = default;
  // Throws Error on duplicate ids or attributes outside the schema.
  Catalog(std::vector<Product> products, SlotSchema schema);

  const std::vector<Product>& products() const { return products_; }
  const SlotSchema& schema() const { return schema_; }
  bool empty() const { return products_.empty(); }

  const Product* find(std::string_view id) const;
  // Position in catalog order; used for deterministic tie-breaks.
  std::optional<size_t> position(std::string_view id) const;

  // Distinct values realized for `slot`, in first-seen catalog order.
  std::vector<std::string> values_for(const std::string& slot) const;

 private:
  std::vector<Product> products_;
  SlotSchema schema_;
  std::map<std::string, size_t, std::less<>> index_;
};

struct GazetteerEntry {
  std::string slot;
  std::string value;
};

struct Gazetteer {
  // Normalized phrase -> (slot, canonical value).
  std::map<std::string, GazetteerEntry> entries;
  int max_phrase_words = 1;
  // Synonyms skipped because their target never occurs in the catalog.
  std::vector<std::string> warnings;
};

// Parses a JSON array of {id, name, price, attributes}. Errors name the
// offending product id and the line of its "id" field.
Catalog load_catalog(const std::string& path, const SlotSchema& schema);
Catalog parse_catalog(std::string_view text, const SlotSchema& schema,
                      const std::string& source = "<catalog>");
json catalog_to_json(const Catalog& catalog);

Gazetteer build_gazetteer(const Catalog& catalog, const SynonymMap& synonyms);

// Products whose attributes equal every constraint value, in catalog order.
// A product lacking a constrained attribute does not match.
std::vector<const Product*> filter_products(
    const Catalog& catalog, const std::vector<SlotValue>& constraints);

bool satisfies(const Product& product, const std::vector<SlotValue>& constraints);

}  // namespace convreco

#endif  // CONVRECO_CATALOG_HPP_

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

// Fixtures shared by the test suites.

#ifndef CONVRECO_TESTS_SUPPORT_HPP_
#define CONVRECO_TESTS_SUPPORT_HPP_

#include <string>
#include <vector>

#include "convreco/pipeline.hpp"

namespace convreco::testing {

std::string data_file(const std::string& name);

// The shipped restaurant domain, loaded once.
const Domain& default_domain();

// The shipped config with base_dir pointing at the data directory.
PipelineConfig default_config();

// food (enumerated, required), location (open, required, 5-digit pattern),
// price_range (enumerated, required), diet (enumerated, optional).
SlotSchema small_schema();

// p1 japanese/95070/cheap, p2 italian/95070/moderate,
// p3 japanese/95014/expensive, p4 japanese/95070/moderate (vegetarian).
Catalog small_catalog();

// A result of the default pipeline, computed on first use.
const PipelineResult& trained_default();

SlotValue sv(const std::string& slot, const std::string& value);

}  // namespace convreco::testing

#endif  // CONVRECO_TESTS_SUPPORT_HPP_

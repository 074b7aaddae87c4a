// Copyright 2026 The qdecomp Authors. All Rights Reserved.
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

#ifndef QDECOMP_EDITING_H_
#define QDECOMP_EDITING_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "qdecomp/corpus.h"
#include "qdecomp/retrieval.h"

namespace qdecomp {

enum class EntityType { kDateYear, kNumber, kCapitalizedSpan };

std::string_view EntityTypeName(EntityType type);

struct EntitySpan {
  std::size_t token_start = 0;  // half-open token range
  std::size_t token_end = 0;
  std::string surface;  // cased tokens joined by single spaces
  EntityType entity_type = EntityType::kCapitalizedSpan;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

// Rule-based typed entities over the cased tokens of `text`:
//   DATE_YEAR         four-digit token in [1000, 2999]
//   NUMBER            any other token made of digits (plus ',' or '.')
//   CAPITALIZED_SPAN  maximal run of capitalized tokens; a lone capitalized
//                     first token is sentence casing, not an entity
// Spans never overlap and come back in token order.
std::vector<EntitySpan> DetectEntities(std::string_view text);

// Same, for a question; detection runs on its original cased text.
std::vector<EntitySpan> DetectEntities(const Question& question);

// Rewrites each sub-question entity that does not occur in `question` with
// an entity of the same type from `question`, cycling through the
// question's same-type entities in order. Entities with no same-type
// counterpart are left alone. Replacement text keeps the question's casing.
PseudoDecomposition EditPseudoDecomposition(
    const Question& question, const PseudoDecomposition& decomposition);

}  // namespace qdecomp

#endif  // QDECOMP_EDITING_H_

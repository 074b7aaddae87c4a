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

#include "qdecomp/editing.h"

#include <algorithm>
#include <map>

namespace qdecomp {
namespace {

bool IsDigit(char c) { return c >= '0' && c <= '9'; }

bool IsYear(std::string_view t) {
  if (t.size() != 4 || !std::all_of(t.begin(), t.end(), IsDigit)) return false;
  return t[0] == '1' || t[0] == '2';
}

bool IsNumber(std::string_view t) {
  bool digit = false;
  for (char c : t) {
    if (IsDigit(c)) {
      digit = true;
    } else if (c != ',' && c != '.') {
      return false;
    }
  }
  return digit;
}

bool IsCapitalized(std::string_view t) {
  return !t.empty() && t[0] >= 'A' && t[0] <= 'Z';
}

std::string JoinTokens(const std::vector<CasedToken>& tokens,
                       std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i].text;
  }
  return out;
}

std::vector<EntitySpan> DetectOnTokens(const std::vector<CasedToken>& tokens) {
  std::vector<EntitySpan> spans;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::string& t = tokens[i].text;
    if (IsYear(t)) {
      spans.push_back({i, i + 1, t, EntityType::kDateYear});
      ++i;
    } else if (IsNumber(t)) {
      spans.push_back({i, i + 1, t, EntityType::kNumber});
      ++i;
    } else if (IsCapitalized(t)) {
      std::size_t j = i;
      while (j < tokens.size() && IsCapitalized(tokens[j].text)) ++j;
      if (!(i == 0 && j == 1)) {
        spans.push_back({i, j, JoinTokens(tokens, i, j),
                         EntityType::kCapitalizedSpan});
      }
      i = j;
    } else {
      ++i;
    }
  }
  return spans;
}

bool OccursIn(const std::vector<CasedToken>& haystack,
              const std::vector<CasedToken>& needle_tokens,
              const EntitySpan& needle) {
  const std::size_t len = needle.token_end - needle.token_start;
  if (len == 0 || len > haystack.size()) return false;
  for (std::size_t s = 0; s + len <= haystack.size(); ++s) {
    bool match = true;
    for (std::size_t k = 0; k < len && match; ++k) {
      match = haystack[s + k].text == needle_tokens[needle.token_start + k].text;
    }
    if (match) return true;
  }
  return false;
}

}  // namespace

std::string_view EntityTypeName(EntityType type) {
  switch (type) {
    case EntityType::kDateYear: return "DATE_YEAR";
    case EntityType::kNumber: return "NUMBER";
    case EntityType::kCapitalizedSpan: return "CAPITALIZED_SPAN";
  }
  return "UNKNOWN";
}

std::vector<EntitySpan> DetectEntities(std::string_view text) {
  return DetectOnTokens(TokenizeCased(text));
}

std::vector<EntitySpan> DetectEntities(const Question& question) {
  return DetectEntities(question.raw_text());
}

PseudoDecomposition EditPseudoDecomposition(
    const Question& question, const PseudoDecomposition& decomposition) {
  const std::string& q_text = question.raw_text();
  const auto q_tokens = TokenizeCased(q_text);
  const auto q_entities = DetectOnTokens(q_tokens);

  // Replacement surfaces per type, in question order, taken verbatim from
  // the question text.
  std::map<EntityType, std::vector<std::string>> sources;
  for (const auto& e : q_entities) {
    const std::size_t begin = q_tokens[e.token_start].begin;
    const std::size_t end = q_tokens[e.token_end - 1].end;
    sources[e.entity_type].push_back(q_text.substr(begin, end - begin));
  }
  std::map<EntityType, std::size_t> next_source;

  PseudoDecomposition out = decomposition;
  out.edited = true;
  for (auto& sub : out.sub_texts) {
    const auto tokens = TokenizeCased(sub);
    std::string edited;
    std::size_t copied = 0;
    for (const auto& e : DetectOnTokens(tokens)) {
      if (OccursIn(q_tokens, tokens, e)) continue;
      auto it = sources.find(e.entity_type);
      if (it == sources.end()) continue;
      std::size_t& cursor = next_source[e.entity_type];
      const std::string& replacement = it->second[cursor % it->second.size()];
      ++cursor;
      const std::size_t begin = tokens[e.token_start].begin;
      const std::size_t end = tokens[e.token_end - 1].end;
      edited.append(sub, copied, begin - copied);
      edited += replacement;
      copied = end;
    }
    edited.append(sub, copied, std::string::npos);
    sub = std::move(edited);
  }
  return out;
}

}  // namespace qdecomp

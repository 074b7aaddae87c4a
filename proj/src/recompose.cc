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

#include "qdecomp/recompose.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include "json.hpp"
#include "qdecomp/error.h"

namespace qdecomp {
namespace {

struct Adjusted {
  const std::string* paragraph_id;
  const std::string* span_id;
  double logit;
};

bool BeforeById(const Adjusted& a, const Adjusted& b) {
  if (*a.paragraph_id != *b.paragraph_id) {
    return *a.paragraph_id < *b.paragraph_id;
  }
  return *a.span_id < *b.span_id;
}

std::vector<Adjusted> AdjustedLogits(
    std::span<const ParagraphLogits> paragraphs) {
  std::set<std::string_view> seen;
  std::vector<Adjusted> out;
  for (const auto& p : paragraphs) {
    p.Validate();
    if (!seen.insert(p.paragraph_id).second) {
      throw DataError("paragraph id '" + p.paragraph_id + "' repeats");
    }
    for (const auto& s : p.spans) {
      out.push_back({&p.paragraph_id, &s.span_id, s.logit - p.no_answer_logit});
    }
  }
  if (out.empty()) throw DataError("no answer spans in any paragraph");
  return out;
}

}  // namespace

void ParagraphLogits::Validate() const {
  if (!std::isfinite(no_answer_logit)) {
    throw DataError("paragraph '" + paragraph_id +
                    "' has a non-finite no-answer logit");
  }
  std::set<std::string_view> ids;
  for (const auto& s : spans) {
    if (!std::isfinite(s.logit)) {
      throw DataError("span '" + s.span_id + "' in paragraph '" +
                      paragraph_id + "' has a non-finite logit");
    }
    if (!ids.insert(s.span_id).second) {
      throw DataError("span id '" + s.span_id + "' repeats in paragraph '" +
                      paragraph_id + "'");
    }
  }
}

std::vector<SpanProbability> SpanProbabilities(
    std::span<const ParagraphLogits> paragraphs) {
  const auto adjusted = AdjustedLogits(paragraphs);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (const auto& a : adjusted) max_logit = std::max(max_logit, a.logit);
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& a : adjusted) {
    weights.push_back(std::exp(a.logit - max_logit));
    total += weights.back();
  }
  std::vector<SpanProbability> out;
  for (std::size_t i = 0; i < adjusted.size(); ++i) {
    out.push_back({*adjusted[i].paragraph_id, *adjusted[i].span_id,
                   weights[i] / total});
  }
  return out;
}

std::vector<ParagraphLogits> EnsembleAverage(
    std::span<const std::vector<ParagraphLogits>> logit_sets) {
  if (logit_sets.empty()) throw DataError("ensemble of zero models");
  const auto& first = logit_sets.front();
  std::vector<ParagraphLogits> out = first;
  for (std::size_t m = 1; m < logit_sets.size(); ++m) {
    const auto& set = logit_sets[m];
    if (set.size() != first.size()) {
      throw DataError("model " + std::to_string(m) + " has " +
                      std::to_string(set.size()) + " paragraphs, expected " +
                      std::to_string(first.size()));
    }
    for (std::size_t p = 0; p < set.size(); ++p) {
      if (set[p].paragraph_id != first[p].paragraph_id) {
        throw DataError("model " + std::to_string(m) + " paragraph " +
                        std::to_string(p) + " is '" + set[p].paragraph_id +
                        "', expected '" + first[p].paragraph_id + "'");
      }
      if (set[p].spans.size() != first[p].spans.size()) {
        throw DataError("model " + std::to_string(m) + " paragraph '" +
                        first[p].paragraph_id + "' has a different span count");
      }
      for (std::size_t s = 0; s < set[p].spans.size(); ++s) {
        if (set[p].spans[s].span_id != first[p].spans[s].span_id) {
          throw DataError("model " + std::to_string(m) + " diverges at span '" +
                          set[p].spans[s].span_id + "' of paragraph '" +
                          first[p].paragraph_id + "' (expected '" +
                          first[p].spans[s].span_id + "')");
        }
        out[p].spans[s].logit += set[p].spans[s].logit;
      }
      out[p].no_answer_logit += set[p].no_answer_logit;
    }
  }
  const double count = static_cast<double>(logit_sets.size());
  for (auto& p : out) {
    for (auto& s : p.spans) s.logit /= count;
    p.no_answer_logit /= count;
  }
  return out;
}

SpanProbability PredictAnswer(std::span<const ParagraphLogits> paragraphs) {
  const auto adjusted = AdjustedLogits(paragraphs);
  const Adjusted* best = &adjusted.front();
  for (const auto& a : adjusted) {
    if (a.logit > best->logit ||
        (a.logit == best->logit && BeforeById(a, *best))) {
      best = &a;
    }
  }
  for (const auto& sp : SpanProbabilities(paragraphs)) {
    if (sp.paragraph_id == *best->paragraph_id &&
        sp.span_id == *best->span_id) {
      return sp;
    }
  }
  throw DataError("internal: predicted span missing");
}

std::vector<SpanProbability> RankSpans(
    std::span<const ParagraphLogits> paragraphs) {
  const auto adjusted = AdjustedLogits(paragraphs);
  auto probs = SpanProbabilities(paragraphs);
  std::vector<std::size_t> order(adjusted.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (adjusted[a].logit != adjusted[b].logit) {
      return adjusted[a].logit > adjusted[b].logit;
    }
    return BeforeById(adjusted[a], adjusted[b]);
  });
  std::vector<SpanProbability> out;
  for (std::size_t i : order) out.push_back(probs[i]);
  return out;
}

std::vector<ParagraphLogits> ReadParagraphLogits(std::istream& in) {
  std::vector<ParagraphLogits> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto obj = nlohmann::json::parse(line);
      ParagraphLogits p;
      p.paragraph_id = obj.at("paragraph_id").get<std::string>();
      p.no_answer_logit = obj.at("no_answer_logit").get<double>();
      for (const auto& s : obj.at("spans")) {
        p.spans.push_back(
            {s.at("span_id").get<std::string>(), s.at("logit").get<double>()});
      }
      p.Validate();
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void WriteParagraphLogits(std::span<const ParagraphLogits> paragraphs,
                          std::ostream& out) {
  for (const auto& p : paragraphs) {
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : p.spans) {
      spans.push_back({{"span_id", s.span_id}, {"logit", s.logit}});
    }
    nlohmann::json obj = {{"paragraph_id", p.paragraph_id},
                          {"no_answer_logit", p.no_answer_logit},
                          {"spans", spans}};
    out << obj.dump() << '\n';
  }
}

}  // namespace qdecomp

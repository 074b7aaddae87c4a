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

#include "qdecomp/metrics.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "qdecomp/error.h"

namespace qdecomp {
namespace {

std::unordered_map<std::string, std::size_t> CountNgrams(
    std::span<const std::string> tokens, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) key += '\x1f';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

double Mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double Variance(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

}  // namespace

double Bleu(std::span<const TokenList> hypotheses,
            std::span<const TokenList> references, std::size_t max_n) {
  if (hypotheses.empty()) throw DataError("BLEU over an empty corpus");
  if (hypotheses.size() != references.size()) {
    throw DataError("BLEU needs one reference per hypothesis");
  }
  if (max_n == 0) throw UsageError("BLEU needs max_n >= 1");
  std::vector<std::size_t> matches(max_n, 0);
  std::vector<std::size_t> totals(max_n, 0);
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      auto hyp_counts = CountNgrams(hyp, n);
      auto ref_counts = CountNgrams(ref, n);
      for (const auto& [gram, count] : hyp_counts) {
        totals[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) {
          matches[n - 1] += std::min(count, it->second);
        }
      }
    }
  }
  if (hyp_len == 0) return ref_len == 0 ? 1.0 : 0.0;
  double log_precision = 0.0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (totals[n] == 0) continue;
    if (matches[n] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(matches[n]) /
                              static_cast<double>(totals[n]));
  }
  const double brevity = std::exp(std::min(
      0.0, 1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len)));
  return brevity * std::exp(log_precision / static_cast<double>(max_n));
}

std::vector<TokenList> SplitSubQuestionTokens(std::span<const std::string> d) {
  std::vector<TokenList> parts;
  TokenList current;
  for (const auto& tok : d) {
    current.push_back(tok);
    if (tok == "?") {
      parts.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) parts.push_back(std::move(current));
  return parts;
}

bool IsGoodDecomposition(const Question& question, std::string_view d) {
  const TokenList tokens = Tokenize(d);
  if (std::count(tokens.begin(), tokens.end(), "?") != 2) return false;
  const std::set<std::string> q_set(question.tokens().begin(),
                                    question.tokens().end());
  for (const auto& sub : SplitSubQuestionTokens(tokens)) {
    if (sub.size() > question.tokens().size()) return false;
    const std::set<std::string> sub_set(sub.begin(), sub.end());
    if (std::includes(sub_set.begin(), sub_set.end(), q_set.begin(),
                      q_set.end())) {
      return false;
    }
  }
  return true;
}

RoundTripRecord::RoundTripRecord(Question q_in, std::string d_hat_in,
                                 std::string q_hat_in)
    : q(std::move(q_in)), d_hat(std::move(d_hat_in)),
      q_hat(std::move(q_hat_in)) {
  if (q.raw_text().empty() || d_hat.empty() || q_hat.empty()) {
    throw DataError("round-trip record '" + q.id() + "' has an empty field");
  }
}

double ScaledRoundTripBleu(std::span<const RoundTripRecord> records) {
  return EvaluateRoundTrip(records).scaled;
}

RoundTripReport EvaluateRoundTrip(std::span<const RoundTripRecord> records) {
  if (records.empty()) throw DataError("no round-trip records");
  std::vector<TokenList> hyps;
  std::vector<TokenList> refs;
  std::size_t good = 0;
  double edit_sum = 0.0;
  double ratio_sum = 0.0;
  for (const auto& r : records) {
    hyps.push_back(Tokenize(r.q_hat));
    refs.push_back(r.q.tokens());
    if (IsGoodDecomposition(r.q, r.d_hat)) ++good;
    edit_sum += static_cast<double>(EditDistance(r.q, r.d_hat));
    ratio_sum += LengthRatio(r.q, r.d_hat);
  }
  RoundTripReport report;
  const double n = static_cast<double>(records.size());
  report.count = records.size();
  report.bleu = Bleu(hyps, refs);
  report.good_fraction = static_cast<double>(good) / n;
  report.scaled = report.bleu * report.good_fraction;
  report.edit_distance_mean = edit_sum / n;
  report.length_ratio_mean = ratio_sum / n;
  return report;
}

void StoppingState::Record(int epoch, double value) {
  if (!history_.empty() && epoch <= history_.back().first) {
    throw UsageError("stopping history epochs must strictly increase");
  }
  history_.emplace_back(epoch, value);
}

bool StoppingDecision(std::span<const double> values) {
  if (values.size() < kStoppingPatience + 1) return false;
  const auto window = values.end() - kStoppingPatience;
  const double best_before = *std::max_element(values.begin(), window);
  return std::all_of(window, values.end(),
                     [&](double v) { return v <= best_before; });
}

bool StoppingDecision(const StoppingState& state) {
  std::vector<double> values;
  for (const auto& [epoch, value] : state.history()) values.push_back(value);
  return StoppingDecision(values);
}

std::size_t TokenEditDistance(std::span<const std::string> a,
                              std::span<const std::string> b) {
  // Single-row dynamic program; row[j] holds the distance between the
  // current prefix of a and b[0, j).
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({substitute, row[j - 1] + 1, above + 1});
      diagonal = above;
    }
  }
  return row[b.size()];
}

std::size_t EditDistance(const Question& question, std::string_view d) {
  return TokenEditDistance(question.tokens(), Tokenize(d));
}

double LengthRatio(const Question& question, std::string_view d) {
  if (question.tokens().empty()) {
    throw DataError("length ratio against an empty question '" +
                    question.id() + "'");
  }
  return static_cast<double>(Tokenize(d).size()) /
         static_cast<double>(question.tokens().size());
}

DecompositionReport MakeDecompositionReport(
    std::span<const std::pair<Question, std::string>> pairs) {
  if (pairs.empty()) throw DataError("decomposition report over no pairs");
  std::vector<double> edits;
  std::vector<double> ratios;
  std::size_t good = 0;
  for (const auto& [q, d] : pairs) {
    edits.push_back(static_cast<double>(EditDistance(q, d)));
    ratios.push_back(LengthRatio(q, d));
    if (IsGoodDecomposition(q, d)) ++good;
  }
  DecompositionReport report;
  report.count = pairs.size();
  report.edit_distance_mean = Mean(edits);
  report.edit_distance_variance = Variance(edits, report.edit_distance_mean);
  report.length_ratio_mean = Mean(ratios);
  report.length_ratio_variance = Variance(ratios, report.length_ratio_mean);
  report.good_fraction =
      static_cast<double>(good) / static_cast<double>(pairs.size());
  std::vector<double> sorted = edits;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  report.edit_distance_median = sorted.size() % 2 == 1
                                    ? sorted[mid]
                                    : (sorted[mid - 1] + sorted[mid]) / 2.0;
  return report;
}

}  // namespace qdecomp

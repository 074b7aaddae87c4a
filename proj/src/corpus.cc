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

#include "qdecomp/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "qdecomp/error.h"

namespace qdecomp {
namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

char AsciiLower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

bool IsPunctuationChar(char c) {
  switch (c) {
    case '?': case '.': case ',': case ';': case ':': case '!':
    case '"': case '\'': case '(': case ')':
      return true;
    default:
      return false;
  }
}

std::vector<CasedToken> TokenizeCased(std::string_view text) {
  std::vector<CasedToken> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (IsSpace(text[i])) {
      ++i;
    } else if (IsPunctuationChar(text[i])) {
      tokens.push_back({std::string(1, text[i]), i, i + 1});
      ++i;
    } else {
      std::size_t start = i;
      while (i < n && !IsSpace(text[i]) && !IsPunctuationChar(text[i])) ++i;
      tokens.push_back({std::string(text.substr(start, i - start)), start, i});
    }
  }
  return tokens;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& tok : TokenizeCased(text)) {
    std::transform(tok.text.begin(), tok.text.end(), tok.text.begin(),
                   AsciiLower);
    out.push_back(std::move(tok.text));
  }
  return out;
}

std::vector<std::string> SplitSubQuestions(std::string_view text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '?') {
      auto part = Trim(text.substr(start, i + 1 - start));
      if (!part.empty()) parts.emplace_back(part);
      start = i + 1;
    }
  }
  auto rest = Trim(text.substr(std::min(start, text.size())));
  if (!rest.empty()) parts.emplace_back(rest);
  return parts;
}

Question::Question(std::string id, std::string raw_text)
    : id_(std::move(id)),
      raw_text_(std::move(raw_text)),
      tokens_(Tokenize(raw_text_)) {}

void QuestionCorpus::Add(Question question) {
  auto [it, inserted] = by_id_.emplace(question.id(), questions_.size());
  if (!inserted) {
    throw DataError("duplicate question id '" + question.id() + "'");
  }
  questions_.push_back(std::move(question));
}

const Question* QuestionCorpus::Find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &questions_[it->second];
}

std::vector<std::string> DefaultWhWords() {
  return {"who", "what", "when", "where", "why", "which", "whom", "whose"};
}

std::string FormatId(std::size_t n, int width, std::string_view prefix) {
  std::string digits = std::to_string(n);
  std::string out(prefix);
  if (static_cast<int>(digits.size()) < width) {
    out.append(static_cast<std::size_t>(width) - digits.size(), '0');
  }
  out += digits;
  return out;
}

std::vector<Question> ExtractCandidateQuestions(
    std::span<const std::string> lines, const ExtractOptions& options,
    ExtractStats* stats) {
  std::unordered_set<std::string> wh;
  for (const auto& w : options.wh_words) {
    auto t = Tokenize(w);
    if (!t.empty()) wh.insert(t.front());
  }
  std::unordered_set<std::string> seen;
  ExtractStats local;
  std::vector<Question> out;
  for (const auto& line : lines) {
    ++local.lines;
    std::string_view text = Trim(line);
    if (text.empty()) {
      ++local.blank;
      continue;
    }
    auto tokens = Tokenize(text);
    const bool starts_wh = !tokens.empty() && wh.contains(tokens.front());
    const bool ends_q = text.back() == '?';
    if (!starts_wh && !ends_q) continue;
    if (options.dedup && !seen.emplace(text).second) {
      ++local.duplicates;
      continue;
    }
    out.emplace_back(FormatId(out.size(), options.id_width, options.id_prefix),
                     std::string(text));
  }
  local.kept = out.size();
  if (stats) *stats = local;
  return out;
}

QuestionCorpus ReadCorpus(std::istream& in, std::optional<std::string> label) {
  QuestionCorpus corpus(std::move(label));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) +
                      ": malformed JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text") ||
        !obj["id"].is_string() || !obj["text"].is_string()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": expected object with string fields \"id\" and "
                      "\"text\"");
    }
    try {
      corpus.Add(Question(obj["id"].get<std::string>(),
                          obj["text"].get<std::string>()));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

void WriteCorpus(const QuestionCorpus& corpus, std::ostream& out) {
  for (const auto& q : corpus) {
    nlohmann::json obj = {{"id", q.id()}, {"text", q.raw_text()}};
    out << obj.dump() << '\n';
  }
}

QuestionCorpus LoadCorpus(const std::filesystem::path& path,
                          std::optional<std::string> label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus '" + path.string() + "'");
  try {
    return ReadCorpus(in, std::move(label));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void SaveCorpus(const QuestionCorpus& corpus,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write corpus '" + path.string() + "'");
  WriteCorpus(corpus, out);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace qdecomp

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

#ifndef QDECOMP_CORPUS_H_
#define QDECOMP_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qdecomp {

// A token together with its byte range in the source text. Casing is kept.
struct CasedToken {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Whitespace split with the characters ? . , ; : ! " ' ( ) emitted as
// standalone tokens. Tokenize() additionally lowercases ASCII letters.
// Both produce the same segmentation, so positions line up.
std::vector<CasedToken> TokenizeCased(std::string_view text);
std::vector<std::string> Tokenize(std::string_view text);

bool IsPunctuationChar(char c);

// Splits a decomposition string into sub-questions, each ending at a '?'.
// Trailing text without a question mark becomes a final segment.
std::vector<std::string> SplitSubQuestions(std::string_view text);

class Question {
 public:
  Question(std::string id, std::string raw_text);

  const std::string& id() const { return id_; }
  const std::string& raw_text() const { return raw_text_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Question&, const Question&) = default;

 private:
  std::string id_;
  std::string raw_text_;
  std::vector<std::string> tokens_;
};

// Ordered question collection with unique ids. Built once on a single
// thread, then only read.
class QuestionCorpus {
 public:
  QuestionCorpus() = default;
  explicit QuestionCorpus(std::optional<std::string> label)
      : label_(std::move(label)) {}

  // Throws DataError when the id is already present.
  void Add(Question question);

  const Question* Find(std::string_view id) const;

  std::size_t size() const { return questions_.size(); }
  bool empty() const { return questions_.empty(); }
  const Question& operator[](std::size_t i) const { return questions_[i]; }
  std::span<const Question> questions() const { return questions_; }
  auto begin() const { return questions_.begin(); }
  auto end() const { return questions_.end(); }

  const std::optional<std::string>& label() const { return label_; }

  friend bool operator==(const QuestionCorpus& a, const QuestionCorpus& b) {
    return a.label_ == b.label_ && a.questions_ == b.questions_;
  }

 private:
  std::optional<std::string> label_;
  std::vector<Question> questions_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

std::vector<std::string> DefaultWhWords();

struct ExtractOptions {
  std::vector<std::string> wh_words = DefaultWhWords();
  // Drop lines whose exact text was already kept.
  bool dedup = false;
  int id_width = 10;
  std::string id_prefix;
};

struct ExtractStats {
  std::size_t lines = 0;
  std::size_t blank = 0;
  std::size_t kept = 0;
  std::size_t duplicates = 0;
};

// Keeps lines that start with a wh-word or end in '?'. Kept lines get
// sequential zero-padded ids in input order.
std::vector<Question> ExtractCandidateQuestions(
    std::span<const std::string> lines, const ExtractOptions& options = {},
    ExtractStats* stats = nullptr);

std::string FormatId(std::size_t n, int width, std::string_view prefix = {});

// JSONL, one {"id": ..., "text": ...} object per line.
QuestionCorpus ReadCorpus(std::istream& in,
                          std::optional<std::string> label = std::nullopt);
void WriteCorpus(const QuestionCorpus& corpus, std::ostream& out);
QuestionCorpus LoadCorpus(const std::filesystem::path& path,
                          std::optional<std::string> label = std::nullopt);
void SaveCorpus(const QuestionCorpus& corpus,
                const std::filesystem::path& path);

}  // namespace qdecomp

#endif  // QDECOMP_CORPUS_H_

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

#ifndef QDECOMP_CLASSIFIER_H_
#define QDECOMP_CLASSIFIER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qdecomp/corpus.h"

namespace qdecomp {

// Defaults are tuned for small fixtures; the training recipe itself is the
// usual averaged-embedding softmax classifier.
struct ClassifierConfig {
  std::size_t dim = 32;
  std::size_t epochs = 5;
  double learning_rate = 0.5;  // decays linearly to 0 over training
  std::size_t min_count = 1;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
};

struct LabeledCorpus {
  std::string label;
  QuestionCorpus corpus;
};

struct Classification {
  std::size_t label_index = 0;
  std::string label;
  std::vector<double> probabilities;  // in label order
  bool degenerate = false;            // no known token; uniform output
};

struct TrainingTrace {
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

// Bag-of-words classifier: averaged learned word embeddings feed a linear
// layer and a softmax. No character n-grams.
class LinearTextClassifier {
 public:
  // Labels are ordered by first appearance. Throws DataError for fewer
  // than two labels or a label without examples.
  static LinearTextClassifier Train(std::span<const LabeledCorpus> data,
                                    const ClassifierConfig& config,
                                    TrainingTrace* trace = nullptr);

  Classification Classify(const Question& question) const;
  Classification ClassifyTokens(std::span<const std::string> tokens) const;

  // Raw label scores; std::nullopt when no token is in the vocabulary.
  std::optional<std::vector<double>> Logits(
      std::span<const std::string> tokens) const;

  std::optional<std::size_t> LabelIndex(std::string_view label) const;
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  std::size_t dim() const { return dim_; }
  const ClassifierConfig& config() const { return config_; }

  void Save(const std::filesystem::path& path) const;
  static LinearTextClassifier Load(const std::filesystem::path& path);
  std::string ToJson() const;
  static LinearTextClassifier FromJson(std::string_view json);

  friend bool operator==(const LinearTextClassifier& a,
                         const LinearTextClassifier& b) {
    return a.labels_ == b.labels_ && a.vocab_ == b.vocab_ &&
           a.dim_ == b.dim_ && a.embeddings_ == b.embeddings_ &&
           a.weight_ == b.weight_ && a.bias_ == b.bias_;
  }

 private:
  void BuildIndex();
  std::vector<std::size_t> KnownWords(
      std::span<const std::string> tokens) const;
  void Hidden(std::span<const std::size_t> words, std::vector<double>& h) const;

  std::vector<std::string> labels_;
  std::vector<std::string> vocab_;  // sorted
  std::unordered_map<std::string, std::size_t> word_index_;
  std::size_t dim_ = 0;
  std::vector<double> embeddings_;  // vocab x dim
  std::vector<double> weight_;      // labels x dim
  std::vector<double> bias_;        // labels
  ClassifierConfig config_;
};

// Fraction of questions whose predicted label matches their corpus label.
double EvaluateClassifier(const LinearTextClassifier& model,
                          std::span<const LabeledCorpus> heldout);

struct RoutingResult {
  QuestionCorpus single_hop{std::string("single-hop")};
  QuestionCorpus multi_hop{std::string("multi-hop")};
  std::size_t discarded = 0;
};

// Sends each mined question to the single-hop or multi-hop additions by
// its predicted label; any other label discards it.
RoutingResult RouteMinedQuestions(const LinearTextClassifier& model,
                                  const QuestionCorpus& mined,
                                  std::string_view single_label,
                                  std::string_view multi_label);

// Per-label seeded split. Every label keeps at least one training example.
std::pair<std::vector<LabeledCorpus>, std::vector<LabeledCorpus>>
SplitTrainHeldout(std::span<const LabeledCorpus> data,
                  double heldout_fraction, std::uint64_t seed);

}  // namespace qdecomp

#endif  // QDECOMP_CLASSIFIER_H_

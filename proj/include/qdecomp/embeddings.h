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

#ifndef QDECOMP_EMBEDDINGS_H_
#define QDECOMP_EMBEDDINGS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qdecomp/corpus.h"

namespace qdecomp {

// Word -> dense vector map. Vectors are stored as float; every component is
// finite and every vector has exactly dim() components.
class VectorTable {
 public:
  explicit VectorTable(std::size_t dim);

  // Returns false (and keeps the first vector) for a repeated word.
  bool Add(std::string word, std::span<const float> values);

  // nullptr when the word is out of vocabulary.
  const float* Find(std::string_view word) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::string& word(std::size_t i) const { return words_[i]; }

 private:
  std::size_t dim_;
  std::vector<std::string> words_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Text ".vec" layout: optional "count dim" header, then "word v1 ... v_dim".
VectorTable ReadVectorTable(std::istream& in);
VectorTable LoadVectorTable(const std::filesystem::path& path);

struct TextEmbedding {
  std::vector<double> vector;
  bool is_zero = true;
};

// Component-wise sum of in-vocabulary word vectors, accumulated in double.
TextEmbedding EmbedTextSum(std::span<const std::string> tokens,
                           const VectorTable& table);

double L2Norm(std::span<const double> v);
double Dot(std::span<const double> a, std::span<const double> b);

// Throws ZeroVectorError for the zero vector.
std::vector<double> UnitNormalize(std::span<const double> v);
double Cosine(std::span<const double> a, std::span<const double> b);

// Sparse vector with strictly increasing indices.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  bool empty() const { return indices.empty(); }
  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

double Dot(const SparseVector& a, const SparseVector& b);
double L2Norm(const SparseVector& v);

// Smoothed inverse document frequency over a fitted question corpus:
// idf(t) = ln((1 + N) / (1 + df(t))) + 1.
class TfidfModel {
 public:
  static TfidfModel Fit(const QuestionCorpus& corpus);
  TfidfModel(std::vector<std::string> terms, std::vector<double> idf,
             std::size_t corpus_size);

  // Raw tf * idf weights; unseen terms are ignored.
  SparseVector Weights(std::span<const std::string> tokens) const;

  std::optional<std::uint32_t> TermIndex(std::string_view term) const;
  std::size_t vocabulary_size() const { return terms_.size(); }
  std::size_t corpus_size() const { return corpus_size_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }

 private:
  std::vector<std::string> terms_;  // sorted; index == position
  std::vector<double> idf_;
  std::size_t corpus_size_ = 0;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// L2-normalized tf-idf vector. Throws ZeroVectorError if no term is known.
SparseVector TfidfEmbed(std::span<const std::string> tokens,
                        const TfidfModel& model);

enum class EmbeddingSource { kWordVectorSum, kTfidf };

std::string_view SourceName(EmbeddingSource source);

// Un-normalized text representation. Exactly one of dense/sparse is used,
// selected by source.
struct Embedding {
  EmbeddingSource source = EmbeddingSource::kWordVectorSum;
  std::vector<double> dense;
  SparseVector sparse;
  double norm = 0.0;
};

double Dot(const Embedding& a, const Embedding& b);

// Maps token lists to embeddings with one of the two representations.
class Encoder {
 public:
  static Encoder WordVectors(std::shared_ptr<const VectorTable> table);
  static Encoder Tfidf(std::shared_ptr<const TfidfModel> model);

  // std::nullopt when the text has no in-vocabulary token.
  std::optional<Embedding> Encode(std::span<const std::string> tokens) const;

  EmbeddingSource source() const { return source_; }
  std::size_t dim() const;
  const VectorTable* table() const { return table_.get(); }
  const TfidfModel* tfidf() const { return tfidf_.get(); }

 private:
  EmbeddingSource source_ = EmbeddingSource::kWordVectorSum;
  std::shared_ptr<const VectorTable> table_;
  std::shared_ptr<const TfidfModel> tfidf_;
};

}  // namespace qdecomp

#endif  // QDECOMP_EMBEDDINGS_H_

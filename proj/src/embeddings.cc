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

#include "qdecomp/embeddings.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>

#include "qdecomp/error.h"

namespace qdecomp {
namespace {

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                               line[i] == '\r')) {
      ++i;
    }
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' &&
           line[i] != '\r') {
      ++i;
    }
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool ParseUnsigned(std::string_view s, std::size_t* out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

VectorTable::VectorTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw DataError("vector table dimension must be positive");
}

bool VectorTable::Add(std::string word, std::span<const float> values) {
  if (values.size() != dim_) {
    throw DataError("vector for '" + word + "' has " +
                    std::to_string(values.size()) + " components, expected " +
                    std::to_string(dim_));
  }
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw DataError("vector for '" + word + "' has a non-finite component");
    }
  }
  auto [it, inserted] = index_.emplace(word, words_.size());
  if (!inserted) return false;
  words_.push_back(std::move(word));
  data_.insert(data_.end(), values.begin(), values.end());
  return true;
}

const float* VectorTable::Find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? nullptr : data_.data() + it->second * dim_;
}

VectorTable ReadVectorTable(std::istream& in) {
  std::optional<VectorTable> table;
  std::size_t header_dim = 0;
  std::string line;
  std::size_t line_no = 0;
  std::vector<float> values;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = SplitFields(line);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      std::size_t count = 0;
      if (fields.size() == 2 && ParseUnsigned(fields[0], &count) &&
          ParseUnsigned(fields[1], &header_dim)) {
        if (header_dim == 0) {
          throw DataError("line " + std::to_string(line_no) +
                          ": header declares dimension 0");
        }
        table.emplace(header_dim);
        continue;
      }
    }
    const std::size_t dim = fields.size() - 1;
    if (!table) {
      if (dim == 0) {
        throw DataError("line " + std::to_string(line_no) +
                        ": row has no vector components");
      }
      table.emplace(dim);
    }
    if (dim != table->dim()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table->dim()) + " components, found " +
                      std::to_string(dim));
    }
    values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      std::string_view f = fields[i + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(),
                                       values[i]);
      if (ec != std::errc() || ptr != f.data() + f.size() ||
          !std::isfinite(values[i])) {
        throw DataError("line " + std::to_string(line_no) +
                        ": non-numeric component '" + std::string(f) + "'");
      }
    }
    table->Add(std::string(fields[0]), values);
  }
  if (!table) throw DataError("vector file is empty");
  return std::move(*table);
}

VectorTable LoadVectorTable(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vectors '" + path.string() + "'");
  try {
    return ReadVectorTable(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

TextEmbedding EmbedTextSum(std::span<const std::string> tokens,
                           const VectorTable& table) {
  TextEmbedding out;
  out.vector.assign(table.dim(), 0.0);
  for (const auto& tok : tokens) {
    const float* v = table.Find(tok);
    if (!v) continue;
    out.is_zero = false;
    for (std::size_t i = 0; i < table.dim(); ++i) out.vector[i] += v[i];
  }
  // A sum of nonzero vectors can still cancel out exactly.
  if (!out.is_zero) {
    out.is_zero = std::all_of(out.vector.begin(), out.vector.end(),
                              [](double x) { return x == 0.0; });
  }
  return out;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw UsageError("dot product of vectors with different dimensions");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double L2Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

std::vector<double> UnitNormalize(std::span<const double> v) {
  const double norm = L2Norm(v);
  if (norm == 0.0) throw ZeroVectorError("cannot normalize a zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  const double na = L2Norm(a);
  const double nb = L2Norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw ZeroVectorError("cosine with a zero vector");
  }
  return std::clamp(Dot(a, b) / (na * nb), -1.0, 1.0);
}

double Dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (a.indices[i] > b.indices[j]) {
      ++j;
    } else {
      s += a.values[i++] * b.values[j++];
    }
  }
  return s;
}

double L2Norm(const SparseVector& v) {
  double s = 0.0;
  for (double x : v.values) s += x * x;
  return std::sqrt(s);
}

TfidfModel TfidfModel::Fit(const QuestionCorpus& corpus) {
  if (corpus.empty()) throw DataError("cannot fit tf-idf on an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& q : corpus) {
    std::set<std::string_view> unique(q.tokens().begin(), q.tokens().end());
    for (auto t : unique) ++df[std::string(t)];
  }
  std::vector<std::string> terms;
  std::vector<double> idf;
  const double n = static_cast<double>(corpus.size());
  for (const auto& [term, count] : df) {
    terms.push_back(term);
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) +
                  1.0);
  }
  return TfidfModel(std::move(terms), std::move(idf), corpus.size());
}

TfidfModel::TfidfModel(std::vector<std::string> terms, std::vector<double> idf,
                       std::size_t corpus_size)
    : terms_(std::move(terms)), idf_(std::move(idf)),
      corpus_size_(corpus_size) {
  if (terms_.size() != idf_.size()) {
    throw DataError("tf-idf vocabulary and idf sizes differ");
  }
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!std::isfinite(idf_[i])) throw DataError("non-finite idf value");
    if (i > 0 && !(terms_[i - 1] < terms_[i])) {
      throw DataError("tf-idf vocabulary must be sorted and unique");
    }
    index_.emplace(terms_[i], static_cast<std::uint32_t>(i));
  }
}

std::optional<std::uint32_t> TfidfModel::TermIndex(
    std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseVector TfidfModel::Weights(std::span<const std::string> tokens) const {
  std::map<std::uint32_t, double> tf;
  for (const auto& tok : tokens) {
    if (auto idx = TermIndex(tok)) tf[*idx] += 1.0;
  }
  SparseVector out;
  for (const auto& [idx, count] : tf) {
    out.indices.push_back(idx);
    out.values.push_back(count * idf_[idx]);
  }
  return out;
}

SparseVector TfidfEmbed(std::span<const std::string> tokens,
                        const TfidfModel& model) {
  SparseVector v = model.Weights(tokens);
  const double norm = L2Norm(v);
  if (norm == 0.0) {
    throw ZeroVectorError("no token of the text is in the tf-idf vocabulary");
  }
  for (double& x : v.values) x /= norm;
  return v;
}

std::string_view SourceName(EmbeddingSource source) {
  return source == EmbeddingSource::kTfidf ? "tfidf" : "sum-of-word-vectors";
}

double Dot(const Embedding& a, const Embedding& b) {
  if (a.source != b.source) {
    throw UsageError("dot product across embedding sources");
  }
  return a.source == EmbeddingSource::kTfidf ? Dot(a.sparse, b.sparse)
                                             : Dot(a.dense, b.dense);
}

Encoder Encoder::WordVectors(std::shared_ptr<const VectorTable> table) {
  if (!table) throw UsageError("word-vector encoder needs a table");
  Encoder e;
  e.source_ = EmbeddingSource::kWordVectorSum;
  e.table_ = std::move(table);
  return e;
}

Encoder Encoder::Tfidf(std::shared_ptr<const TfidfModel> model) {
  if (!model) throw UsageError("tf-idf encoder needs a model");
  Encoder e;
  e.source_ = EmbeddingSource::kTfidf;
  e.tfidf_ = std::move(model);
  return e;
}

std::size_t Encoder::dim() const {
  return source_ == EmbeddingSource::kTfidf ? tfidf_->vocabulary_size()
                                            : table_->dim();
}

std::optional<Embedding> Encoder::Encode(
    std::span<const std::string> tokens) const {
  Embedding e;
  e.source = source_;
  if (source_ == EmbeddingSource::kTfidf) {
    e.sparse = tfidf_->Weights(tokens);
    e.norm = L2Norm(e.sparse);
  } else {
    auto sum = EmbedTextSum(tokens, *table_);
    if (sum.is_zero) return std::nullopt;
    e.dense = std::move(sum.vector);
    e.norm = L2Norm(e.dense);
  }
  if (e.norm == 0.0) return std::nullopt;
  return e;
}

}  // namespace qdecomp

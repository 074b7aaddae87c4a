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

#include "qdecomp/classifier.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "qdecomp/error.h"
#include "qdecomp/random.h"

namespace qdecomp {
namespace {

void Softmax(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& x : z) {
    x = std::exp(x - m);
    total += x;
  }
  for (double& x : z) x /= total;
}

std::size_t ArgMax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void Shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.UniformBelow(i)]);
  }
}

}  // namespace

void LinearTextClassifier::BuildIndex() {
  word_index_.clear();
  for (std::size_t i = 0; i < vocab_.size(); ++i) word_index_[vocab_[i]] = i;
}

std::vector<std::size_t> LinearTextClassifier::KnownWords(
    std::span<const std::string> tokens) const {
  std::vector<std::size_t> words;
  for (const auto& t : tokens) {
    auto it = word_index_.find(t);
    if (it != word_index_.end()) words.push_back(it->second);
  }
  return words;
}

void LinearTextClassifier::Hidden(std::span<const std::size_t> words,
                                  std::vector<double>& h) const {
  h.assign(dim_, 0.0);
  for (std::size_t w : words) {
    const double* e = embeddings_.data() + w * dim_;
    for (std::size_t i = 0; i < dim_; ++i) h[i] += e[i];
  }
  const double inv = 1.0 / static_cast<double>(words.size());
  for (double& x : h) x *= inv;
}

LinearTextClassifier LinearTextClassifier::Train(
    std::span<const LabeledCorpus> data, const ClassifierConfig& config,
    TrainingTrace* trace) {
  if (config.dim == 0) throw UsageError("classifier dimension must be >= 1");
  if (config.epochs == 0) throw UsageError("classifier needs >= 1 epoch");
  if (config.batch_size == 0) throw UsageError("batch size must be >= 1");
  if (!(config.learning_rate > 0.0)) {
    throw UsageError("learning rate must be positive");
  }

  LinearTextClassifier model;
  model.config_ = config;
  model.dim_ = config.dim;
  std::map<std::string, std::size_t> label_ids;
  std::vector<std::size_t> per_label;
  for (const auto& lc : data) {
    auto [it, inserted] = label_ids.emplace(lc.label, model.labels_.size());
    if (inserted) {
      model.labels_.push_back(lc.label);
      per_label.push_back(0);
    }
    if (lc.corpus.empty()) {
      throw DataError("label '" + lc.label + "' has an empty corpus");
    }
    per_label[it->second] += lc.corpus.size();
  }
  if (model.labels_.size() < 2) {
    throw DataError("classifier needs at least two labels");
  }

  std::map<std::string, std::size_t> counts;
  for (const auto& lc : data) {
    for (const auto& q : lc.corpus) {
      for (const auto& t : q.tokens()) ++counts[t];
    }
  }
  for (const auto& [word, count] : counts) {
    if (count >= config.min_count) model.vocab_.push_back(word);
  }
  model.BuildIndex();

  struct Example {
    std::vector<std::size_t> words;
    std::size_t label;
  };
  std::vector<Example> examples;
  for (const auto& lc : data) {
    const std::size_t label = label_ids.at(lc.label);
    for (const auto& q : lc.corpus) {
      auto words = model.KnownWords(q.tokens());
      if (!words.empty()) examples.push_back({std::move(words), label});
    }
  }
  if (examples.empty()) throw DataError("no training example has known words");

  const std::size_t dim = config.dim;
  const std::size_t num_labels = model.labels_.size();
  Rng init = Rng::Substream(config.seed, "classifier-init");
  model.embeddings_.resize(model.vocab_.size() * dim);
  const double scale = 1.0 / static_cast<double>(dim);
  for (double& x : model.embeddings_) {
    x = (2.0 * init.Uniform01() - 1.0) * scale;
  }
  model.weight_.assign(num_labels * dim, 0.0);
  model.bias_.assign(num_labels, 0.0);

  const double total_steps =
      static_cast<double>(config.epochs) * static_cast<double>(examples.size());
  double processed = 0.0;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> h, z, dh;
  std::vector<double> grad_w(num_labels * dim), grad_b(num_labels);
  std::map<std::size_t, std::vector<double>> grad_e;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle = Rng::Substream(config.seed, "classifier-shuffle", epoch);
    Shuffle(order, shuffle);
    double loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + config.batch_size);
      const double lr =
          config.learning_rate * std::max(0.0, 1.0 - processed / total_steps);
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      grad_e.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const Example& ex = examples[order[k]];
        model.Hidden(ex.words, h);
        z.assign(num_labels, 0.0);
        for (std::size_t l = 0; l < num_labels; ++l) {
          double s = model.bias_[l];
          for (std::size_t i = 0; i < dim; ++i) {
            s += model.weight_[l * dim + i] * h[i];
          }
          z[l] = s;
        }
        Softmax(z);
        loss -= std::log(std::max(z[ex.label], 1e-300));
        z[ex.label] -= 1.0;  // dL/dlogits
        dh.assign(dim, 0.0);
        for (std::size_t l = 0; l < num_labels; ++l) {
          grad_b[l] += z[l];
          for (std::size_t i = 0; i < dim; ++i) {
            grad_w[l * dim + i] += z[l] * h[i];
            dh[i] += model.weight_[l * dim + i] * z[l];
          }
        }
        const double share = 1.0 / static_cast<double>(ex.words.size());
        for (std::size_t w : ex.words) {
          auto& g = grad_e[w];
          g.resize(dim, 0.0);
          for (std::size_t i = 0; i < dim; ++i) g[i] += dh[i] * share;
        }
      }
      const double step = lr / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < grad_w.size(); ++i) {
        model.weight_[i] -= step * grad_w[i];
      }
      for (std::size_t l = 0; l < num_labels; ++l) {
        model.bias_[l] -= step * grad_b[l];
      }
      for (const auto& [w, g] : grad_e) {
        double* e = model.embeddings_.data() + w * dim;
        for (std::size_t i = 0; i < dim; ++i) e[i] -= step * g[i];
      }
      processed += static_cast<double>(stop - start);
    }
    if (trace) {
      trace->epoch_loss.push_back(loss / static_cast<double>(order.size()));
    }
  }
  return model;
}

std::optional<std::vector<double>> LinearTextClassifier::Logits(
    std::span<const std::string> tokens) const {
  const auto words = KnownWords(tokens);
  if (words.empty()) return std::nullopt;
  std::vector<double> h;
  Hidden(words, h);
  std::vector<double> z(labels_.size());
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    double s = bias_[l];
    for (std::size_t i = 0; i < dim_; ++i) s += weight_[l * dim_ + i] * h[i];
    z[l] = s;
  }
  return z;
}

Classification LinearTextClassifier::ClassifyTokens(
    std::span<const std::string> tokens) const {
  Classification out;
  auto logits = Logits(tokens);
  if (!logits) {
    out.degenerate = true;
    out.probabilities.assign(labels_.size(),
                             1.0 / static_cast<double>(labels_.size()));
    out.label_index = 0;
  } else {
    out.label_index = ArgMax(*logits);
    out.probabilities = std::move(*logits);
    Softmax(out.probabilities);
  }
  out.label = labels_[out.label_index];
  return out;
}

Classification LinearTextClassifier::Classify(const Question& question) const {
  return ClassifyTokens(question.tokens());
}

std::optional<std::size_t> LinearTextClassifier::LabelIndex(
    std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

std::string LinearTextClassifier::ToJson() const {
  nlohmann::json j;
  j["format"] = "qdecomp-linear-text-classifier";
  j["version"] = 1;
  j["labels"] = labels_;
  j["dim"] = dim_;
  j["vocabulary"] = vocab_;
  j["embeddings"] = embeddings_;
  j["weight"] = weight_;
  j["bias"] = bias_;
  j["training_config"] = {{"dim", config_.dim},
                          {"epochs", config_.epochs},
                          {"learning_rate", config_.learning_rate},
                          {"min_count", config_.min_count},
                          {"batch_size", config_.batch_size},
                          {"seed", config_.seed}};
  return j.dump();
}

LinearTextClassifier LinearTextClassifier::FromJson(std::string_view json) {
  LinearTextClassifier m;
  try {
    auto j = nlohmann::json::parse(json);
    if (j.at("format") != "qdecomp-linear-text-classifier") {
      throw DataError("not a classifier model file");
    }
    m.labels_ = j.at("labels").get<std::vector<std::string>>();
    m.dim_ = j.at("dim").get<std::size_t>();
    m.vocab_ = j.at("vocabulary").get<std::vector<std::string>>();
    m.embeddings_ = j.at("embeddings").get<std::vector<double>>();
    m.weight_ = j.at("weight").get<std::vector<double>>();
    m.bias_ = j.at("bias").get<std::vector<double>>();
    const auto& c = j.at("training_config");
    m.config_.dim = c.at("dim").get<std::size_t>();
    m.config_.epochs = c.at("epochs").get<std::size_t>();
    m.config_.learning_rate = c.at("learning_rate").get<double>();
    m.config_.min_count = c.at("min_count").get<std::size_t>();
    m.config_.batch_size = c.at("batch_size").get<std::size_t>();
    m.config_.seed = c.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed classifier model: ") + e.what());
  }
  if (m.labels_.size() < 2 || m.dim_ == 0 ||
      m.embeddings_.size() != m.vocab_.size() * m.dim_ ||
      m.weight_.size() != m.labels_.size() * m.dim_ ||
      m.bias_.size() != m.labels_.size()) {
    throw DataError("classifier model has inconsistent shapes");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
  };
  if (!finite(m.embeddings_) || !finite(m.weight_) || !finite(m.bias_)) {
    throw DataError("classifier model has non-finite parameters");
  }
  m.BuildIndex();
  return m;
}

void LinearTextClassifier::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model '" + path.string() + "'");
  out << ToJson() << '\n';
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

LinearTextClassifier LinearTextClassifier::Load(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

double EvaluateClassifier(const LinearTextClassifier& model,
                          std::span<const LabeledCorpus> heldout) {
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const auto& lc : heldout) {
    auto label = model.LabelIndex(lc.label);
    if (!label) {
      throw DataError("held-out label '" + lc.label + "' is not a model label");
    }
    for (const auto& q : lc.corpus) {
      ++total;
      if (model.Classify(q).label_index == *label) ++correct;
    }
  }
  if (total == 0) throw DataError("held-out set is empty");
  return static_cast<double>(correct) / static_cast<double>(total);
}

RoutingResult RouteMinedQuestions(const LinearTextClassifier& model,
                                  const QuestionCorpus& mined,
                                  std::string_view single_label,
                                  std::string_view multi_label) {
  auto single = model.LabelIndex(single_label);
  auto multi = model.LabelIndex(multi_label);
  if (!single) {
    throw DataError("unknown label '" + std::string(single_label) + "'");
  }
  if (!multi) {
    throw DataError("unknown label '" + std::string(multi_label) + "'");
  }
  RoutingResult out;
  for (const auto& q : mined) {
    const std::size_t label = model.Classify(q).label_index;
    if (label == *single) {
      out.single_hop.Add(q);
    } else if (label == *multi) {
      out.multi_hop.Add(q);
    } else {
      ++out.discarded;
    }
  }
  return out;
}

std::pair<std::vector<LabeledCorpus>, std::vector<LabeledCorpus>>
SplitTrainHeldout(std::span<const LabeledCorpus> data,
                  double heldout_fraction, std::uint64_t seed) {
  if (heldout_fraction < 0.0 || heldout_fraction >= 1.0) {
    throw UsageError("held-out fraction must be in [0, 1)");
  }
  std::vector<LabeledCorpus> train;
  std::vector<LabeledCorpus> heldout;
  for (std::size_t c = 0; c < data.size(); ++c) {
    const auto& lc = data[c];
    std::vector<std::size_t> order(lc.corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::Substream(seed, "heldout-split", c);
    Shuffle(order, rng);
    std::size_t n_heldout = static_cast<std::size_t>(
        std::llround(heldout_fraction * static_cast<double>(order.size())));
    if (order.size() > 0 && n_heldout >= order.size()) {
      n_heldout = order.size() - 1;
    }
    std::vector<bool> is_heldout(order.size(), false);
    for (std::size_t i = 0; i < n_heldout; ++i) is_heldout[order[i]] = true;
    LabeledCorpus tr{lc.label, QuestionCorpus(lc.corpus.label())};
    LabeledCorpus ho{lc.label, QuestionCorpus(lc.corpus.label())};
    for (std::size_t i = 0; i < order.size(); ++i) {
      (is_heldout[i] ? ho : tr).corpus.Add(lc.corpus[i]);
    }
    train.push_back(std::move(tr));
    if (!ho.corpus.empty()) heldout.push_back(std::move(ho));
  }
  return {std::move(train), std::move(heldout)};
}

}  // namespace qdecomp

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

#include "qdecomp/cli.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qdecomp/classifier.h"
#include "qdecomp/corpus.h"
#include "qdecomp/editing.h"
#include "qdecomp/embeddings.h"
#include "qdecomp/error.h"
#include "qdecomp/metrics.h"
#include "qdecomp/noising.h"
#include "qdecomp/random.h"
#include "qdecomp/recompose.h"
#include "qdecomp/retrieval.h"
#include "qdecomp/synthbench.h"

namespace qdecomp::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string HexDigest(EVP_MD_CTX* ctx) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

MdCtx NewSha256() {
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("cannot initialize SHA-256");
  }
  return ctx;
}

}  // namespace

std::string Sha256Hex(std::string_view bytes) {
  MdCtx ctx = NewSha256();
  EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size());
  return HexDigest(ctx.get());
}

std::string Sha256File(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  MdCtx ctx = NewSha256();
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return HexDigest(ctx.get());
}

namespace {

// ---------------------------------------------------------------------------
// Run context and file helpers

struct Context {
  std::ostream& out;
  std::ostream& err;
  json stats = json::object();
  std::vector<std::pair<std::string, std::string>> extra_outputs;

  void Progress(std::string_view event, json fields = json::object()) {
    json line = {{"event", event}};
    line.update(fields);
    err << line.dump() << '\n';
  }
};

std::ofstream OpenOutput(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

void CloseOutput(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw DataError("write failed for '" + path + "'");
}

void WriteText(const std::string& path, std::string_view text) {
  auto out = OpenOutput(path);
  out << text;
  CloseOutput(out, path);
}

std::ifstream OpenInput(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

std::vector<std::string> ReadLines(const std::string& path) {
  auto in = OpenInput(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

json ReadJsonFile(const std::string& path) {
  auto in = OpenInput(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Writes to `path`, or to the data stream when the path is empty.
void Emit(Context& ctx, const std::string& path, std::string_view text) {
  if (path.empty()) {
    ctx.out << text;
  } else {
    WriteText(path, text);
  }
}

void SaveCorpusTo(const QuestionCorpus& corpus, const std::string& path) {
  auto out = OpenOutput(path);
  WriteCorpus(corpus, out);
  CloseOutput(out, path);
}

void SaveDatasetTo(std::span<const DatasetRecord> records,
                   const std::string& path) {
  auto out = OpenOutput(path);
  WriteDatasetTsv(records, out);
  CloseOutput(out, path);
}

std::vector<DatasetRecord> LoadDataset(const std::string& path) {
  auto in = OpenInput(path);
  try {
    return ReadDatasetTsv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

EmbeddingSource ParseSource(std::string_view name) {
  if (name == "word-vectors" || name == SourceName(EmbeddingSource::kWordVectorSum)) {
    return EmbeddingSource::kWordVectorSum;
  }
  if (name == "tfidf") return EmbeddingSource::kTfidf;
  throw UsageError("unknown embedding source '" + std::string(name) +
                   "' (expected word-vectors or tfidf)");
}

std::shared_ptr<const VectorTable> LoadVectors(Context& ctx,
                                               const std::string& path) {
  if (path.empty()) return nullptr;
  auto table = std::make_shared<const VectorTable>(LoadVectorTable(path));
  ctx.Progress("vectors-loaded",
               {{"path", path}, {"words", table->size()}, {"dim", table->dim()}});
  return table;
}

// ---------------------------------------------------------------------------
// Stage parameters and implementations shared by the single-stage
// subcommands and `pipeline`.

struct ExtractParams {
  std::string input;
  std::string output;
  std::vector<std::string> wh_words = DefaultWhWords();
  bool dedup = false;
  int id_width = 10;
  std::string id_prefix;
};

QuestionCorpus RunExtract(Context& ctx, const ExtractParams& p) {
  ExtractOptions options;
  options.wh_words = p.wh_words;
  options.dedup = p.dedup;
  options.id_width = p.id_width;
  options.id_prefix = p.id_prefix;
  if (p.id_width < 1) throw UsageError("--id-width must be >= 1");
  ExtractStats stats;
  const auto lines = ReadLines(p.input);
  QuestionCorpus corpus;
  for (auto& q : ExtractCandidateQuestions(lines, options, &stats)) {
    corpus.Add(std::move(q));
  }
  SaveCorpusTo(corpus, p.output);
  ctx.stats["extract"] = {{"lines", stats.lines},
                          {"blank", stats.blank},
                          {"kept", stats.kept},
                          {"duplicates", stats.duplicates}};
  ctx.Progress("extracted", ctx.stats["extract"]);
  return corpus;
}

struct TrainParams {
  std::string single;
  std::string multi;
  std::string single_label = "single-hop";
  std::string multi_label = "multi-hop";
  ClassifierConfig config;
  double heldout_fraction = 0.1;
  std::string output;
  std::string report;
};

LinearTextClassifier RunTrain(Context& ctx, const TrainParams& p,
                              std::uint64_t seed) {
  if (p.single_label == p.multi_label) {
    throw UsageError("single and multi labels must differ");
  }
  std::vector<LabeledCorpus> data;
  data.push_back({p.single_label, LoadCorpus(p.single, p.single_label)});
  data.push_back({p.multi_label, LoadCorpus(p.multi, p.multi_label)});
  auto [train, heldout] = SplitTrainHeldout(data, p.heldout_fraction, seed);
  ClassifierConfig config = p.config;
  config.seed = seed;
  TrainingTrace trace;
  auto model = LinearTextClassifier::Train(train, config, &trace);
  model.Save(p.output);

  json report = {{"labels", model.labels()},
                 {"vocabulary_size", model.vocabulary().size()},
                 {"epoch_loss", trace.epoch_loss}};
  std::size_t train_size = 0;
  for (const auto& lc : train) train_size += lc.corpus.size();
  std::size_t heldout_size = 0;
  for (const auto& lc : heldout) heldout_size += lc.corpus.size();
  report["train_size"] = train_size;
  report["heldout_size"] = heldout_size;
  report["heldout_accuracy"] =
      heldout_size > 0 ? json(EvaluateClassifier(model, heldout)) : json();
  ctx.stats["train-classifier"] = report;
  ctx.Progress("classifier-trained", report);
  if (!p.report.empty()) WriteText(p.report, report.dump(2) + "\n");
  return model;
}

struct RouteParams {
  std::string model;
  std::string input;
  std::string single_output;
  std::string multi_output;
  std::string single_label = "single-hop";
  std::string multi_label = "multi-hop";
};

RoutingResult RunRoute(Context& ctx, const LinearTextClassifier& model,
                       const QuestionCorpus& mined, const RouteParams& p) {
  auto routed =
      RouteMinedQuestions(model, mined, p.single_label, p.multi_label);
  SaveCorpusTo(routed.single_hop, p.single_output);
  SaveCorpusTo(routed.multi_hop, p.multi_output);
  ctx.stats["route"] = {{"input", mined.size()},
                        {"single_hop", routed.single_hop.size()},
                        {"multi_hop", routed.multi_hop.size()},
                        {"discarded", routed.discarded}};
  ctx.Progress("routed", ctx.stats["route"]);
  return routed;
}

struct IndexParams {
  std::string corpus;
  std::string vectors;
  std::string source = "word-vectors";
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 20;
  std::string output;
};

std::string MetaPath(const std::string& index_path) {
  return index_path + ".meta.json";
}

EmbeddedIndex RunBuildIndex(Context& ctx, const QuestionCorpus& corpus,
                            const std::string& corpus_digest,
                            const IndexParams& p) {
  const EmbeddingSource source = ParseSource(p.source);
  if (p.min_tokens > p.max_tokens) {
    throw UsageError("--min-tokens exceeds --max-tokens");
  }
  std::optional<Encoder> encoder;
  std::string vectors_digest;
  if (source == EmbeddingSource::kWordVectorSum) {
    if (p.vectors.empty()) {
      throw UsageError("--vectors is required for a word-vector index");
    }
    encoder = Encoder::WordVectors(LoadVectors(ctx, p.vectors));
    vectors_digest = Sha256File(p.vectors);
  } else {
    encoder = Encoder::Tfidf(
        std::make_shared<const TfidfModel>(TfidfModel::Fit(corpus)));
  }
  IndexBuildStats stats;
  IndexFilters filters{p.min_tokens, p.max_tokens};
  auto index = EmbeddedIndex::Build(corpus, *encoder, filters, &stats);
  if (index.size() == 0) throw DataError("no question survived the filters");
  index.Save(p.output);

  std::string ids;
  for (const auto& id : index.ids()) {
    ids += id;
    ids += '\n';
  }
  json meta = {
      {"format", "qdecomp-index-meta"},
      {"schema_version", kSchemaVersion},
      {"source", SourceName(source)},
      {"dim", index.dim()},
      {"rows", index.size()},
      {"ids_sha256", Sha256Hex(ids)},
      {"corpus_sha256", corpus_digest},
      {"vectors_sha256",
       vectors_digest.empty() ? json() : json(vectors_digest)},
      {"index_sha256", Sha256File(p.output)},
      {"filters",
       {{"min_tokens", p.min_tokens}, {"max_tokens", p.max_tokens}}},
      {"stats",
       {{"input", stats.input},
        {"kept", stats.kept},
        {"too_short", stats.too_short},
        {"too_long", stats.too_long},
        {"unembeddable", stats.unembeddable}}}};
  WriteText(MetaPath(p.output), meta.dump(2) + "\n");
  ctx.extra_outputs.emplace_back("index-meta", MetaPath(p.output));
  ctx.stats["build-index"] = meta["stats"];
  ctx.Progress("index-built", meta["stats"]);
  return index;
}

// Loads an index and checks it against its metadata file when one exists.
EmbeddedIndex LoadIndexChecked(Context& ctx, const std::string& index_path,
                               const std::string& vectors_path) {
  const std::string meta_path = MetaPath(index_path);
  if (fs::exists(meta_path)) {
    const json meta = ReadJsonFile(meta_path);
    const auto expected = meta.value("vectors_sha256", json());
    if (expected.is_string()) {
      if (vectors_path.empty()) {
        throw UsageError("index '" + index_path +
                         "' uses word vectors; pass --vectors");
      }
      if (Sha256File(vectors_path) != expected.get<std::string>()) {
        throw DataError("vectors '" + vectors_path +
                        "' differ from the ones index '" + index_path +
                        "' was built with");
      }
    }
  }
  auto index = EmbeddedIndex::Load(index_path, LoadVectors(ctx, vectors_path));
  ctx.Progress("index-loaded", {{"path", index_path},
                                {"rows", index.size()},
                                {"source", SourceName(index.source())}});
  return index;
}

struct DecomposeParams {
  std::string index;
  std::string vectors;
  std::string queries;
  std::string method = "fixed2";
  std::size_t top_k = kDefaultTopK;
  std::size_t subquestions = 2;
  std::size_t max_subquestions = 3;
  std::size_t beam_width = 10;
  std::size_t workers = 1;
  std::string output;
};

DatasetResult RunDecompose(Context& ctx, const EmbeddedIndex& index,
                           const QuestionCorpus& queries,
                           const DecomposeParams& p, std::uint64_t seed) {
  DatasetConfig config;
  config.method = ParseMethod(p.method);
  config.k = p.top_k;
  config.n = p.subquestions;
  config.max_n = p.max_subquestions;
  config.beam_width = p.beam_width;
  config.seed = seed;
  config.workers = std::max<std::size_t>(1, p.workers);
  if (config.k == 0) throw UsageError("--top-k must be >= 1");
  if (config.beam_width == 0) throw UsageError("--beam-width must be >= 1");
  auto result = BuildPseudoDecompositionDataset(queries, index, config);
  SaveDatasetTo(result.records, p.output);
  ctx.stats["decompose"] = {{"queries", queries.size()},
                            {"records", result.records.size()},
                            {"failures", result.failures}};
  ctx.Progress("decomposed", ctx.stats["decompose"]);
  for (const auto& m : result.failure_messages) {
    ctx.Progress("decompose-skipped", {{"reason", m}});
  }
  return result;
}

std::vector<DatasetRecord> RunEdit(Context& ctx,
                                   std::span<const DatasetRecord> records,
                                   const std::string& output) {
  std::vector<DatasetRecord> edited;
  edited.reserve(records.size());
  std::size_t changed = 0;
  for (const auto& r : records) {
    const Question q(r.question_id, r.question_text);
    PseudoDecomposition d;
    d.question_id = r.question_id;
    d.sub_texts = SplitSubQuestions(r.decomposition_text);
    d.objective_score = r.objective_score;
    DatasetRecord out = r;
    out.decomposition_text = EditPseudoDecomposition(q, d).Text();
    if (out.decomposition_text != r.decomposition_text) ++changed;
    edited.push_back(std::move(out));
  }
  SaveDatasetTo(edited, output);
  ctx.stats["edit"] = {{"records", edited.size()}, {"changed", changed}};
  ctx.Progress("edited", ctx.stats["edit"]);
  return edited;
}

json DecompositionReportJson(std::span<const DatasetRecord> records) {
  std::vector<std::pair<Question, std::string>> pairs;
  for (const auto& r : records) {
    pairs.emplace_back(Question(r.question_id, r.question_text),
                       r.decomposition_text);
  }
  const auto report = MakeDecompositionReport(pairs);
  return {{"count", report.count},
          {"edit_distance_mean", report.edit_distance_mean},
          {"edit_distance_median", report.edit_distance_median},
          {"edit_distance_variance", report.edit_distance_variance},
          {"length_ratio_mean", report.length_ratio_mean},
          {"length_ratio_variance", report.length_ratio_variance},
          {"good_fraction", report.good_fraction}};
}

std::vector<RoundTripRecord> ReadRoundTripTsv(const std::string& path) {
  std::vector<RoundTripRecord> records;
  const auto lines = ReadLines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream s(lines[i]);
    std::string field;
    while (std::getline(s, field, '\t')) fields.push_back(field);
    if (!lines[i].empty() && lines[i].back() == '\t') fields.emplace_back();
    const std::string where = path + ": line " + std::to_string(i + 1);
    if (fields.size() != 3) {
      throw DataError(where + ": expected 3 tab-separated fields (q, d_hat, "
                      "q_hat), found " + std::to_string(fields.size()));
    }
    try {
      records.emplace_back(Question("line-" + std::to_string(i + 1), fields[0]),
                           fields[1], fields[2]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  if (records.empty()) throw DataError(path + ": no records");
  return records;
}

// ---------------------------------------------------------------------------
// Option registry. Every registered option is part of the manifest's config
// snapshot; input and output paths are also digested.

enum class Role { kParam, kInput, kOutput };

struct Entry {
  std::string name;
  Role role;
  std::function<json()> snapshot;
  std::function<std::vector<std::string>()> paths;
};

class Command {
 public:
  Command(CLI::App& root, const std::string& name,
          const std::string& description)
      : app_(root.add_subcommand(name, description)) {
    app_->add_option("--config", config_,
                     "JSON config or manifest; explicit flags win");
    app_->add_option("--manifest", manifest_, "Where to write the manifest");
    Param("seed", seed_, "Global seed for all randomized stages");
  }

  template <typename T>
  CLI::Option* Param(const std::string& name, T& var,
                     const std::string& description) {
    entries_.push_back({name, Role::kParam, [&var] { return json(var); }, {}});
    if constexpr (std::is_same_v<T, bool>) {
      return app_->add_flag("--" + name, var, description);
    } else {
      return app_->add_option("--" + name, var, description)
          ->capture_default_str();
    }
  }

  CLI::Option* Input(const std::string& name, std::string& var,
                     const std::string& description, bool required = true) {
    entries_.push_back({name, Role::kInput, [&var] { return json(var); },
                        [&var] {
                          return var.empty() ? std::vector<std::string>{}
                                             : std::vector<std::string>{var};
                        }});
    auto* opt = app_->add_option("--" + name, var, description);
    if (required) opt->required();
    return opt;
  }

  CLI::Option* Inputs(const std::string& name, std::vector<std::string>& var,
                      const std::string& description) {
    entries_.push_back({name, Role::kInput, [&var] { return json(var); },
                        [&var] { return var; }});
    return app_->add_option("--" + name, var, description)->required();
  }

  CLI::Option* Output(const std::string& name, std::string& var,
                      const std::string& description, bool required = true) {
    entries_.push_back({name, Role::kOutput, [&var] { return json(var); },
                        [&var] {
                          return var.empty() ? std::vector<std::string>{}
                                             : std::vector<std::string>{var};
                        }});
    auto* opt = app_->add_option("--" + name, var, description);
    if (required) opt->required();
    return opt;
  }

  CLI::App* app() const { return app_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& manifest_path() const { return manifest_; }
  const std::vector<Entry>& entries() const { return entries_; }

  // Manifest path used when --manifest is absent; empty means stderr.
  std::function<std::string()> default_manifest;
  std::function<void(Context&)> action;

 private:
  CLI::App* app_;
  std::string config_;
  std::string manifest_;
  std::uint64_t seed_ = 0;
  std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Config-file layer: entries become flags placed before the user's own
// arguments, skipping any option the user set explicitly.

bool UserSet(std::span<const std::string> args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::string ScalarToken(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::vector<std::string> ExpandConfig(std::span<const std::string> args) {
  std::vector<std::string> result(args.begin(), args.end());
  std::size_t sub_pos = 1;
  while (sub_pos < args.size() && !args[sub_pos].empty() &&
         args[sub_pos][0] == '-') {
    ++sub_pos;
  }
  if (sub_pos >= args.size()) return result;
  std::string config_path;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return result;
  if (!fs::exists(config_path)) {
    throw DataError("config file '" + config_path + "' does not exist");
  }
  json config = ReadJsonFile(config_path);
  if (!config.is_object()) {
    throw DataError(config_path + ": config must be a JSON object");
  }
  if (config.contains("config") && config["config"].is_object()) {
    const auto sub = config.value("subcommand", std::string());
    if (!sub.empty() && sub != args[sub_pos]) {
      throw UsageError("manifest '" + config_path + "' is for '" + sub +
                       "', not '" + args[sub_pos] + "'");
    }
    json inner = config["config"];
    if (config.contains("seed") && !inner.contains("seed")) {
      inner["seed"] = config["seed"];
    }
    config = inner;
  }
  const auto user = std::span(args).subspan(sub_pos + 1);
  std::vector<std::string> injected;
  for (const auto& [key, value] : config.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || key == "manifest" || UserSet(user, flag)) continue;
    if (value.is_null()) continue;
    if (value.is_boolean()) {
      injected.push_back(flag + "=" + (value.get<bool>() ? "true" : "false"));
    } else if (value.is_array()) {
      for (const auto& v : value) {
        injected.push_back(flag);
        injected.push_back(ScalarToken(v));
      }
    } else if (value.is_object()) {
      throw DataError(config_path + ": value of '" + key +
                      "' must not be an object");
    } else {
      injected.push_back(flag);
      injected.push_back(ScalarToken(value));
    }
  }
  result.insert(result.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1,
                injected.begin(), injected.end());
  return result;
}

// ---------------------------------------------------------------------------
// Manifest

json FileList(const Command& cmd, Role role) {
  json list = json::array();
  for (const auto& e : cmd.entries()) {
    if (e.role != role) continue;
    for (const auto& path : e.paths()) {
      json item = {{"option", e.name}, {"path", path}};
      item["sha256"] = fs::is_regular_file(path) ? json(Sha256File(path)) : json();
      list.push_back(item);
    }
  }
  return list;
}

json BuildManifest(const Command& cmd, const Context& ctx) {
  json config = json::object();
  for (const auto& e : cmd.entries()) config[e.name] = e.snapshot();
  json outputs = FileList(cmd, Role::kOutput);
  for (const auto& [name, path] : ctx.extra_outputs) {
    outputs.push_back({{"option", name},
                       {"path", path},
                       {"sha256", Sha256File(path)}});
  }
  return {{"tool", kToolName},
          {"schema_version", kSchemaVersion},
          {"subcommand", cmd.app()->get_name()},
          {"seed", cmd.seed()},
          {"config", config},
          {"inputs", FileList(cmd, Role::kInput)},
          {"outputs", outputs},
          {"stats", ctx.stats}};
}

void Validate(const Command& cmd) {
  std::vector<std::string> inputs;
  for (const auto& e : cmd.entries()) {
    if (e.role != Role::kInput) continue;
    for (const auto& path : e.paths()) {
      if (!fs::exists(path)) {
        throw DataError("--" + e.name + ": '" + path + "' does not exist");
      }
      inputs.push_back(fs::weakly_canonical(path).string());
    }
  }
  for (const auto& e : cmd.entries()) {
    if (e.role != Role::kOutput) continue;
    for (const auto& path : e.paths()) {
      const auto canonical = fs::weakly_canonical(path).string();
      if (std::find(inputs.begin(), inputs.end(), canonical) != inputs.end()) {
        throw UsageError("--" + e.name + " '" + path +
                         "' would overwrite an input");
      }
    }
  }
}

std::string ManifestNextTo(const std::string& output) {
  return output.empty() ? std::string() : output + ".manifest.json";
}

// ---------------------------------------------------------------------------
// Subcommand definitions

struct Tool {
  CLI::App app{"Unsupervised question decomposition toolkit", "qdecomp"};
  std::vector<std::unique_ptr<Command>> commands;

  ExtractParams extract;
  TrainParams train;
  std::string classify_model, classify_input, classify_output;
  RouteParams route;
  IndexParams index;
  DecomposeParams decompose;
  std::string edit_input, edit_output;
  NoiseConfig noise;
  std::string noise_input, noise_output;
  std::string metrics_input, metrics_format = "roundtrip", metrics_history,
      metrics_output;
  std::string synth_index, synth_vectors, synth_objective = "eq2",
      synth_output, synth_ranks;
  std::size_t synth_n = 2, synth_count = 200, synth_k = 100, synth_workers = 1;
  std::vector<std::string> recompose_logits;
  std::size_t recompose_top = 0;
  std::string recompose_output;

  struct {
    std::string mined, single_train, multi_train, vectors, out_dir;
    std::string source = "word-vectors";
    std::vector<std::string> wh_words = DefaultWhWords();
    bool dedup = true;
    ClassifierConfig classifier;
    double heldout_fraction = 0.1;
    IndexFilters filters;
    DecomposeParams decompose;
  } pipe;

  Command& Add(const std::string& name, const std::string& description) {
    commands.push_back(std::make_unique<Command>(app, name, description));
    return *commands.back();
  }

  Tool() {
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    DefineExtract();
    DefineTrain();
    DefineClassify();
    DefineRoute();
    DefineBuildIndex();
    DefineDecompose();
    DefineEdit();
    DefineNoise();
    DefineMetrics();
    DefineSynthEval();
    DefineRecompose();
    DefinePipeline();
  }

  void DefineExtract() {
    auto& c = Add("extract", "Mine question-like lines into a JSONL corpus");
    c.Input("input", extract.input, "Text file, one sentence per line");
    c.Output("output", extract.output, "Corpus JSONL to write");
    c.Param("wh-words", extract.wh_words, "Question-opening words");
    c.Param("dedup", extract.dedup, "Drop repeated lines");
    c.Param("id-width", extract.id_width, "Zero-padded id width");
    c.Param("id-prefix", extract.id_prefix, "Prefix for generated ids");
    c.default_manifest = [this] { return ManifestNextTo(extract.output); };
    c.action = [this](Context& ctx) { RunExtract(ctx, extract); };
  }

  void AddClassifierParams(Command& c, ClassifierConfig& config) {
    c.Param("dim", config.dim, "Embedding dimension");
    c.Param("epochs", config.epochs, "Training epochs");
    c.Param("learning-rate", config.learning_rate,
            "Initial learning rate (linear decay)");
    c.Param("min-count", config.min_count, "Minimum word count");
    c.Param("batch-size", config.batch_size, "Mini-batch size");
  }

  void DefineTrain() {
    auto& c = Add("train-classifier",
                  "Train the single-hop vs multi-hop question classifier");
    c.Input("single", train.single, "Single-hop corpus JSONL");
    c.Input("multi", train.multi, "Multi-hop corpus JSONL");
    c.Param("single-label", train.single_label, "Label of the single corpus");
    c.Param("multi-label", train.multi_label, "Label of the multi corpus");
    AddClassifierParams(c, train.config);
    c.Param("heldout-fraction", train.heldout_fraction,
            "Per-label held-out fraction in [0, 1)");
    c.Output("output", train.output, "Model JSON to write");
    c.Output("report", train.report, "Training report JSON", false);
    c.default_manifest = [this] { return ManifestNextTo(train.output); };
    c.action = [this, &c](Context& ctx) { RunTrain(ctx, train, c.seed()); };
  }

  void DefineClassify() {
    auto& c = Add("classify", "Label every question of a corpus");
    c.Input("model", classify_model, "Model JSON");
    c.Input("input", classify_input, "Corpus JSONL");
    c.Output("output", classify_output, "Predictions JSONL (default stdout)",
             false);
    c.default_manifest = [this] { return ManifestNextTo(classify_output); };
    c.action = [this](Context& ctx) {
      const auto model = LinearTextClassifier::Load(classify_model);
      const auto corpus = LoadCorpus(classify_input);
      std::string text;
      std::size_t degenerate = 0;
      for (const auto& q : corpus) {
        const auto result = model.Classify(q);
        json probs = json::object();
        for (std::size_t i = 0; i < model.labels().size(); ++i) {
          probs[model.labels()[i]] = result.probabilities[i];
        }
        if (result.degenerate) ++degenerate;
        text += json({{"id", q.id()},
                      {"label", result.label},
                      {"probabilities", probs},
                      {"degenerate", result.degenerate}})
                    .dump();
        text += '\n';
      }
      Emit(ctx, classify_output, text);
      ctx.stats["classify"] = {{"questions", corpus.size()},
                               {"degenerate", degenerate}};
      ctx.Progress("classified", ctx.stats["classify"]);
    };
  }

  void DefineRoute() {
    auto& c = Add("route", "Split mined questions by predicted label");
    c.Input("model", route.model, "Model JSON");
    c.Input("input", route.input, "Mined corpus JSONL");
    c.Output("single-output", route.single_output, "Single-hop JSONL");
    c.Output("multi-output", route.multi_output, "Multi-hop JSONL");
    c.Param("single-label", route.single_label, "Label routed to single-hop");
    c.Param("multi-label", route.multi_label, "Label routed to multi-hop");
    c.default_manifest = [this] { return ManifestNextTo(route.single_output); };
    c.action = [this](Context& ctx) {
      RunRoute(ctx, LinearTextClassifier::Load(route.model),
               LoadCorpus(route.input), route);
    };
  }

  void AddIndexParams(Command& c, std::string& source, std::size_t& min_tokens,
                      std::size_t& max_tokens) {
    c.Param("source", source, "Embedding source: word-vectors or tfidf");
    c.Param("min-tokens", min_tokens, "Shortest question kept");
    c.Param("max-tokens", max_tokens, "Longest question kept");
  }

  void DefineBuildIndex() {
    auto& c = Add("build-index", "Embed a single-hop corpus into an index");
    c.Input("corpus", index.corpus, "Single-hop corpus JSONL");
    c.Input("vectors", index.vectors, "Word vectors (.vec text format)",
            false);
    AddIndexParams(c, index.source, index.min_tokens, index.max_tokens);
    c.Output("output", index.output, "Index file to write");
    c.default_manifest = [this] { return ManifestNextTo(index.output); };
    c.action = [this](Context& ctx) {
      RunBuildIndex(ctx, LoadCorpus(index.corpus), Sha256File(index.corpus),
                    index);
    };
  }

  void AddDecomposeParams(Command& c, DecomposeParams& p) {
    c.Param("method", p.method, "fixed2, general, variable or random");
    c.Param("top-k", p.top_k, "Candidate pool size");
    c.Param("subquestions", p.subquestions,
            "Sub-questions per decomposition (general, random)");
    c.Param("max-subquestions", p.max_subquestions,
            "Largest decomposition (variable)");
    c.Param("beam-width", p.beam_width, "Beam width (variable)");
    c.Param("workers", p.workers, "Worker threads");
  }

  void DefineDecompose() {
    auto& c = Add("decompose", "Retrieve pseudo-decompositions for questions");
    c.Input("index", decompose.index, "Index file from build-index");
    c.Input("vectors", decompose.vectors,
            "Word vectors the index was built with", false);
    c.Input("queries", decompose.queries, "Multi-hop corpus JSONL");
    AddDecomposeParams(c, decompose);
    c.Output("output", decompose.output, "Parallel corpus TSV to write");
    c.default_manifest = [this] { return ManifestNextTo(decompose.output); };
    c.action = [this, &c](Context& ctx) {
      const auto idx =
          LoadIndexChecked(ctx, decompose.index, decompose.vectors);
      RunDecompose(ctx, idx, LoadCorpus(decompose.queries), decompose,
                   c.seed());
    };
  }

  void DefineEdit() {
    auto& c = Add("edit", "Swap entities in decompositions for the question's");
    c.Input("input", edit_input, "Parallel corpus TSV");
    c.Output("output", edit_output, "Edited TSV to write");
    c.default_manifest = [this] { return ManifestNextTo(edit_output); };
    c.action = [this](Context& ctx) {
      RunEdit(ctx, LoadDataset(edit_input), edit_output);
    };
  }

  void DefineNoise() {
    auto& c = Add("noise", "Corrupt a corpus with shuffle, drop and mask noise");
    c.Input("input", noise_input, "Corpus JSONL");
    c.Output("output", noise_output, "Noised corpus JSONL");
    c.Param("mask-prob", noise.mask_prob, "Per-token mask probability");
    c.Param("drop-prob", noise.drop_prob, "Per-token drop probability");
    c.Param("shuffle-window", noise.shuffle_window,
            "Local shuffle window (0 or 1 disables)");
    c.Param("mask-token", noise.mask_token, "Mask symbol");
    c.default_manifest = [this] { return ManifestNextTo(noise_output); };
    c.action = [this, &c](Context& ctx) {
      NoiseConfig config = noise;
      config.seed = c.seed();
      config.Validate();
      const auto corpus = LoadCorpus(noise_input);
      std::string text;
      std::size_t in_tokens = 0;
      std::size_t out_tokens = 0;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        Rng rng = Rng::Substream(config.seed, "noise", i);
        const auto noised = NoiseTokens(corpus[i].tokens(), config, rng);
        std::string joined;
        for (std::size_t t = 0; t < noised.size(); ++t) {
          if (t > 0) joined += ' ';
          joined += noised[t];
        }
        in_tokens += corpus[i].tokens().size();
        out_tokens += noised.size();
        text += json({{"id", corpus[i].id()}, {"text", joined}}).dump();
        text += '\n';
      }
      WriteText(noise_output, text);
      ctx.stats["noise"] = {{"questions", corpus.size()},
                            {"input_tokens", in_tokens},
                            {"output_tokens", out_tokens}};
      ctx.Progress("noised", ctx.stats["noise"]);
    };
  }

  void DefineMetrics() {
    auto& c = Add("metrics", "Score decompositions and round trips");
    c.Input("input", metrics_input,
            "TSV: (q, d_hat, q_hat) for roundtrip, parallel corpus for "
            "dataset");
    c.Param("format", metrics_format, "roundtrip or dataset");
    c.Input("history", metrics_history,
            "JSON array of per-epoch scaled BLEU for the stopping rule", false);
    c.Output("output", metrics_output, "Report JSON (default stdout)", false);
    c.default_manifest = [this] { return ManifestNextTo(metrics_output); };
    c.action = [this](Context& ctx) {
      json report;
      if (metrics_format == "roundtrip") {
        const auto records = ReadRoundTripTsv(metrics_input);
        const auto r = EvaluateRoundTrip(records);
        report = {{"count", r.count},
                  {"bleu", r.bleu},
                  {"good_fraction", r.good_fraction},
                  {"scaled", r.scaled},
                  {"edit_distance_mean", r.edit_distance_mean},
                  {"length_ratio_mean", r.length_ratio_mean}};
      } else if (metrics_format == "dataset") {
        report = DecompositionReportJson(LoadDataset(metrics_input));
      } else {
        throw UsageError("--format must be roundtrip or dataset");
      }
      if (!metrics_history.empty()) {
        const json history = ReadJsonFile(metrics_history);
        std::vector<double> values;
        try {
          values = history.get<std::vector<double>>();
        } catch (const json::exception& e) {
          throw DataError(metrics_history + ": expected an array of numbers");
        }
        report["stop"] = StoppingDecision(values);
      }
      Emit(ctx, metrics_output, report.dump(2) + "\n");
      ctx.stats["metrics"] = report;
    };
  }

  void DefineSynthEval() {
    auto& c = Add("synth-eval",
                  "Rank gold decompositions of synthetic composites (MRR)");
    c.Input("index", synth_index, "Index built over the single-hop corpus");
    c.Input("vectors", synth_vectors, "Word vectors of the index", false);
    c.Param("objective", synth_objective, "eq1 (similarity + diversity) or "
                                          "eq2 (Euclidean residual)");
    c.Param("subquestions", synth_n, "Questions per composite (2 or 3)");
    c.Param("count", synth_count, "Number of composites");
    c.Param("top-k", synth_k, "Candidate pool size");
    c.Param("workers", synth_workers, "Worker threads");
    c.Output("output", synth_output, "Report JSON (default stdout)", false);
    c.Output("ranks-output", synth_ranks,
             "Per-composite ranks TSV (default <output>.ranks.tsv)", false);
    c.default_manifest = [this] { return ManifestNextTo(synth_output); };
    c.action = [this, &c](Context& ctx) {
      const auto objective = ParseObjective(synth_objective);
      const auto idx = LoadIndexChecked(ctx, synth_index, synth_vectors);
      QuestionCorpus singles;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        singles.Add(Question(idx.id(r), idx.text(r)));
      }
      const auto bench =
          BuildSyntheticCompositional(singles, synth_n, synth_count, c.seed());
      const auto result =
          MrrEval(objective, bench, idx, synth_k, synth_workers);
      std::string ranks_path = synth_ranks;
      if (ranks_path.empty() && !synth_output.empty()) {
        ranks_path = synth_output + ".ranks.tsv";
        ctx.extra_outputs.emplace_back("ranks-output", ranks_path);
      }
      if (!ranks_path.empty()) {
        std::string text;
        for (std::size_t i = 0; i < bench.size(); ++i) {
          text += bench[i].composite.id();
          text += '\t';
          for (std::size_t g = 0; g < bench[i].gold_sub_ids.size(); ++g) {
            if (g > 0) text += ',';
            text += bench[i].gold_sub_ids[g];
          }
          text += '\t' + std::to_string(result.ranks[i]) + '\n';
        }
        WriteText(ranks_path, text);
      }
      json report = {{"objective", ObjectiveName(objective)},
                     {"n", synth_n},
                     {"K", synth_k},
                     {"mrr", result.mrr},
                     {"per_question_ranks_path",
                      ranks_path.empty() ? json() : json(ranks_path)}};
      Emit(ctx, synth_output, report.dump(2) + "\n");
      ctx.stats["synth-eval"] = report;
    };
  }

  void DefineRecompose() {
    auto& c = Add("recompose",
                  "Pool span logits across paragraphs (and models) into "
                  "ranked answers");
    c.Inputs("logits", recompose_logits,
             "Logit JSONL; several files are averaged as an ensemble");
    c.Param("top", recompose_top, "Ranked spans to emit (0 = all)");
    c.Output("output", recompose_output, "Result JSON (default stdout)",
             false);
    c.default_manifest = [this] { return ManifestNextTo(recompose_output); };
    c.action = [this](Context& ctx) {
      std::vector<std::vector<ParagraphLogits>> sets;
      for (const auto& path : recompose_logits) {
        auto in = OpenInput(path);
        try {
          sets.push_back(ReadParagraphLogits(in));
        } catch (const DataError& e) {
          throw DataError(path + ": " + e.what());
        }
      }
      const auto pooled = sets.size() == 1 ? sets.front() : EnsembleAverage(sets);
      auto to_json = [](const SpanProbability& s) {
        return json{{"paragraph_id", s.paragraph_id},
                    {"span_id", s.span_id},
                    {"probability", s.probability}};
      };
      json ranked = json::array();
      const auto spans = RankSpans(pooled);
      for (std::size_t i = 0; i < spans.size(); ++i) {
        if (recompose_top > 0 && i >= recompose_top) break;
        ranked.push_back(to_json(spans[i]));
      }
      json result = {{"models", sets.size()},
                     {"prediction", to_json(PredictAnswer(pooled))},
                     {"ranked", ranked}};
      Emit(ctx, recompose_output, result.dump(2) + "\n");
      ctx.stats["recompose"] = {{"models", sets.size()},
                                {"paragraphs", pooled.size()},
                                {"spans", spans.size()}};
    };
  }

  void DefinePipeline() {
    auto& c = Add("pipeline",
                  "extract, train-classifier, route, build-index, decompose, "
                  "edit and metrics in one run");
    c.Input("mined", pipe.mined, "Raw text lines to mine questions from");
    c.Input("single-train", pipe.single_train, "Single-hop corpus JSONL");
    c.Input("multi-train", pipe.multi_train, "Multi-hop corpus JSONL");
    c.Input("vectors", pipe.vectors, "Word vectors (.vec text format)", false);
    c.Param("wh-words", pipe.wh_words, "Question-opening words");
    c.Param("dedup", pipe.dedup, "Drop repeated mined lines");
    AddClassifierParams(c, pipe.classifier);
    c.Param("heldout-fraction", pipe.heldout_fraction,
            "Per-label held-out fraction in [0, 1)");
    AddIndexParams(c, pipe.source, pipe.filters.min_tokens,
                   pipe.filters.max_tokens);
    AddDecomposeParams(c, pipe.decompose);
    c.Output("out-dir", pipe.out_dir, "Directory for every artifact");
    c.default_manifest = [this] {
      return (fs::path(pipe.out_dir) / "manifest.json").string();
    };
    c.action = [this, &c](Context& ctx) { RunPipeline(ctx, c.seed()); };
  }

  void RunPipeline(Context& ctx, std::uint64_t seed) {
    const fs::path dir(pipe.out_dir);
    fs::create_directories(dir);
    auto artifact = [&](const std::string& option, const std::string& name) {
      const std::string path = (dir / name).string();
      ctx.extra_outputs.emplace_back(option, path);
      return path;
    };

    ExtractParams ex;
    ex.input = pipe.mined;
    ex.output = artifact("mined", "mined.jsonl");
    ex.wh_words = pipe.wh_words;
    ex.dedup = pipe.dedup;
    ex.id_prefix = "mined-";
    const auto mined = RunExtract(ctx, ex);

    TrainParams tr;
    tr.single = pipe.single_train;
    tr.multi = pipe.multi_train;
    tr.config = pipe.classifier;
    tr.heldout_fraction = pipe.heldout_fraction;
    tr.output = artifact("classifier", "classifier.json");
    tr.report = artifact("classifier-report", "classifier_report.json");
    const auto model = RunTrain(ctx, tr, seed);

    RouteParams rp;
    rp.single_output = artifact("routed-single", "routed_single.jsonl");
    rp.multi_output = artifact("routed-multi", "routed_multi.jsonl");
    const auto routed = RunRoute(ctx, model, mined, rp);

    auto merge = [](const std::string& path, const QuestionCorpus& extra) {
      QuestionCorpus merged = LoadCorpus(path);
      for (const auto& q : extra) merged.Add(q);
      return merged;
    };
    const auto singles = merge(pipe.single_train, routed.single_hop);
    const auto queries = merge(pipe.multi_train, routed.multi_hop);
    const std::string singles_path = artifact("single-corpus", "single.jsonl");
    SaveCorpusTo(singles, singles_path);
    SaveCorpusTo(queries, artifact("multi-corpus", "multi.jsonl"));

    IndexParams ip;
    ip.vectors = pipe.vectors;
    ip.source = pipe.source;
    ip.min_tokens = pipe.filters.min_tokens;
    ip.max_tokens = pipe.filters.max_tokens;
    ip.output = artifact("index", "index.bin");
    const auto idx =
        RunBuildIndex(ctx, singles, Sha256File(singles_path), ip);

    DecomposeParams dp = pipe.decompose;
    dp.output = artifact("decompositions", "decompositions.tsv");
    const auto dataset = RunDecompose(ctx, idx, queries, dp, seed);

    const auto edited =
        RunEdit(ctx, dataset.records, artifact("edited", "edited.tsv"));

    json metrics = {{"pseudo", DecompositionReportJson(dataset.records)},
                    {"edited", DecompositionReportJson(edited)}};
    WriteText(artifact("metrics", "metrics.json"), metrics.dump(2) + "\n");
    ctx.stats["metrics"] = metrics;
    ctx.Progress("metrics", metrics);
  }
};

Command* Selected(const Tool& tool) {
  for (const auto& c : tool.commands) {
    if (c->app()->parsed()) return c.get();
  }
  return nullptr;
}

}  // namespace

int Run(std::span<const std::string> args, std::ostream& out,
        std::ostream& err) {
  Context ctx{out, err, json::object(), {}};
  try {
    const auto expanded = ExpandConfig(args);
    Tool tool;
    std::vector<const char*> argv;
    for (const auto& a : expanded) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("qdecomp");
    try {
      tool.app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = tool.app.exit(e, out, err);
      return code == 0 ? 0 : 1;
    }
    Command* cmd = Selected(tool);
    if (cmd == nullptr) throw UsageError("no subcommand given");
    Validate(*cmd);
    ctx.Progress("start", {{"subcommand", cmd->app()->get_name()},
                           {"seed", cmd->seed()}});
    cmd->action(ctx);
    const json manifest = BuildManifest(*cmd, ctx);
    std::string manifest_path = cmd->manifest_path();
    if (manifest_path.empty()) {
      manifest_path = cmd->default_manifest();
    }
    if (manifest_path.empty()) {
      ctx.Progress("manifest", {{"manifest", manifest}});
    } else {
      WriteText(manifest_path, manifest.dump(2) + "\n");
      ctx.Progress("manifest", {{"path", manifest_path}});
    }
    ctx.Progress("done");
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 3;
  }
}

int Run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return Run(args, std::cout, std::cerr);
}

}  // namespace qdecomp::cli

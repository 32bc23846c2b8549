#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/dataset.hpp"
#include "topicforge/error.hpp"
#include "topicforge/hash.hpp"
#include "topicforge/log.hpp"
#include "topicforge/models/dtm.hpp"
#include "topicforge/models/fold_in.hpp"
#include "topicforge/models/hlda.hpp"
#include "topicforge/models/lda.hpp"
#include "topicforge/models/nmf.hpp"
#include "topicforge/models/pltm.hpp"
#include "topicforge/run_config.hpp"
#include "topicforge/topics.hpp"

namespace topicforge {

namespace fs = std::filesystem;

inline constexpr std::size_t kProgressEvery = 50;
inline constexpr std::size_t kTopWordsInFiles = 10;

/// A raw document before preprocessing; `test` routes it to the test split.
struct RawDocument {
  std::string text;
  DocumentMeta meta;
  bool test = false;
};

struct PreprocessSummary {
  std::size_t docs = 0;
  std::size_t dropped = 0;
  std::size_t vocab = 0;
  double avg_len = 0.0;
};

struct PreprocessResult {
  Corpus corpus;
  PreprocessSummary summary;
};

/// Tokenizes, builds one vocabulary per language from the training split and
/// encodes both splits. Languages are ordered by first appearance.
inline PreprocessResult preprocess_documents(const std::vector<RawDocument>& raw, const PreprocessConfig& cfg,
                                             std::optional<int> num_slices = std::nullopt,
                                             std::optional<std::vector<std::string>> label_names = std::nullopt) {
  cfg.validate();
  std::vector<std::string> languages;
  for (const auto& r : raw)
    if (std::find(languages.begin(), languages.end(), r.meta.language) == languages.end())
      languages.push_back(r.meta.language);
  if (raw.empty()) throw InvalidArgument("no input documents");

  std::vector<TokenList> train, test;
  std::vector<DocumentMeta> train_meta, test_meta;
  for (const auto& r : raw) {
    (r.test ? test : train).push_back(tokenize(r.text, cfg));
    (r.test ? test_meta : train_meta).push_back(r.meta);
  }
  if (train.empty()) throw InvalidArgument("no training documents");
  std::vector<Vocabulary> vocabs;
  for (const auto& lang : languages) {
    std::vector<TokenList> own;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (train_meta[i].language == lang) own.push_back(train[i]);
    if (own.empty()) throw InvalidArgument("language '" + lang + "' has no training documents");
    vocabs.push_back(build_vocabulary(own, cfg, lang));
  }
  auto encoded = encode_corpus(train, train_meta, test, test_meta, std::move(vocabs), num_slices, label_names);
  PreprocessResult out;
  out.corpus = std::move(encoded.corpus);
  out.corpus.preprocess = cfg;
  recompute_doc_freq(out.corpus);
  auto& s = out.summary;
  s.docs = out.corpus.train_docs.size() + out.corpus.test_docs.size();
  s.dropped = encoded.dropped_train + encoded.dropped_test;
  for (const auto& v : out.corpus.vocabularies) s.vocab += v.size();
  std::size_t tokens = 0;
  for (const auto* split : {&out.corpus.train_docs, &out.corpus.test_docs})
    for (const auto& d : *split) tokens += d.token_ids.size();
  s.avg_len = s.docs ? static_cast<double>(tokens) / static_cast<double>(s.docs) : 0.0;
  if (out.corpus.train_docs.empty()) throw InvalidArgument("all documents are empty after preprocessing");
  return out;
}

namespace detail {

inline ProgressFn progress_logger(const std::string& kind) {
  return [kind](std::size_t done, std::size_t total) {
    if (done % kProgressEvery == 0 || done == total) logger()->info("{} iteration {}/{}", kind, done, total);
  };
}

inline void require_monolingual(const Corpus& c, ModelKind kind) {
  if (c.is_multilingual())
    throw StructureError("model " + to_string(kind) + " needs a monolingual corpus; use pltm for bilingual data");
}

/// Creates `<dir>/.lock` exclusively and removes it on scope exit.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path_.string().c_str(), "wx");
    if (!f) throw Error("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

inline std::string matrix_text(const Matrix& m) {
  std::string out;
  char buf[32];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline std::string top_words_text(const Matrix& phi, const Vocabulary& vocab) {
  std::string out;
  for (const auto& words : top_words(phi, vocab, std::min<std::size_t>(kTopWordsInFiles, vocab.size()))) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) out += ' ';
      out += words[i];
    }
    out += '\n';
  }
  return out;
}

}  // namespace detail

/// Trains the configured model on an in-memory corpus. `config` is resolved
/// (defaults filled) first; the stored copy carries no file paths so the
/// artifact depends only on data and hyperparameters.
inline TopicModelArtifact train_model(const Corpus& corpus, RunConfig config, const ProgressFn& progress = {}) {
  config.resolve();
  if (corpus.train_docs.empty()) throw InvalidArgument("corpus has no training documents");
  const ProgressFn report = progress ? progress : detail::progress_logger(to_string(config.model_kind));
  const std::size_t K = config.num_topics;
  const std::size_t iters = config.iterations;
  const std::uint64_t seed = config.seed;
  TopicModelArtifact a;
  switch (config.model_kind) {
    case ModelKind::lda: {
      detail::require_monolingual(corpus, config.model_kind);
      a = lda_train(corpus.train_docs, corpus.vocabulary().size(), K, config.hyper("alpha"), config.hyper("beta"),
                    iters, seed, report);
      break;
    }
    case ModelKind::nmf: {
      detail::require_monolingual(corpus, config.model_kind);
      a = nmf_factorize(corpus.train_docs, corpus.vocabulary().size(), K, iters, seed, config.hyper("eps"), report)
              .artifact;
      break;
    }
    case ModelKind::hlda: {
      detail::require_monolingual(corpus, config.model_kind);
      HldaState s = hlda_init(corpus.train_docs, corpus.vocabulary().size(), K, config.hyper("gamma"),
                              config.hyper("alpha_level"), config.hyper("beta"), seed);
      for (std::size_t i = 0; i < iters; ++i) {
        hlda_sweep(s, corpus.train_docs);
        report(i + 1, iters);
      }
      a = hlda_export(s);
      break;
    }
    case ModelKind::dtm: {
      detail::require_monolingual(corpus, config.model_kind);
      if (!corpus.num_slices) throw StructureError("corpus has no time slices");
      a = dtm_train(corpus.train_docs, corpus.vocabulary().size(), static_cast<std::size_t>(*corpus.num_slices), K,
                    config.hyper("alpha"), config.hyper("beta"), config.hyper("kappa"), iters, seed, report)
              .artifact;
      break;
    }
    case ModelKind::pltm: {
      a = pltm_train(corpus, K, config.hyper("alpha"), config.hyper("beta"), iters, seed, report);
      break;
    }
  }
  if (config.model_kind != ModelKind::pltm) a.languages = {corpus.vocabulary().language()};
  a.vocab_hashes.clear();
  for (const auto& lang : a.languages) a.vocab_hashes.push_back(corpus.vocabulary(lang).hash());
  config.dataset_path.clear();
  config.output_path.clear();
  config.preprocess = corpus.preprocess;
  a.config = std::move(config);
  return a;
}

/// Checks that the corpus vocabularies are the ones the artifact was trained on.
inline void check_vocabulary(const TopicModelArtifact& a, const Corpus& corpus) {
  for (std::size_t l = 0; l < a.languages.size(); ++l) {
    const auto& lang = a.languages[l];
    std::string have;
    try {
      have = corpus.vocabulary(lang).hash();
    } catch (const InvalidArgument&) {
      throw FormatError("dataset has no vocabulary for artifact language '" + lang + "'");
    }
    if (have != a.vocab_hashes.at(l))
      throw FormatError("vocabulary hash mismatch for language '" + lang + "': artifact " + a.vocab_hashes[l] +
                        ", dataset " + have);
  }
}

/// Theta for one new document. `language` selects the side of a
/// cross-lingual model (default: first language); `slice` the topics of a
/// dynamic model (default: last slice).
inline std::vector<double> infer_theta(const TopicModelArtifact& a, std::span<const TokenId> ids,
                                       std::uint64_t seed, std::optional<std::string> language = std::nullopt,
                                       std::optional<std::size_t> slice = std::nullopt) {
  const std::size_t sweeps = a.config.infer_sweeps;
  switch (a.kind) {
    case ModelKind::lda: return lda_infer(a, ids, sweeps, seed);
    case ModelKind::nmf: {
      const auto it = a.config.hyperparameters.find("eps");
      return nmf_infer(a.topic_word(), ids, sweeps, it == a.config.hyperparameters.end() ? 1e-12 : it->second);
    }
    case ModelKind::hlda: return hlda_infer(a, ids, sweeps, seed);
    case ModelKind::dtm: return fold_in(a.topic_word(0, slice), ids, a.alpha, sweeps, seed);
    case ModelKind::pltm: return pltm_infer(a, ids, language.value_or(a.languages.at(0)), sweeps, seed);
  }
  throw InvalidArgument("unknown model kind");
}

struct ThetaPair {
  Matrix train;
  Matrix test;
  std::vector<std::string> warnings;
};

/// Training theta from the artifact; test theta by fold-in with seed
/// `artifact seed + test document index`. Test documents with no tokens get
/// a uniform row and a warning.
inline ThetaPair export_theta(const TopicModelArtifact& a, const Corpus& corpus) {
  check_vocabulary(a, corpus);
  ThetaPair out;
  out.train = a.theta_train;
  const auto cols = a.theta_train.cols() > 0 ? a.theta_train.cols() : static_cast<Eigen::Index>(a.num_topics);
  out.test.resize(static_cast<Eigen::Index>(corpus.test_docs.size()), cols);
  for (std::size_t i = 0; i < corpus.test_docs.size(); ++i) {
    const auto& d = corpus.test_docs[i];
    const auto r = static_cast<Eigen::Index>(i);
    if (d.token_ids.empty()) {
      out.test.row(r).setConstant(1.0 / static_cast<double>(cols));
      out.warnings.push_back("test document " + std::to_string(i) + " is empty; uniform theta used");
      continue;
    }
    std::optional<std::size_t> slice;
    if (a.structure == Structure::slices && d.time_slice) slice = static_cast<std::size_t>(*d.time_slice);
    const auto theta = infer_theta(a, d.token_ids, a.seed + i, d.language, slice);
    for (std::size_t k = 0; k < theta.size(); ++k) out.test(r, static_cast<Eigen::Index>(k)) = theta[k];
  }
  return out;
}

struct TrainResult {
  TopicModelArtifact artifact;
  std::string artifact_hash;
  double seconds = 0.0;
};

/// Trains on `corpus` and, when `config.output_path` is set, writes the
/// artifact directory: model.json, model.hash, run-config.json,
/// top-words.txt, theta-train.txt, theta-test.txt and vocabulary copies.
inline TrainResult train(const Corpus& corpus, const RunConfig& config) {
  std::optional<detail::DirectoryLock> lock;
  if (!config.output_path.empty()) lock.emplace(config.output_path);
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  result.artifact = train_model(corpus, config);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const TopicModelArtifact& a = result.artifact;
  const std::string bytes = dump_json(artifact_to_json(a));
  result.artifact_hash = artifact_hash_of(bytes);
  if (config.output_path.empty()) return result;

  const fs::path dir = config.output_path;
  write_file((dir / "model.json").string(), bytes);
  write_file((dir / "model.hash").string(), result.artifact_hash + "\n");
  RunConfig full = config;
  full.resolve();
  full.preprocess = corpus.preprocess;
  write_file((dir / "run-config.json").string(), dump_json(full.to_json()));
  for (std::size_t l = 0; l < a.languages.size(); ++l) {
    const auto& vocab = corpus.vocabulary(a.languages[l]);
    save_vocabulary(vocab, dir / vocab_file_name(vocab.language()));
    const std::string name = l == 0 ? "top-words.txt" : "top-words." + vocab.language() + ".txt";
    write_file((dir / name).string(), detail::top_words_text(a.topic_word(l), vocab));
  }
  const auto thetas = export_theta(a, corpus);
  write_file((dir / "theta-train.txt").string(), detail::matrix_text(thetas.train));
  write_file((dir / "theta-test.txt").string(), detail::matrix_text(thetas.test));
  return result;
}

/// Loads `config.dataset_path` and trains.
inline TrainResult train(const RunConfig& config) {
  if (config.dataset_path.empty()) throw InvalidArgument("run config has no dataset path");
  return train(load_dataset(config.dataset_path), config);
}

/// A trained artifact with what is needed to encode new text.
struct LoadedModel {
  TopicModelArtifact artifact;
  std::vector<Vocabulary> vocabularies;  // parallel to artifact.languages
  PreprocessConfig preprocess;
  std::string artifact_hash;

  const Vocabulary& vocabulary(const std::string& lang) const {
    return vocabularies.at(artifact.language_index(lang));
  }
};

inline LoadedModel load_model(const fs::path& dir) {
  LoadedModel m;
  const std::string bytes = read_file((dir / "model.json").string());
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw FormatError("model.json: " + std::string(e.what()));
  }
  m.artifact = artifact_from_json(j);
  m.artifact_hash = artifact_hash_of(bytes);
  for (std::size_t l = 0; l < m.artifact.languages.size(); ++l) {
    const auto& lang = m.artifact.languages[l];
    Vocabulary v(load_vocabulary_tokens(dir / vocab_file_name(lang)), {}, lang);
    if (v.hash() != m.artifact.vocab_hashes.at(l))
      throw FormatError("vocabulary file for '" + lang + "' does not match the artifact's vocabulary hash");
    m.vocabularies.push_back(std::move(v));
  }
  m.preprocess = m.artifact.config.preprocess.value_or(PreprocessConfig{});
  return m;
}

struct EncodedText {
  std::vector<TokenId> ids;
  std::size_t dropped = 0;  // tokens outside the vocabulary
};

/// Tokenizes with the model's preprocessing and maps to vocabulary ids.
inline EncodedText encode_text(const LoadedModel& m, std::string_view text, const std::string& language) {
  EncodedText out;
  const auto& vocab = m.vocabulary(language);
  for (const auto& tok : tokenize(text, m.preprocess)) {
    if (auto id = vocab.id(tok)) out.ids.push_back(*id);
    else ++out.dropped;
  }
  return out;
}

struct FitTransformResult {
  TopicWords top_words;
  Matrix theta;
  Corpus corpus;
  TopicModelArtifact artifact;
};

/// Preprocess, train and return (top words, training theta) in one call.
inline FitTransformResult fit_transform(const std::vector<std::string>& raw_docs, const RunConfig& config,
                                        std::size_t top_t = 10) {
  if (raw_docs.empty()) throw InvalidArgument("fit_transform: empty document list");
  std::vector<RawDocument> raw;
  for (const auto& text : raw_docs) raw.push_back({text, {}, false});
  FitTransformResult out;
  out.corpus = preprocess_documents(raw, config.preprocess.value_or(PreprocessConfig{})).corpus;
  out.artifact = train_model(out.corpus, config);
  const auto& vocab = out.corpus.vocabulary();
  out.top_words = top_words(out.artifact.topic_word(), vocab, std::min(top_t, vocab.size()));
  out.theta = out.artifact.theta_train;
  return out;
}

}  // namespace topicforge

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "topicforge/corpus.hpp"
#include "topicforge/json_io.hpp"

namespace topicforge {

namespace fs = std::filesystem;

inline json preprocess_to_json(const PreprocessConfig& cfg) {
  return json{{"max_vocab", cfg.max_vocab},
              {"min_token_len", cfg.min_token_len},
              {"min_doc_freq", cfg.min_doc_freq},
              {"max_doc_freq_ratio", cfg.max_doc_freq_ratio},
              {"stopwords", cfg.stopwords},
              {"lowercase", cfg.lowercase},
              {"pretokenized", cfg.pretokenized}};
}

inline PreprocessConfig preprocess_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("preprocess config must be an object");
  PreprocessConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    if (k == "max_vocab") cfg.max_vocab = v.get<std::size_t>();
    else if (k == "min_token_len") cfg.min_token_len = v.get<std::size_t>();
    else if (k == "min_doc_freq") cfg.min_doc_freq = v.get<std::size_t>();
    else if (k == "max_doc_freq_ratio") cfg.max_doc_freq_ratio = v.get<double>();
    else if (k == "stopwords") cfg.stopwords = v.get<std::set<std::string>>();
    else if (k == "lowercase") cfg.lowercase = v.get<bool>();
    else if (k == "pretokenized") cfg.pretokenized = v.get<bool>();
    else throw FormatError("preprocess config: unknown key '" + k + "'");
  }
  cfg.validate();
  return cfg;
}

inline std::string vocab_file_name(const std::string& language) { return "vocab." + language + ".txt"; }

inline void save_vocabulary(const Vocabulary& vocab, const fs::path& path) {
  std::string out;
  for (const auto& t : vocab.tokens()) {
    out += t;
    out += '\n';
  }
  write_file(path.string(), out);
}

inline std::vector<std::string> load_vocabulary_tokens(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("missing file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": empty token");
    tokens.push_back(line);
  }
  return tokens;
}

/// `train.bow.txt` style cache: one line per document, `id:count` pairs, ids ascending.
inline void write_bow_cache(std::span<const Document> docs, std::span<const Vocabulary> vocabularies,
                            const fs::path& path) {
  std::string out;
  for (const auto& d : docs) {
    std::size_t V = 0;
    for (const auto& v : vocabularies)
      if (v.language() == d.language) V = v.size();
    bool first = true;
    for (auto [id, n] : bow_counts(d, V)) {
      if (!first) out += ' ';
      first = false;
      out += std::to_string(id) + ":" + std::to_string(n);
    }
    out += '\n';
  }
  write_file(path.string(), out);
}

inline std::vector<SparseCounts> read_bow_cache(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("missing file " + path.string());
  std::vector<SparseCounts> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    SparseCounts row;
    std::istringstream ss(line);
    std::string item;
    while (ss >> item) {
      const auto colon = item.find(':');
      try {
        if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
        row.emplace_back(static_cast<TokenId>(std::stoul(item.substr(0, colon))),
                         static_cast<std::uint32_t>(std::stoul(item.substr(colon + 1))));
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed entry '" + item + "'");
      }
      if (row.size() > 1 && row[row.size() - 2].first >= row.back().first)
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": ids not ascending");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {

inline json document_to_json(const Document& d, const Vocabulary& vocab, bool write_language) {
  json j;
  std::vector<std::string> tokens;
  tokens.reserve(d.token_ids.size());
  for (TokenId id : d.token_ids) tokens.push_back(vocab.token(id));
  j["tokens"] = std::move(tokens);
  if (d.label) j["label"] = *d.label;
  if (d.time_slice) j["time"] = *d.time_slice;
  if (d.pair_id) j["pair"] = *d.pair_id;
  if (write_language) j["lang"] = d.language;
  return j;
}

inline std::vector<Document> load_split(const fs::path& path, const Corpus& corpus, const PreprocessConfig& cfg,
                                        bool allow_empty) {
  std::ifstream in(path);
  if (!in) throw FormatError("missing file " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  const std::string where = path.filename().string();
  auto fail = [&](const std::string& msg) {
    throw FormatError(where + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail("expected a JSON object");
    Document doc;
    doc.language = corpus.vocabularies.front().language();
    try {
      for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        if (k == "label") doc.label = it.value().get<int>();
        else if (k == "time") doc.time_slice = it.value().get<int>();
        else if (k == "pair") doc.pair_id = it.value().get<int>();
        else if (k == "lang") doc.language = it.value().get<std::string>();
        else if (k != "tokens" && k != "text") fail("unknown field '" + k + "'");
      }
    } catch (const json::exception& e) {
      fail(e.what());
    }
    const bool has_tokens = j.contains("tokens");
    const bool has_text = j.contains("text");
    if (has_tokens == has_text) fail("exactly one of 'tokens' or 'text' is required");
    std::size_t li = 0;
    try {
      li = corpus.language_index(doc.language);
    } catch (const InvalidArgument&) {
      fail("language '" + doc.language + "' not declared in meta.json");
    }
    const Vocabulary& vocab = corpus.vocabularies[li];
    if (has_tokens) {
      if (!j["tokens"].is_array()) fail("'tokens' must be an array");
      for (const auto& t : j["tokens"]) {
        if (!t.is_string()) fail("'tokens' entries must be strings");
        auto id = vocab.id(t.get<std::string>());
        if (!id) fail("token '" + t.get<std::string>() + "' not in " + vocab_file_name(doc.language));
        doc.token_ids.push_back(*id);
      }
    } else {
      if (!j["text"].is_string()) fail("'text' must be a string");
      for (const auto& tok : tokenize(j["text"].get<std::string>(), cfg))
        if (auto id = vocab.id(tok)) doc.token_ids.push_back(*id);
    }
    if (doc.token_ids.empty() && !allow_empty) fail("empty training document");
    if (corpus.num_slices) {
      if (!doc.time_slice) fail("missing 'time' in a sliced corpus");
      if (*doc.time_slice < 0 || *doc.time_slice >= *corpus.num_slices)
        fail("time slice " + std::to_string(*doc.time_slice) + " outside [0, " +
             std::to_string(*corpus.num_slices) + ")");
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace detail

/// Recomputes each vocabulary's document frequencies from the training split.
inline void recompute_doc_freq(Corpus& corpus) {
  for (std::size_t li = 0; li < corpus.vocabularies.size(); ++li) {
    const auto& vocab = corpus.vocabularies[li];
    std::vector<std::size_t> df(vocab.size(), 0);
    std::vector<char> seen(vocab.size(), 0);
    for (const auto& d : corpus.train_docs) {
      if (d.language != vocab.language()) continue;
      std::fill(seen.begin(), seen.end(), 0);
      for (TokenId id : d.token_ids)
        if (!seen[id]) {
          seen[id] = 1;
          ++df[id];
        }
    }
    corpus.vocabularies[li] = Vocabulary(vocab.tokens(), std::move(df), vocab.language());
  }
}

/// Reads a dataset directory: `meta.json`, `vocab.<lang>.txt`, `train.jsonl`,
/// and `test.jsonl` (optional). Errors name the file and line.
inline Corpus load_dataset(const fs::path& dir) {
  const json meta = read_json_file((dir / "meta.json").string());
  Corpus corpus;
  std::vector<std::string> languages{"en"};
  try {
    for (auto it = meta.begin(); it != meta.end(); ++it) {
      const auto& k = it.key();
      const auto& v = it.value();
      if (k == "languages") languages = v.get<std::vector<std::string>>();
      else if (k == "num_slices") {
        if (!v.is_null()) corpus.num_slices = v.get<int>();
      } else if (k == "label_names") {
        if (!v.is_null()) corpus.label_names = v.get<std::vector<std::string>>();
      } else if (k == "preprocess") corpus.preprocess = preprocess_from_json(v);
      else throw FormatError("meta.json: unknown key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("meta.json: ") + e.what());
  }
  if (languages.empty()) throw FormatError("meta.json: 'languages' is empty");
  if (corpus.num_slices && *corpus.num_slices < 1) throw FormatError("meta.json: num_slices must be >= 1");
  for (const auto& lang : languages)
    corpus.vocabularies.emplace_back(load_vocabulary_tokens(dir / vocab_file_name(lang)),
                                     std::vector<std::size_t>{}, lang);

  const PreprocessConfig cfg = corpus.preprocess.value_or(PreprocessConfig{});
  corpus.train_docs = detail::load_split(dir / "train.jsonl", corpus, cfg, /*allow_empty=*/false);
  if (fs::exists(dir / "test.jsonl"))
    corpus.test_docs = detail::load_split(dir / "test.jsonl", corpus, cfg, /*allow_empty=*/true);
  if (corpus.train_docs.empty()) throw FormatError("train.jsonl: no documents");
  if (corpus.is_multilingual()) {
    check_pair_integrity(corpus.train_docs, "train.jsonl");
    check_pair_integrity(corpus.test_docs, "test.jsonl");
    for (const auto* split : {&corpus.train_docs, &corpus.test_docs})
      for (const auto& d : *split)
        if (!d.pair_id) throw FormatError("bilingual corpus: unpaired document");
  }
  recompute_doc_freq(corpus);
  return corpus;
}

/// Writes the canonical form of a corpus. Loading the result yields an equal
/// corpus, and saving that again reproduces the same bytes.
inline void save_dataset(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  json meta;
  meta["languages"] = corpus.languages();
  meta["num_slices"] = corpus.num_slices ? json(*corpus.num_slices) : json(nullptr);
  meta["label_names"] = corpus.label_names ? json(*corpus.label_names) : json(nullptr);
  if (corpus.preprocess) meta["preprocess"] = preprocess_to_json(*corpus.preprocess);
  write_file((dir / "meta.json").string(), dump_json(meta));
  for (const auto& v : corpus.vocabularies) save_vocabulary(v, dir / vocab_file_name(v.language()));

  const bool multi = corpus.is_multilingual();
  auto write_split = [&](const std::vector<Document>& docs, const fs::path& path) {
    std::string out;
    for (const auto& d : docs) {
      out += dump_json(detail::document_to_json(d, corpus.vocabulary(d.language), multi), -1);
      out += '\n';
    }
    write_file(path.string(), out);
  };
  write_split(corpus.train_docs, dir / "train.jsonl");
  write_split(corpus.test_docs, dir / "test.jsonl");
  write_bow_cache(corpus.train_docs, corpus.vocabularies, dir / "train.bow.txt");
}

}  // namespace topicforge

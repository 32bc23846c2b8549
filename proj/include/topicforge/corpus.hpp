#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "topicforge/error.hpp"
#include "topicforge/hash.hpp"

namespace topicforge {

using TokenId = std::uint32_t;
using TokenList = std::vector<std::string>;

inline const std::set<std::string>& english_stopwords() {
  static const std::set<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
      "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
      "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few",
      "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
      "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
      "itself", "just", "may", "me", "might", "more", "most", "must", "my", "myself", "no", "nor",
      "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves",
      "out", "over", "own", "same", "shall", "she", "should", "so", "some", "such", "than", "that",
      "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
      "those", "through", "to", "too", "under", "until", "up", "upon", "very", "was", "we", "were",
      "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would",
      "you", "your", "yours", "yourself", "yourselves"};
  return words;
}

struct PreprocessConfig {
  std::size_t max_vocab = 5000;
  std::size_t min_token_len = 3;
  std::size_t min_doc_freq = 5;
  double max_doc_freq_ratio = 0.7;
  std::set<std::string> stopwords = english_stopwords();
  bool lowercase = true;
  bool pretokenized = false;

  void validate() const {
    if (max_vocab < 1) throw InvalidArgument("max_vocab must be >= 1");
    if (min_doc_freq < 1) throw InvalidArgument("min_doc_freq must be >= 1");
    if (!(max_doc_freq_ratio > 0.0 && max_doc_freq_ratio <= 1.0))
      throw InvalidArgument("max_doc_freq_ratio must lie in (0, 1]");
  }

  bool operator==(const PreprocessConfig&) const = default;
};

/// Token <-> id bijection for one language. Ids are positions in `tokens()`.
class Vocabulary {
 public:
  Vocabulary() = default;

  Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> doc_freq,
             std::string language = "en")
      : tokens_(std::move(tokens)), doc_freq_(std::move(doc_freq)), language_(std::move(language)) {
    if (doc_freq_.empty()) doc_freq_.assign(tokens_.size(), 0);
    if (doc_freq_.size() != tokens_.size())
      throw InvalidArgument("vocabulary: doc_freq size differs from token count");
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty()) throw InvalidArgument("vocabulary: empty token at id " + std::to_string(i));
      if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
        throw InvalidArgument("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::size_t>& doc_freq() const { return doc_freq_; }
  const std::string& language() const { return language_; }

  std::optional<TokenId> id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Identity of the token list; artifacts record it and evaluation checks it.
  std::string hash() const {
    std::uint64_t h = fnv1a(language_);
    for (const auto& t : tokens_) {
      h = fnv1a("\n", h);
      h = fnv1a(t, h);
    }
    return hex64(h);
  }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && doc_freq_ == other.doc_freq_ && language_ == other.language_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> doc_freq_;
  std::string language_ = "en";
  std::unordered_map<std::string, TokenId> index_;
};

struct Document {
  std::vector<TokenId> token_ids;
  std::optional<int> label;
  std::optional<int> time_slice;
  std::string language = "en";
  std::optional<int> pair_id;

  bool operator==(const Document&) const = default;
};

struct DocumentMeta {
  std::optional<int> label;
  std::optional<int> time_slice;
  std::string language = "en";
  std::optional<int> pair_id;
};

struct Corpus {
  std::vector<Document> train_docs;
  std::vector<Document> test_docs;
  std::vector<Vocabulary> vocabularies;
  std::optional<int> num_slices;
  std::optional<std::vector<std::string>> label_names;
  std::optional<PreprocessConfig> preprocess;

  std::vector<std::string> languages() const {
    std::vector<std::string> out;
    for (const auto& v : vocabularies) out.push_back(v.language());
    return out;
  }

  std::size_t language_index(std::string_view lang) const {
    for (std::size_t i = 0; i < vocabularies.size(); ++i)
      if (vocabularies[i].language() == lang) return i;
    throw InvalidArgument("unknown language '" + std::string(lang) + "'");
  }

  const Vocabulary& vocabulary(std::string_view lang) const { return vocabularies[language_index(lang)]; }
  const Vocabulary& vocabulary() const { return vocabularies.at(0); }

  bool is_multilingual() const { return vocabularies.size() > 1; }

  bool has_labels() const {
    if (train_docs.empty()) return false;
    auto labeled = [](const Document& d) { return d.label.has_value(); };
    return std::all_of(train_docs.begin(), train_docs.end(), labeled) &&
           std::all_of(test_docs.begin(), test_docs.end(), labeled);
  }

  std::size_t total_tokens() const {
    std::size_t n = 0;
    for (const auto& d : train_docs) n += d.token_ids.size();
    return n;
  }

  bool operator==(const Corpus&) const = default;
};

namespace detail {

inline bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

// Length in code points; continuation bytes are not counted.
inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

}  // namespace detail

/// Splits raw text into tokens.
///
/// Pretokenized input is split on whitespace and passed through untouched.
/// Otherwise a token is a maximal run of letters (ASCII letters and any
/// non-ASCII UTF-8 byte); digits and punctuation separate tokens. Tokens
/// shorter than `min_token_len` code points and stopwords are dropped.
inline TokenList tokenize(std::string_view raw_text, const PreprocessConfig& cfg) {
  TokenList out;
  if (cfg.pretokenized) {
    std::size_t i = 0;
    while (i < raw_text.size()) {
      while (i < raw_text.size() && std::isspace(static_cast<unsigned char>(raw_text[i]))) ++i;
      std::size_t j = i;
      while (j < raw_text.size() && !std::isspace(static_cast<unsigned char>(raw_text[j]))) ++j;
      if (j > i) out.emplace_back(raw_text.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t i = 0;
  while (i < raw_text.size()) {
    while (i < raw_text.size() && !detail::is_word_byte(static_cast<unsigned char>(raw_text[i]))) ++i;
    std::size_t j = i;
    while (j < raw_text.size() && detail::is_word_byte(static_cast<unsigned char>(raw_text[j]))) ++j;
    if (j > i) {
      std::string tok(raw_text.substr(i, j - i));
      if (cfg.lowercase)
        for (char& c : tok)
          if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      if (detail::utf8_length(tok) >= cfg.min_token_len && !cfg.stopwords.contains(tok))
        out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

/// Builds the vocabulary from tokenized training documents: document-frequency
/// filters first, then the `max_vocab` most frequent survivors. Order is
/// descending corpus frequency with lexicographic ties.
inline Vocabulary build_vocabulary(std::span<const TokenList> docs, const PreprocessConfig& cfg,
                                   std::string language = "en") {
  cfg.validate();
  if (std::none_of(docs.begin(), docs.end(), [](const TokenList& d) { return !d.empty(); }))
    throw InvalidArgument("build_vocabulary: no nonempty documents");

  struct Counts {
    std::size_t df = 0;
    std::size_t cf = 0;
  };
  std::unordered_map<std::string, Counts> counts;
  std::unordered_set<std::string_view> seen;
  for (const auto& doc : docs) {
    seen.clear();
    for (const auto& tok : doc) {
      auto& c = counts[tok];
      ++c.cf;
      if (seen.insert(tok).second) ++c.df;
    }
  }

  const double df_cap = cfg.max_doc_freq_ratio * static_cast<double>(docs.size());
  std::vector<std::pair<std::string, Counts>> kept;
  for (auto& [tok, c] : counts)
    if (c.df >= cfg.min_doc_freq && static_cast<double>(c.df) <= df_cap) kept.emplace_back(tok, c);
  if (kept.empty()) throw InvalidArgument("build_vocabulary: no tokens survive frequency filtering");

  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second.cf != b.second.cf) return a.second.cf > b.second.cf;
    return a.first < b.first;
  });
  if (kept.size() > cfg.max_vocab) kept.resize(cfg.max_vocab);

  std::vector<std::string> tokens;
  std::vector<std::size_t> df;
  tokens.reserve(kept.size());
  df.reserve(kept.size());
  for (auto& [tok, c] : kept) {
    tokens.push_back(tok);
    df.push_back(c.df);
  }
  return Vocabulary(std::move(tokens), std::move(df), std::move(language));
}

struct EncodeResult {
  std::vector<Document> docs;
  std::size_t dropped = 0;
  // Position in the input of every kept document.
  std::vector<std::size_t> source_index;
};

/// Every pair id must occur in exactly two documents of distinct languages.
inline void check_pair_integrity(std::span<const Document> docs, std::string_view what = "corpus") {
  std::map<int, std::vector<const Document*>> pairs;
  for (const auto& d : docs)
    if (d.pair_id) pairs[*d.pair_id].push_back(&d);
  for (const auto& [id, members] : pairs) {
    if (members.size() != 2)
      throw FormatError(std::string(what) + ": pair " + std::to_string(id) + " has " +
                        std::to_string(members.size()) + " document(s), expected 2");
    if (members[0]->language == members[1]->language)
      throw FormatError(std::string(what) + ": pair " + std::to_string(id) +
                        " has two documents in language '" + members[0]->language + "'");
  }
}

/// Maps tokens to ids against the vocabulary of each document's language,
/// dropping out-of-vocabulary tokens and documents that end up empty.
inline EncodeResult encode_documents(std::span<const TokenList> docs, std::span<const DocumentMeta> meta,
                                     std::span<const Vocabulary> vocabularies) {
  if (docs.size() != meta.size()) throw InvalidArgument("encode: metadata count differs from document count");
  auto find_vocab = [&](const std::string& lang) -> const Vocabulary& {
    for (const auto& v : vocabularies)
      if (v.language() == lang) return v;
    throw InvalidArgument("encode: no vocabulary for language '" + lang + "'");
  };
  EncodeResult result;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Vocabulary& vocab = find_vocab(meta[i].language);
    Document doc;
    doc.label = meta[i].label;
    doc.time_slice = meta[i].time_slice;
    doc.language = meta[i].language;
    doc.pair_id = meta[i].pair_id;
    for (const auto& tok : docs[i])
      if (auto id = vocab.id(tok)) doc.token_ids.push_back(*id);
    if (doc.token_ids.empty()) {
      ++result.dropped;
      continue;
    }
    result.docs.push_back(std::move(doc));
    result.source_index.push_back(i);
  }
  return result;
}

struct EncodedCorpus {
  Corpus corpus;
  std::size_t dropped_train = 0;
  std::size_t dropped_test = 0;
};

/// Assembles a corpus from tokenized splits and prepared vocabularies.
inline EncodedCorpus encode_corpus(std::span<const TokenList> train, std::span<const DocumentMeta> train_meta,
                                   std::span<const TokenList> test, std::span<const DocumentMeta> test_meta,
                                   std::vector<Vocabulary> vocabularies,
                                   std::optional<int> num_slices = std::nullopt,
                                   std::optional<std::vector<std::string>> label_names = std::nullopt) {
  EncodedCorpus out;
  auto tr = encode_documents(train, train_meta, vocabularies);
  auto te = encode_documents(test, test_meta, vocabularies);
  out.dropped_train = tr.dropped;
  out.dropped_test = te.dropped;
  out.corpus.train_docs = std::move(tr.docs);
  out.corpus.test_docs = std::move(te.docs);
  out.corpus.vocabularies = std::move(vocabularies);
  out.corpus.num_slices = num_slices;
  out.corpus.label_names = std::move(label_names);
  if (num_slices) {
    for (const auto* split : {&out.corpus.train_docs, &out.corpus.test_docs})
      for (const auto& d : *split)
        if (!d.time_slice || *d.time_slice < 0 || *d.time_slice >= *num_slices)
          throw FormatError("encode: document time slice outside [0, " + std::to_string(*num_slices) + ")");
  }
  if (out.corpus.is_multilingual()) {
    check_pair_integrity(out.corpus.train_docs, "train split");
    check_pair_integrity(out.corpus.test_docs, "test split");
  }
  return out;
}

using SparseCounts = std::vector<std::pair<TokenId, std::uint32_t>>;

/// Bag-of-words counts, ids ascending.
inline SparseCounts bow_counts(const Document& doc, std::size_t vocab_size) {
  std::map<TokenId, std::uint32_t> counts;
  for (TokenId id : doc.token_ids) {
    if (id >= vocab_size) throw InvalidArgument("bow_counts: token id " + std::to_string(id) + " >= V");
    ++counts[id];
  }
  return {counts.begin(), counts.end()};
}

}  // namespace topicforge

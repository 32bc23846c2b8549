#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/corpus.hpp"

namespace topicforge {

using TopicWords = std::vector<std::vector<std::string>>;

struct WeightedWord {
  TokenId id = 0;
  double p = 0.0;
};

/// The T highest-probability words of one topic row: descending probability,
/// ties broken by token string.
template <typename Row>
std::vector<WeightedWord> top_weighted(const Row& row, const Vocabulary& vocab, std::size_t T) {
  const auto V = static_cast<std::size_t>(row.size());
  if (T > V) throw InvalidArgument("top words: T = " + std::to_string(T) + " exceeds V = " + std::to_string(V));
  if (V != vocab.size()) throw InvalidArgument("top words: topic width differs from vocabulary size");
  std::vector<TokenId> ids(V);
  std::iota(ids.begin(), ids.end(), TokenId{0});
  auto better = [&](TokenId a, TokenId b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return vocab.token(a) < vocab.token(b);
  };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(T), ids.end(), better);
  std::vector<WeightedWord> out;
  out.reserve(T);
  for (std::size_t i = 0; i < T; ++i) out.push_back({ids[i], row[ids[i]]});
  return out;
}

inline TopicWords top_words(const Matrix& phi, const Vocabulary& vocab, std::size_t T) {
  TopicWords out;
  out.reserve(static_cast<std::size_t>(phi.rows()));
  for (Eigen::Index k = 0; k < phi.rows(); ++k) {
    std::vector<std::string> words;
    for (const auto& w : top_weighted(phi.row(k), vocab, T)) words.push_back(vocab.token(w.id));
    out.push_back(std::move(words));
  }
  return out;
}

}  // namespace topicforge

#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/models/fold_in.hpp"
#include "topicforge/models/lda.hpp"
#include "topicforge/random.hpp"

namespace topicforge {

/// Polylingual topic model over document pairs. Both sides of a pair share
/// one doc-topic count row; topic-word counts are kept per language.
struct PltmState {
  std::size_t num_topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::array<std::size_t, 2> vocab_sizes{};
  std::vector<int> pair_ids;                          // ascending
  std::vector<std::array<const Document*, 2>> pairs;  // side per language index
  std::vector<int> pair_topic;                        // pairs x K
  std::array<std::vector<int>, 2> topic_word;         // K x V_l
  std::array<std::vector<int>, 2> topic_total;        // K
  std::vector<std::array<std::vector<std::uint32_t>, 2>> z;
  Rng rng;

  int n_dk(std::size_t p, std::size_t k) const { return pair_topic[p * num_topics + k]; }
};

/// Groups the training documents into pairs ordered by pair id, side index
/// following the corpus's vocabulary order.
inline PltmState pltm_init(const Corpus& corpus, std::size_t K, double alpha, double beta, std::uint64_t seed) {
  if (corpus.vocabularies.size() < 2) throw StructureError("cross-lingual model needs a corpus with 2 languages");
  if (corpus.vocabularies.size() > 2) throw StructureError("cross-lingual model supports exactly 2 languages");
  if (K < 1) throw InvalidArgument("pltm: K must be >= 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw InvalidArgument("pltm: alpha and beta must be positive");
  PltmState s;
  s.num_topics = K;
  s.alpha = alpha;
  s.beta = beta;
  s.seed = seed;
  s.rng = Rng(seed);
  s.vocab_sizes = {corpus.vocabularies[0].size(), corpus.vocabularies[1].size()};

  std::map<int, std::array<const Document*, 2>> grouped;
  for (const auto& d : corpus.train_docs) {
    if (!d.pair_id) throw FormatError("cross-lingual corpus: unpaired training document");
    const std::size_t li = corpus.language_index(d.language);
    auto& slot = grouped[*d.pair_id];
    if (slot[li]) throw FormatError("pair " + std::to_string(*d.pair_id) + " has two documents in one language");
    slot[li] = &d;
  }
  for (const auto& [id, sides] : grouped) {
    if (!sides[0] || !sides[1]) throw FormatError("pair " + std::to_string(id) + " is missing a side");
    s.pair_ids.push_back(id);
    s.pairs.push_back(sides);
  }
  if (s.pairs.empty()) throw InvalidArgument("pltm: empty corpus");

  s.pair_topic.assign(s.pairs.size() * K, 0);
  for (std::size_t l = 0; l < 2; ++l) {
    s.topic_word[l].assign(K * s.vocab_sizes[l], 0);
    s.topic_total[l].assign(K, 0);
  }
  s.z.resize(s.pairs.size());
  for (std::size_t p = 0; p < s.pairs.size(); ++p)
    for (std::size_t l = 0; l < 2; ++l) {
      const auto& ids = s.pairs[p][l]->token_ids;
      s.z[p][l].resize(ids.size());
      for (std::size_t n = 0; n < ids.size(); ++n) {
        if (ids[n] >= s.vocab_sizes[l]) throw InvalidArgument("pltm: token id >= V");
        const auto k = s.rng.uniform_index(K);
        s.z[p][l][n] = static_cast<std::uint32_t>(k);
        ++s.pair_topic[p * K + k];
        ++s.topic_word[l][k * s.vocab_sizes[l] + ids[n]];
        ++s.topic_total[l][k];
      }
    }
  return s;
}

/// One pass over every pair: language 0 side, then language 1 side.
/// p(z = k) is proportional to (n_dk + alpha) (n_kw^l + beta) / (n_k^l + V_l beta).
inline void pltm_sweep(PltmState& s) {
  const std::size_t K = s.num_topics;
  std::vector<double> weights(K);
  for (std::size_t p = 0; p < s.pairs.size(); ++p) {
    int* ndk = &s.pair_topic[p * K];
    for (std::size_t l = 0; l < 2; ++l) {
      const std::size_t V = s.vocab_sizes[l];
      const double vbeta = static_cast<double>(V) * s.beta;
      auto& nkw = s.topic_word[l];
      auto& nk = s.topic_total[l];
      const auto& ids = s.pairs[p][l]->token_ids;
      for (std::size_t n = 0; n < ids.size(); ++n) {
        const TokenId w = ids[n];
        auto& zi = s.z[p][l][n];
        --ndk[zi];
        --nkw[zi * V + w];
        --nk[zi];
        for (std::size_t k = 0; k < K; ++k) weights[k] = (ndk[k] + s.alpha) * (nkw[k * V + w] + s.beta) / (nk[k] + vbeta);
        zi = static_cast<std::uint32_t>(s.rng.categorical(weights));
        ++ndk[zi];
        ++nkw[zi * V + w];
        ++nk[zi];
      }
    }
  }
}

inline TopicModelArtifact pltm_export(const PltmState& s, const std::vector<std::string>& languages) {
  const std::size_t K = s.num_topics;
  TopicModelArtifact a;
  a.kind = ModelKind::pltm;
  a.structure = Structure::languages;
  a.num_topics = K;
  a.alpha = s.alpha;
  a.beta = s.beta;
  a.seed = s.seed;
  a.languages = languages;
  for (std::size_t l = 0; l < 2; ++l) {
    const std::size_t V = s.vocab_sizes[l];
    Matrix phi(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(V));
    for (std::size_t k = 0; k < K; ++k) {
      const double denom = s.topic_total[l][k] + static_cast<double>(V) * s.beta;
      for (std::size_t w = 0; w < V; ++w)
        phi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(w)) = (s.topic_word[l][k * V + w] + s.beta) / denom;
    }
    a.phi.push_back(std::move(phi));
  }
  a.pair_ids = s.pair_ids;
  a.theta_train.resize(static_cast<Eigen::Index>(s.pairs.size()), static_cast<Eigen::Index>(K));
  for (std::size_t p = 0; p < s.pairs.size(); ++p) {
    const double len = static_cast<double>(s.pairs[p][0]->token_ids.size() + s.pairs[p][1]->token_ids.size());
    const double denom = len + static_cast<double>(K) * s.alpha;
    for (std::size_t k = 0; k < K; ++k)
      a.theta_train(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = (s.n_dk(p, k) + s.alpha) / denom;
  }
  return a;
}

inline TopicModelArtifact pltm_train(const Corpus& corpus, std::size_t K, double alpha, double beta, std::size_t sweeps,
                                     std::uint64_t seed, const ProgressFn& progress = {}) {
  PltmState s = pltm_init(corpus, K, alpha, beta, seed);
  for (std::size_t i = 0; i < sweeps; ++i) {
    pltm_sweep(s);
    if (progress) progress(i + 1, sweeps);
  }
  return pltm_export(s, corpus.languages());
}

/// Monolingual fold-in against the named language's topics.
inline std::vector<double> pltm_infer(const TopicModelArtifact& a, std::span<const TokenId> ids,
                                      const std::string& language, std::size_t sweeps, std::uint64_t seed) {
  if (a.structure != Structure::languages) throw StructureError("pltm_infer needs a cross-lingual artifact");
  return fold_in(a.phi[a.language_index(language)], ids, a.alpha, sweeps, seed);
}

}  // namespace topicforge

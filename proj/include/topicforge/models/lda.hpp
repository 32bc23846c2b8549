#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/models/fold_in.hpp"
#include "topicforge/random.hpp"

namespace topicforge {

using ProgressFn = std::function<void(std::size_t iteration, std::size_t total)>;

/// Collapsed Gibbs state for LDA.
///
/// The topic-word prior is the symmetric `beta` unless `word_prior` is set,
/// in which case it holds one pseudo-count per (topic, word); the dynamic
/// model uses that to carry topics forward between slices.
struct LdaState {
  std::size_t num_topics = 0;
  std::size_t vocab_size = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;

  std::vector<std::vector<std::uint32_t>> z;
  std::vector<int> doc_topic;    // D x K
  std::vector<int> topic_word;   // K x V
  std::vector<int> topic_total;  // K

  Matrix word_prior;
  std::vector<double> word_prior_total;

  std::size_t sweeps_done = 0;
  Rng rng;

  int n_dk(std::size_t d, std::size_t k) const { return doc_topic[d * num_topics + k]; }
  int n_kw(std::size_t k, std::size_t w) const { return topic_word[k * vocab_size + w]; }
  bool has_table_prior() const { return word_prior.size() != 0; }

  double prior(std::size_t k, std::size_t w) const {
    return has_table_prior() ? word_prior(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(w)) : beta;
  }
  double prior_total(std::size_t k) const {
    return has_table_prior() ? word_prior_total[k] : static_cast<double>(vocab_size) * beta;
  }
};

namespace detail {

struct FlatWordPrior {
  double beta;
  double total;
  double operator()(std::size_t, std::size_t) const { return beta; }
  double sum(std::size_t) const { return total; }
};

struct TableWordPrior {
  const Matrix* table;
  const std::vector<double>* totals;
  double operator()(std::size_t k, std::size_t w) const {
    return (*table)(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(w));
  }
  double sum(std::size_t k) const { return (*totals)[k]; }
};

template <typename Prior>
void lda_resample_token_impl(LdaState& s, std::span<const Document> docs, std::size_t d, std::size_t n,
                             const Prior& prior, std::vector<double>& weights) {
  const std::size_t K = s.num_topics;
  const std::size_t V = s.vocab_size;
  const TokenId w = docs[d].token_ids[n];
  int* ndk = &s.doc_topic[d * K];
  std::uint32_t& zi = s.z[d][n];
  --ndk[zi];
  --s.topic_word[zi * V + w];
  --s.topic_total[zi];
  for (std::size_t k = 0; k < K; ++k)
    weights[k] = (ndk[k] + s.alpha) * (s.topic_word[k * V + w] + prior(k, w)) / (s.topic_total[k] + prior.sum(k));
  zi = static_cast<std::uint32_t>(s.rng.categorical(std::span<const double>(weights.data(), K)));
  ++ndk[zi];
  ++s.topic_word[zi * V + w];
  ++s.topic_total[zi];
}

template <typename Prior>
void lda_sweep_impl(LdaState& s, std::span<const Document> docs, const Prior& prior) {
  std::vector<double> weights(s.num_topics);
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (std::size_t n = 0; n < docs[d].token_ids.size(); ++n) lda_resample_token_impl(s, docs, d, n, prior, weights);
}

}  // namespace detail

/// Assigns every token a topic and builds consistent count tables. With a
/// flat prior the initial topic is uniform; with a table prior it is drawn
/// in proportion to the prior's normalized pseudo-counts.
inline LdaState lda_init(std::span<const Document> docs, std::size_t vocab_size, std::size_t num_topics,
                         double alpha, double beta, std::uint64_t seed, Matrix word_prior = {}) {
  if (num_topics < 1) throw InvalidArgument("lda: K must be >= 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw InvalidArgument("lda: alpha and beta must be positive");
  if (docs.empty()) throw InvalidArgument("lda: empty corpus");
  LdaState s;
  s.num_topics = num_topics;
  s.vocab_size = vocab_size;
  s.alpha = alpha;
  s.beta = beta;
  s.seed = seed;
  s.rng = Rng(seed);
  s.doc_topic.assign(docs.size() * num_topics, 0);
  s.topic_word.assign(num_topics * vocab_size, 0);
  s.topic_total.assign(num_topics, 0);
  if (word_prior.size() != 0) {
    if (static_cast<std::size_t>(word_prior.rows()) != num_topics ||
        static_cast<std::size_t>(word_prior.cols()) != vocab_size)
      throw InvalidArgument("lda: word prior must be K x V");
    s.word_prior = std::move(word_prior);
    s.word_prior_total.resize(num_topics);
    for (std::size_t k = 0; k < num_topics; ++k) s.word_prior_total[k] = s.word_prior.row(static_cast<Eigen::Index>(k)).sum();
  }

  std::vector<double> weights(num_topics);
  s.z.resize(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    s.z[d].resize(docs[d].token_ids.size());
    for (std::size_t n = 0; n < docs[d].token_ids.size(); ++n) {
      const TokenId w = docs[d].token_ids[n];
      if (w >= vocab_size) throw InvalidArgument("lda: token id " + std::to_string(w) + " >= V");
      std::size_t k = 0;
      if (s.has_table_prior()) {
        for (std::size_t j = 0; j < num_topics; ++j) weights[j] = s.prior(j, w) / s.prior_total(j);
        k = s.rng.categorical(weights);
      } else {
        k = s.rng.uniform_index(num_topics);
      }
      s.z[d][n] = static_cast<std::uint32_t>(k);
      ++s.doc_topic[d * num_topics + k];
      ++s.topic_word[k * vocab_size + w];
      ++s.topic_total[k];
    }
  }
  return s;
}

/// Resamples a single token; exposed so the conditional can be checked directly.
inline void lda_resample_token(LdaState& s, std::span<const Document> docs, std::size_t d, std::size_t n) {
  std::vector<double> weights(s.num_topics);
  if (s.has_table_prior())
    detail::lda_resample_token_impl(s, docs, d, n, detail::TableWordPrior{&s.word_prior, &s.word_prior_total}, weights);
  else
    detail::lda_resample_token_impl(s, docs, d, n, detail::FlatWordPrior{s.beta, s.prior_total(0)}, weights);
}

/// One pass over all tokens in document order.
inline void lda_gibbs_sweep(LdaState& s, std::span<const Document> docs) {
  if (s.has_table_prior())
    detail::lda_sweep_impl(s, docs, detail::TableWordPrior{&s.word_prior, &s.word_prior_total});
  else
    detail::lda_sweep_impl(s, docs, detail::FlatWordPrior{s.beta, s.prior_total(0)});
  ++s.sweeps_done;
}

inline Matrix lda_phi(const LdaState& s) {
  Matrix phi(static_cast<Eigen::Index>(s.num_topics), static_cast<Eigen::Index>(s.vocab_size));
  for (std::size_t k = 0; k < s.num_topics; ++k) {
    const double denom = s.topic_total[k] + s.prior_total(k);
    for (std::size_t w = 0; w < s.vocab_size; ++w)
      phi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(w)) = (s.n_kw(k, w) + s.prior(k, w)) / denom;
  }
  return phi;
}

inline Matrix lda_theta(const LdaState& s) {
  const auto D = s.z.size();
  Matrix theta(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(s.num_topics));
  for (std::size_t d = 0; d < D; ++d) {
    const double denom = static_cast<double>(s.z[d].size()) + static_cast<double>(s.num_topics) * s.alpha;
    for (std::size_t k = 0; k < s.num_topics; ++k)
      theta(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k)) = (s.n_dk(d, k) + s.alpha) / denom;
  }
  return theta;
}

/// Smoothed point estimates from the current assignment.
inline TopicModelArtifact lda_posterior(const LdaState& s) {
  TopicModelArtifact a;
  a.kind = ModelKind::lda;
  a.structure = Structure::flat;
  a.num_topics = s.num_topics;
  a.alpha = s.alpha;
  a.beta = s.beta;
  a.seed = s.seed;
  a.phi = {lda_phi(s)};
  a.theta_train = lda_theta(s);
  return a;
}

inline TopicModelArtifact lda_train(std::span<const Document> docs, std::size_t vocab_size, std::size_t K,
                                    double alpha, double beta, std::size_t sweeps, std::uint64_t seed,
                                    const ProgressFn& progress = {}) {
  LdaState s = lda_init(docs, vocab_size, K, alpha, beta, seed);
  for (std::size_t i = 0; i < sweeps; ++i) {
    lda_gibbs_sweep(s, docs);
    if (progress) progress(i + 1, sweeps);
  }
  return lda_posterior(s);
}

/// Fold-in inference for a new document against a trained flat artifact.
inline std::vector<double> lda_infer(const TopicModelArtifact& a, std::span<const TokenId> ids, std::size_t sweeps,
                                     std::uint64_t seed) {
  return fold_in(a.topic_word(), ids, a.alpha, sweeps, seed);
}

}  // namespace topicforge

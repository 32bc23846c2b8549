#pragma once

#include <span>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/models/lda.hpp"
#include "topicforge/random.hpp"
#include "topicforge/topics.hpp"

namespace topicforge {

/// Forward-coupled dynamic topic model: one collapsed LDA per time slice,
/// where slice t's topic-word prior is beta + kappa * phi_{t-1}. Topic k in
/// slice t is the continuation of topic k in slice t-1.
struct DynamicState {
  std::vector<LdaState> slices;
  std::vector<Matrix> eta;  // per slice, K x V pseudo-counts
  std::vector<std::vector<std::size_t>> slice_docs;
  double kappa = 0.0;
};

struct DynamicResult {
  DynamicState state;
  TopicModelArtifact artifact;
};

/// Slice 0 uses `seed` itself, so a single-slice run coincides with plain
/// LDA; slice t > 0 uses derive_seed(seed, t).
inline std::uint64_t dtm_slice_seed(std::uint64_t seed, std::size_t t) { return t == 0 ? seed : derive_seed(seed, t); }

inline DynamicResult dtm_train(std::span<const Document> docs, std::size_t vocab_size, std::size_t num_slices,
                               std::size_t K, double alpha, double beta, double kappa, std::size_t sweeps_per_slice,
                               std::uint64_t seed, const ProgressFn& progress = {}) {
  if (num_slices < 1) throw StructureError("corpus has no time slices");
  if (kappa < 0.0) throw InvalidArgument("dtm: kappa must be >= 0");
  DynamicResult result;
  DynamicState& state = result.state;
  state.kappa = kappa;
  state.slice_docs.resize(num_slices);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!docs[i].time_slice) throw StructureError("corpus has no time slices");
    const auto t = static_cast<std::size_t>(*docs[i].time_slice);
    if (t >= num_slices) throw StructureError("document " + std::to_string(i) + " has slice outside [0, T)");
    state.slice_docs[t].push_back(i);
  }
  for (std::size_t t = 0; t < num_slices; ++t)
    if (state.slice_docs[t].empty()) throw StructureError("slice " + std::to_string(t) + " has no documents");

  TopicModelArtifact& a = result.artifact;
  a.kind = ModelKind::dtm;
  a.structure = Structure::slices;
  a.num_topics = K;
  a.alpha = alpha;
  a.beta = beta;
  a.seed = seed;
  a.kappa = kappa;
  a.theta_train.resize(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(K));

  const auto k = static_cast<Eigen::Index>(K);
  const auto V = static_cast<Eigen::Index>(vocab_size);
  const std::size_t total_sweeps = num_slices * sweeps_per_slice;
  for (std::size_t t = 0; t < num_slices; ++t) {
    std::vector<Document> slice;
    slice.reserve(state.slice_docs[t].size());
    for (std::size_t i : state.slice_docs[t]) slice.push_back(docs[i]);

    Matrix eta = Matrix::Constant(k, V, beta);
    const bool coupled = t > 0 && kappa > 0.0;
    if (t > 0) eta = (beta + kappa * a.phi_slices[t - 1].array()).matrix();
    state.eta.push_back(eta);

    // A flat table is handled by the plain symmetric-prior path.
    LdaState s = lda_init(slice, vocab_size, K, alpha, beta, dtm_slice_seed(seed, t), coupled ? eta : Matrix{});
    for (std::size_t i = 0; i < sweeps_per_slice; ++i) {
      lda_gibbs_sweep(s, slice);
      if (progress) progress(t * sweeps_per_slice + i + 1, total_sweeps);
    }
    a.phi_slices.push_back(lda_phi(s));
    const Matrix theta = lda_theta(s);
    for (std::size_t j = 0; j < state.slice_docs[t].size(); ++j)
      a.theta_train.row(static_cast<Eigen::Index>(state.slice_docs[t][j])) = theta.row(static_cast<Eigen::Index>(j));
    state.slices.push_back(std::move(s));
  }
  return result;
}

/// Top words of topic k in every slice.
inline std::vector<std::vector<std::string>> dtm_topic_trajectory(const TopicModelArtifact& a, const Vocabulary& vocab,
                                                                  std::size_t k, std::size_t top_t) {
  if (a.structure != Structure::slices) throw StructureError("topic trajectory needs a dynamic artifact");
  if (k >= a.num_topics) throw InvalidArgument("topic " + std::to_string(k) + " out of range");
  std::vector<std::vector<std::string>> out;
  for (const auto& phi : a.phi_slices) {
    std::vector<std::string> words;
    for (const auto& w : top_weighted(phi.row(static_cast<Eigen::Index>(k)), vocab, top_t))
      words.push_back(vocab.token(w.id));
    out.push_back(std::move(words));
  }
  return out;
}

}  // namespace topicforge

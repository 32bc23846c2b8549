#pragma once

#include <Eigen/Sparse>

#include <cmath>
#include <span>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/models/lda.hpp"
#include "topicforge/random.hpp"

namespace topicforge {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct NmfState {
  Matrix W;  // D x K
  Matrix H;  // K x V
  double eps = 1e-12;
  std::vector<double> objective_trace;
};

struct NmfResult {
  NmfState state;
  TopicModelArtifact artifact;
};

/// D x V document-word count matrix.
inline SparseMatrix count_matrix(std::span<const Document> docs, std::size_t vocab_size) {
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (auto [w, n] : bow_counts(docs[d], vocab_size))
      entries.emplace_back(static_cast<int>(d), static_cast<int>(w), static_cast<double>(n));
  SparseMatrix X(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(vocab_size));
  X.setFromTriplets(entries.begin(), entries.end());
  return X;
}

/// ||X - WH||_F^2 expanded as ||X||^2 - 2<X, WH> + tr(W'W HH'), so the
/// dense D x V product is never formed.
inline double nmf_objective(const SparseMatrix& X, const Matrix& W, const Matrix& H) {
  double x2 = 0.0;
  double cross = 0.0;
  for (Eigen::Index r = 0; r < X.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(X, r); it; ++it) {
      x2 += it.value() * it.value();
      cross += it.value() * W.row(it.row()).dot(H.col(it.col()));
    }
  const Matrix WtW = W.transpose() * W;
  const Matrix HHt = H * H.transpose();
  const double model2 = (WtW.array() * HHt.array()).sum();
  return std::max(0.0, x2 - 2.0 * cross + model2);
}

namespace detail {

inline Matrix row_normalized_or_uniform(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double s = m.row(r).sum();
    if (s > 0.0) out.row(r) = m.row(r) / s;
    else out.row(r).setConstant(1.0 / static_cast<double>(m.cols()));
  }
  return out;
}

}  // namespace detail

/// Lee-Seung multiplicative updates for the Frobenius objective:
///   H <- H .* (W'X) ./ (W'WH + eps)
///   W <- W .* (XH') ./ (WHH' + eps)
/// The objective after each iteration is appended to `objective_trace`.
inline NmfResult nmf_factorize(const SparseMatrix& X, std::size_t K, std::size_t n_iters, std::uint64_t seed,
                               double eps = 1e-12, const ProgressFn& progress = {}) {
  if (K < 1) throw InvalidArgument("nmf: K must be >= 1");
  if (n_iters < 1) throw InvalidArgument("nmf: n_iters must be >= 1");
  const Eigen::Index D = X.rows();
  const Eigen::Index V = X.cols();
  const auto k = static_cast<Eigen::Index>(K);

  double mean = 0.0;
  for (Eigen::Index r = 0; r < X.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(X, r); it; ++it) mean += it.value();
  mean /= static_cast<double>(std::max<Eigen::Index>(1, D * V));
  const double scale = std::sqrt(std::max(mean, 1e-6) / static_cast<double>(K));

  NmfResult result;
  NmfState& s = result.state;
  s.eps = eps;
  Rng rng(seed);
  s.W.resize(D, k);
  s.H.resize(k, V);
  for (Eigen::Index i = 0; i < s.W.size(); ++i) s.W.data()[i] = scale * (0.01 + rng.uniform());
  for (Eigen::Index i = 0; i < s.H.size(); ++i) s.H.data()[i] = scale * (0.01 + rng.uniform());

  const SparseMatrix Xt = X.transpose();
  for (std::size_t it = 0; it < n_iters; ++it) {
    {
      const Matrix numer = (Xt * s.W).transpose();  // W'X
      const Matrix denom = (s.W.transpose() * s.W) * s.H;
      s.H.array() *= numer.array() / (denom.array() + eps);
    }
    {
      const Matrix numer = X * s.H.transpose();  // XH'
      const Matrix denom = s.W * (s.H * s.H.transpose());
      s.W.array() *= numer.array() / (denom.array() + eps);
    }
    s.objective_trace.push_back(nmf_objective(X, s.W, s.H));
    if (progress) progress(it + 1, n_iters);
  }

  // Rescale so each H row sums to one; WH is unchanged and W then lives on
  // the same scale fold-in inference uses.
  for (Eigen::Index r = 0; r < k; ++r) {
    const double mass = s.H.row(r).sum();
    if (mass > 0.0) {
      s.H.row(r) /= mass;
      s.W.col(r) *= mass;
    }
  }

  TopicModelArtifact& a = result.artifact;
  a.kind = ModelKind::nmf;
  a.structure = Structure::flat;
  a.num_topics = K;
  a.seed = seed;
  a.phi = {detail::row_normalized_or_uniform(s.H)};
  a.theta_train = detail::row_normalized_or_uniform(s.W);
  return result;
}

/// Fits nonnegative weights for one document against fixed topics, then
/// normalizes them to a distribution.
inline std::vector<double> nmf_infer(const Matrix& phi, std::span<const TokenId> ids, std::size_t n_iters,
                                     double eps = 1e-12) {
  if (ids.empty()) throw EmptyDocumentError("no in-vocabulary tokens");
  const Eigen::Index K = phi.rows();
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(phi.cols());
  for (TokenId w : ids) {
    if (w >= static_cast<std::size_t>(phi.cols())) throw InvalidArgument("nmf: token id >= V");
    x(w) += 1.0;
  }
  const Matrix gram = phi * phi.transpose();
  const Eigen::RowVectorXd numer = x * phi.transpose();
  Eigen::RowVectorXd w = Eigen::RowVectorXd::Constant(K, static_cast<double>(ids.size()) / static_cast<double>(K));
  for (std::size_t it = 0; it < n_iters; ++it) w.array() *= numer.array() / ((w * gram).array() + eps);
  std::vector<double> theta(static_cast<std::size_t>(K));
  const double total = w.sum();
  for (Eigen::Index i = 0; i < K; ++i)
    theta[static_cast<std::size_t>(i)] = total > 0.0 ? w(i) / total : 1.0 / static_cast<double>(K);
  return theta;
}

inline NmfResult nmf_factorize(std::span<const Document> docs, std::size_t vocab_size, std::size_t K,
                               std::size_t n_iters, std::uint64_t seed, double eps = 1e-12,
                               const ProgressFn& progress = {}) {
  return nmf_factorize(count_matrix(docs, vocab_size), K, n_iters, seed, eps, progress);
}

}  // namespace topicforge

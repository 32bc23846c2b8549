#pragma once

#include <span>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/error.hpp"
#include "topicforge/random.hpp"

namespace topicforge {

/// Document-local Gibbs sampling with the topic-word matrix held fixed:
/// p(z = k) is proportional to (n_dk + alpha) * phi[k, w].
///
/// Returns the smoothed estimate (n_dk + alpha) / (len + K alpha) averaged
/// over the second half of the sweeps.
inline std::vector<double> fold_in(const Matrix& phi, std::span<const TokenId> ids, double alpha,
                                   std::size_t sweeps, std::uint64_t seed) {
  if (ids.empty()) throw EmptyDocumentError("no in-vocabulary tokens");
  if (sweeps == 0) throw InvalidArgument("fold-in needs at least one sweep");
  const auto K = static_cast<std::size_t>(phi.rows());
  const auto V = static_cast<std::size_t>(phi.cols());
  for (TokenId w : ids)
    if (w >= V) throw InvalidArgument("fold-in: token id " + std::to_string(w) + " >= V");

  Rng rng(seed);
  std::vector<std::uint32_t> z(ids.size());
  std::vector<int> counts(K, 0);
  for (auto& zi : z) {
    zi = static_cast<std::uint32_t>(rng.uniform_index(K));
    ++counts[zi];
  }

  const double len = static_cast<double>(ids.size());
  const double denom = len + static_cast<double>(K) * alpha;
  const std::size_t burn_in = sweeps / 2;
  std::vector<double> theta(K, 0.0);
  std::vector<double> weights(K);
  for (std::size_t s = 0; s < sweeps; ++s) {
    for (std::size_t n = 0; n < ids.size(); ++n) {
      --counts[z[n]];
      for (std::size_t k = 0; k < K; ++k)
        weights[k] = (counts[k] + alpha) * phi(static_cast<Eigen::Index>(k), ids[n]);
      z[n] = static_cast<std::uint32_t>(rng.categorical(weights));
      ++counts[z[n]];
    }
    if (s >= burn_in)
      for (std::size_t k = 0; k < K; ++k) theta[k] += (counts[k] + alpha) / denom;
  }
  const double kept = static_cast<double>(sweeps - burn_in);
  double total = 0.0;
  for (double& t : theta) total += (t /= kept);
  for (double& t : theta) t /= total;
  return theta;
}

}  // namespace topicforge

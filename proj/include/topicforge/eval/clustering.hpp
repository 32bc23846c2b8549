#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/error.hpp"

namespace topicforge {

struct ClusteringResult {
  double purity = 0.0;
  double nmi = 0.0;
};

/// Argmax of each row; ties go to the lowest column.
inline std::vector<int> argmax_rows(const Matrix& theta) {
  std::vector<int> out(static_cast<std::size_t>(theta.rows()));
  for (Eigen::Index r = 0; r < theta.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < theta.cols(); ++c)
      if (theta(r, c) > theta(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

/// Purity and NMI (arithmetic-mean normalization, natural log) of two
/// partitions given as per-item ids.
inline ClusteringResult partition_agreement(const std::vector<int>& clusters, const std::vector<int>& labels) {
  if (clusters.size() != labels.size()) throw InvalidArgument("clustering: assignment and label counts differ");
  if (clusters.empty()) throw InvalidArgument("clustering: no documents");
  const double N = static_cast<double>(clusters.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pc, pl;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    joint[{clusters[i], labels[i]}] += 1.0;
    pc[clusters[i]] += 1.0;
    pl[labels[i]] += 1.0;
  }

  ClusteringResult r;
  std::map<int, double> best;
  for (const auto& [key, n] : joint) best[key.first] = std::max(best[key.first], n);
  for (const auto& [c, n] : best) r.purity += n;
  r.purity /= N;

  auto entropy = [N](const std::map<int, double>& m) {
    double h = 0.0;
    for (const auto& [k, n] : m) h -= (n / N) * std::log(n / N);
    return h;
  };
  const double hc = entropy(pc);
  const double hl = entropy(pl);
  // Identical partitions give a one-to-one contingency table.
  const bool identical = joint.size() == pc.size() && joint.size() == pl.size();
  if (identical) {
    r.nmi = 1.0;
    return r;
  }
  if (hc == 0.0 || hl == 0.0) {
    r.nmi = 0.0;
    return r;
  }
  double mi = 0.0;
  for (const auto& [key, n] : joint) mi += (n / N) * std::log(n * N / (pc[key.first] * pl[key.second]));
  r.nmi = std::clamp(mi / (0.5 * (hc + hl)), 0.0, 1.0);
  return r;
}

inline ClusteringResult clustering_eval(const Matrix& theta_test, const std::vector<int>& labels_test) {
  if (static_cast<std::size_t>(theta_test.rows()) != labels_test.size())
    throw InvalidArgument("clustering: theta rows and label count differ");
  return partition_agreement(argmax_rows(theta_test), labels_test);
}

}  // namespace topicforge

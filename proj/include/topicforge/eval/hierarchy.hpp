#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/eval/coherence.hpp"

namespace topicforge {

/// Missing values mean the tree has no pair of the required kind.
struct HierarchyResult {
  std::optional<double> pcc;
  std::optional<double> pcd;
  std::optional<double> pncd;
  std::optional<double> sibling_d;
};

/// |a ∩ b| / T for two top-T lists.
inline double top_overlap(const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
  const std::set<TokenId> sa(a.begin(), a.end());
  std::size_t shared = 0;
  for (TokenId w : std::set<TokenId>(b.begin(), b.end())) shared += sa.count(w);
  return static_cast<double>(shared) / static_cast<double>(a.size());
}

/// Parent-child coherence and diversity, parent to non-child diversity and
/// sibling diversity. The root is left out: edges start at depth-1 parents,
/// non-child pairs join a non-root parent with other nodes one level below
/// it, and siblings are pairs of children of a non-root parent.
/// `top_words[i]` is the top-T list of `nodes[i]`.
inline HierarchyResult hierarchy_eval(const std::vector<TreeNodeInfo>& nodes, const TopicIdLists& top_words,
                                      const CooccurrenceStats& stats) {
  if (nodes.size() != top_words.size()) throw InvalidArgument("hierarchy_eval: one top-word list per node required");
  for (const auto& t : top_words)
    if (t.empty()) throw InvalidArgument("hierarchy_eval: empty top-word list");

  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i].id] = i;
  std::map<int, std::vector<std::size_t>> children;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].parent) children[*nodes[i].parent].push_back(i);

  double pcc = 0.0, pcd = 0.0, pncd = 0.0, sib = 0.0;
  std::size_t n_edges = 0, n_nonchild = 0, n_sib = 0;
  for (std::size_t p = 0; p < nodes.size(); ++p) {
    if (nodes[p].depth < 1) continue;
    const auto& kids = children[nodes[p].id];
    for (std::size_t c : kids) {
      const auto& a = top_words[p];
      const auto& b = top_words[c];
      double s = 0.0;
      for (TokenId wi : a)
        for (TokenId wj : b) s += npmi_pair(stats, wi, wj);
      pcc += s / static_cast<double>(a.size() * b.size());
      pcd += 1.0 - top_overlap(a, b);
      ++n_edges;
    }
    for (std::size_t o = 0; o < nodes.size(); ++o) {
      if (nodes[o].depth != nodes[p].depth + 1 || nodes[o].parent == nodes[p].id) continue;
      pncd += 1.0 - top_overlap(top_words[p], top_words[o]);
      ++n_nonchild;
    }
    for (std::size_t i = 0; i < kids.size(); ++i)
      for (std::size_t j = i + 1; j < kids.size(); ++j) {
        sib += 1.0 - top_overlap(top_words[kids[i]], top_words[kids[j]]);
        ++n_sib;
      }
  }

  HierarchyResult r;
  if (n_edges) {
    r.pcc = pcc / static_cast<double>(n_edges);
    r.pcd = pcd / static_cast<double>(n_edges);
  }
  if (n_nonchild) r.pncd = pncd / static_cast<double>(n_nonchild);
  if (n_sib) r.sibling_d = sib / static_cast<double>(n_sib);
  return r;
}

}  // namespace topicforge

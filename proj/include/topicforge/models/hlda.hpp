#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/models/lda.hpp"
#include "topicforge/random.hpp"

namespace topicforge {

struct TreeNode {
  int id = 0;
  int parent = -1;
  int depth = 0;
  std::vector<int> word_counts;
  int total = 0;
  int num_docs = 0;
  std::vector<int> children;
};

/// Topic tree for the nested-CRP sampler. Node ids are handed out in
/// increasing order and never reused; the root is node 0 and is never removed.
class TopicTree {
 public:
  TopicTree() = default;
  TopicTree(std::size_t depth_limit, std::size_t vocab_size) : depth_limit_(depth_limit), vocab_size_(vocab_size) {
    TreeNode root;
    root.id = next_id_++;
    root.word_counts.assign(vocab_size_, 0);
    nodes_.emplace(root.id, std::move(root));
  }

  static constexpr int root() { return 0; }
  std::size_t depth_limit() const { return depth_limit_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t size() const { return nodes_.size(); }
  const std::map<int, TreeNode>& nodes() const { return nodes_; }
  bool contains(int id) const { return nodes_.contains(id); }
  const TreeNode& node(int id) const { return nodes_.at(id); }
  TreeNode& node(int id) { return nodes_.at(id); }

  int add_child(int parent_id) {
    TreeNode& parent = nodes_.at(parent_id);
    if (static_cast<std::size_t>(parent.depth) + 1 >= depth_limit_)
      throw InvalidArgument("tree: node " + std::to_string(parent_id) + " is at the depth limit");
    TreeNode child;
    child.id = next_id_++;
    child.parent = parent_id;
    child.depth = parent.depth + 1;
    child.word_counts.assign(vocab_size_, 0);
    parent.children.push_back(child.id);
    const int id = child.id;
    nodes_.emplace(id, std::move(child));
    return id;
  }

  void remove(int id) {
    if (id == root()) throw InvalidArgument("tree: the root cannot be removed");
    const TreeNode& n = nodes_.at(id);
    if (!n.children.empty() || n.num_docs != 0 || n.total != 0)
      throw InvalidArgument("tree: node " + std::to_string(id) + " is not empty");
    auto& siblings = nodes_.at(n.parent).children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), id));
    nodes_.erase(id);
  }

 private:
  std::size_t depth_limit_ = 0;
  std::size_t vocab_size_ = 0;
  int next_id_ = 0;
  std::map<int, TreeNode> nodes_;
};

struct HldaState {
  TopicTree tree;
  std::vector<std::vector<int>> path;             // per doc, root -> leaf, length L
  std::vector<std::vector<std::uint32_t>> level;  // per token depth
  std::vector<std::vector<int>> doc_level;        // per doc, token count at each depth
  double gamma = 1.0;
  double alpha_level = 1.0;
  double beta = 0.01;
  std::uint64_t seed = 0;
  Rng rng;

  std::size_t depth_limit() const { return tree.depth_limit(); }
  std::size_t vocab_size() const { return tree.vocab_size(); }
};

namespace detail {

using LevelCounts = std::vector<std::pair<TokenId, int>>;

inline std::vector<LevelCounts> doc_level_word_counts(const HldaState& s, const Document& doc, std::size_t d) {
  std::vector<std::map<TokenId, int>> acc(s.depth_limit());
  for (std::size_t n = 0; n < doc.token_ids.size(); ++n) ++acc[s.level[d][n]][doc.token_ids[n]];
  std::vector<LevelCounts> out(acc.size());
  for (std::size_t l = 0; l < acc.size(); ++l) out[l].assign(acc[l].begin(), acc[l].end());
  return out;
}

// log p(words | node) for adding `counts` to a node holding `word_counts` / `total`.
inline double node_log_likelihood(const std::vector<int>* word_counts, int total, const LevelCounts& counts,
                                  double beta, double vbeta) {
  int c = 0;
  double ll = 0.0;
  for (auto [w, n] : counts) {
    const double base = word_counts ? (*word_counts)[w] : 0;
    ll += std::lgamma(base + n + beta) - std::lgamma(base + beta);
    c += n;
  }
  if (c == 0) return 0.0;
  return ll + std::lgamma(total + vbeta) - std::lgamma(total + c + vbeta);
}

inline void hlda_detach_doc(HldaState& s, std::span<const Document> docs, std::size_t d) {
  const auto& doc = docs[d];
  for (std::size_t n = 0; n < doc.token_ids.size(); ++n) {
    TreeNode& node = s.tree.node(s.path[d][s.level[d][n]]);
    --node.word_counts[doc.token_ids[n]];
    --node.total;
  }
  for (int id : s.path[d]) --s.tree.node(id).num_docs;
  for (std::size_t l = s.path[d].size(); l-- > 1;)
    if (s.tree.node(s.path[d][l]).num_docs == 0) s.tree.remove(s.path[d][l]);
}

inline void hlda_attach_doc(HldaState& s, std::span<const Document> docs, std::size_t d) {
  const auto& doc = docs[d];
  for (int id : s.path[d]) ++s.tree.node(id).num_docs;
  for (std::size_t n = 0; n < doc.token_ids.size(); ++n) {
    TreeNode& node = s.tree.node(s.path[d][s.level[d][n]]);
    ++node.word_counts[doc.token_ids[n]];
    ++node.total;
  }
}

}  // namespace detail

/// Seeds every document on one root-to-leaf chain with uniformly random levels.
inline HldaState hlda_init(std::span<const Document> docs, std::size_t vocab_size, std::size_t depth_limit,
                           double gamma, double alpha_level, double beta, std::uint64_t seed) {
  if (depth_limit < 2) throw InvalidArgument("hlda: depth limit must be >= 2");
  if (!(gamma > 0.0) || !(alpha_level > 0.0) || !(beta > 0.0))
    throw InvalidArgument("hlda: gamma, alpha_level and beta must be positive");
  if (docs.empty()) throw InvalidArgument("hlda: empty corpus");
  HldaState s;
  s.tree = TopicTree(depth_limit, vocab_size);
  s.gamma = gamma;
  s.alpha_level = alpha_level;
  s.beta = beta;
  s.seed = seed;
  s.rng = Rng(seed);
  std::vector<int> chain{TopicTree::root()};
  while (chain.size() < depth_limit) chain.push_back(s.tree.add_child(chain.back()));
  s.path.assign(docs.size(), chain);
  s.level.resize(docs.size());
  s.doc_level.assign(docs.size(), std::vector<int>(depth_limit, 0));
  for (std::size_t d = 0; d < docs.size(); ++d) {
    s.level[d].resize(docs[d].token_ids.size());
    for (auto& l : s.level[d]) {
      l = static_cast<std::uint32_t>(s.rng.uniform_index(depth_limit));
      ++s.doc_level[d][l];
    }
    for (TokenId w : docs[d].token_ids)
      if (w >= vocab_size) throw InvalidArgument("hlda: token id " + std::to_string(w) + " >= V");
    detail::hlda_attach_doc(s, docs, d);
  }
  return s;
}

/// Resamples document d's path under the nested CRP prior (existing child
/// with weight n_docs, new child with weight gamma at every depth) times the
/// collapsed likelihood of the document's per-level words.
inline void hlda_sample_path(HldaState& s, std::span<const Document> docs, std::size_t d) {
  const std::size_t L = s.depth_limit();
  const double vbeta = static_cast<double>(s.vocab_size()) * s.beta;
  detail::hlda_detach_doc(s, docs, d);
  const auto counts = detail::doc_level_word_counts(s, docs[d], d);

  // likelihood of levels l..L-1 landing on brand-new nodes
  std::vector<double> new_suffix(L + 1, 0.0);
  for (std::size_t l = L; l-- > 0;)
    new_suffix[l] = new_suffix[l + 1] + detail::node_log_likelihood(nullptr, 0, counts[l], s.beta, vbeta);

  struct Candidate {
    int node;      // existing leaf, or the parent of a new branch
    bool branch;   // true: new child chain below `node`
    double log_weight;
  };
  std::vector<Candidate> candidates;
  struct Frame {
    int node;
    double score;
  };
  std::vector<Frame> stack;
  {
    const TreeNode& root = s.tree.node(TopicTree::root());
    stack.push_back({root.id, detail::node_log_likelihood(&root.word_counts, root.total, counts[0], s.beta, vbeta)});
  }
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const TreeNode& u = s.tree.node(f.node);
    const auto depth = static_cast<std::size_t>(u.depth);
    if (depth + 1 == L) {
      candidates.push_back({u.id, false, f.score});
      continue;
    }
    const double norm = std::log(u.num_docs + s.gamma);
    candidates.push_back({u.id, true, f.score + std::log(s.gamma) - norm + new_suffix[depth + 1]});
    for (auto it = u.children.rbegin(); it != u.children.rend(); ++it) {
      const TreeNode& c = s.tree.node(*it);
      const double ll = detail::node_log_likelihood(&c.word_counts, c.total, counts[depth + 1], s.beta, vbeta);
      stack.push_back({c.id, f.score + std::log(static_cast<double>(c.num_docs)) - norm + ll});
    }
  }

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) best = std::max(best, c.log_weight);
  std::vector<double> weights(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) weights[i] = std::exp(candidates[i].log_weight - best);
  const Candidate& chosen = candidates[s.rng.categorical(weights)];

  std::vector<int> path;
  for (int id = chosen.node; id != -1; id = s.tree.node(id).parent) path.push_back(id);
  std::reverse(path.begin(), path.end());
  if (chosen.branch)
    while (path.size() < L) path.push_back(s.tree.add_child(path.back()));
  s.path[d] = std::move(path);
  detail::hlda_attach_doc(s, docs, d);
}

/// Resamples the depth of one token given document d's path:
/// p(l) proportional to (n_dl + alpha_level) (n_kw + beta) / (n_k + V beta), k = path[d][l].
inline void hlda_resample_level(HldaState& s, std::span<const Document> docs, std::size_t d, std::size_t n,
                                std::vector<double>& weights) {
  const std::size_t L = s.depth_limit();
  if (L <= 1) return;
  const double vbeta = static_cast<double>(s.vocab_size()) * s.beta;
  const TokenId w = docs[d].token_ids[n];
  auto& lvl = s.level[d][n];
  {
    TreeNode& node = s.tree.node(s.path[d][lvl]);
    --node.word_counts[w];
    --node.total;
    --s.doc_level[d][lvl];
  }
  weights.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    const TreeNode& node = s.tree.node(s.path[d][l]);
    weights[l] = (s.doc_level[d][l] + s.alpha_level) * (node.word_counts[w] + s.beta) / (node.total + vbeta);
  }
  lvl = static_cast<std::uint32_t>(s.rng.categorical(weights));
  TreeNode& node = s.tree.node(s.path[d][lvl]);
  ++node.word_counts[w];
  ++node.total;
  ++s.doc_level[d][lvl];
}

inline void hlda_sample_levels(HldaState& s, std::span<const Document> docs, std::size_t d) {
  std::vector<double> weights;
  for (std::size_t n = 0; n < docs[d].token_ids.size(); ++n) hlda_resample_level(s, docs, d, n, weights);
}

inline void hlda_sweep(HldaState& s, std::span<const Document> docs) {
  for (std::size_t d = 0; d < docs.size(); ++d) {
    hlda_sample_path(s, docs, d);
    hlda_sample_levels(s, docs, d);
  }
}

/// Node topics and per-document theta over each document's path, embedded
/// in a documents x nodes matrix (columns in ascending node-id order).
inline TopicModelArtifact hlda_export(const HldaState& s) {
  const std::size_t L = s.depth_limit();
  const auto V = static_cast<Eigen::Index>(s.vocab_size());
  const double vbeta = static_cast<double>(V) * s.beta;
  TopicModelArtifact a;
  a.kind = ModelKind::hlda;
  a.structure = Structure::tree;
  a.alpha = s.alpha_level;
  a.beta = s.beta;
  a.seed = s.seed;
  a.depth_limit = L;
  std::map<int, Eigen::Index> column;
  for (const auto& [id, node] : s.tree.nodes()) {
    column[id] = static_cast<Eigen::Index>(a.tree.size());
    TreeNodeInfo info;
    info.id = id;
    if (node.parent >= 0) info.parent = node.parent;
    info.depth = node.depth;
    a.tree.push_back(info);
  }
  a.num_topics = a.tree.size();
  Matrix phi(static_cast<Eigen::Index>(a.tree.size()), V);
  for (const auto& [id, node] : s.tree.nodes())
    for (Eigen::Index w = 0; w < V; ++w)
      phi(column[id], w) = (node.word_counts[static_cast<std::size_t>(w)] + s.beta) / (node.total + vbeta);
  a.phi = {std::move(phi)};
  a.theta_train = Matrix::Zero(static_cast<Eigen::Index>(s.path.size()), static_cast<Eigen::Index>(a.tree.size()));
  for (std::size_t d = 0; d < s.path.size(); ++d) {
    const double denom = static_cast<double>(s.level[d].size()) + static_cast<double>(L) * s.alpha_level;
    for (std::size_t l = 0; l < L; ++l)
      a.theta_train(static_cast<Eigen::Index>(d), column[s.path[d][l]]) = (s.doc_level[d][l] + s.alpha_level) / denom;
  }
  return a;
}

/// Number of training documents whose path ends at each node; used as the
/// path prior for inference on new documents.
inline std::vector<double> hlda_leaf_weights(const TopicModelArtifact& a) {
  std::vector<double> w(a.tree.size(), 0.0);
  for (Eigen::Index d = 0; d < a.theta_train.rows(); ++d) {
    std::size_t deepest = 0;
    int depth = -1;
    for (std::size_t i = 0; i < a.tree.size(); ++i)
      if (a.theta_train(d, static_cast<Eigen::Index>(i)) > 0.0 && a.tree[i].depth > depth) {
        depth = a.tree[i].depth;
        deepest = i;
      }
    w[deepest] += 1.0;
  }
  return w;
}

/// Fold-in for a new document with node topics fixed: alternates path
/// sampling (existing paths only, prior proportional to training usage) with
/// level sampling. Returns theta over all nodes, averaged over the second
/// half of the sweeps.
inline std::vector<double> hlda_infer(const TopicModelArtifact& a, std::span<const TokenId> ids, std::size_t sweeps,
                                      std::uint64_t seed) {
  if (ids.empty()) throw EmptyDocumentError("no in-vocabulary tokens");
  if (sweeps == 0) throw InvalidArgument("hlda infer needs at least one sweep");
  const Matrix& phi = a.topic_word();
  for (TokenId w : ids)
    if (w >= static_cast<std::size_t>(phi.cols())) throw InvalidArgument("hlda infer: token id >= V");
  const std::size_t L = a.depth_limit;
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < a.tree.size(); ++i) index[a.tree[i].id] = i;

  // every complete root-to-leaf path, as node indices
  const auto leaf_weights = hlda_leaf_weights(a);
  std::vector<std::vector<std::size_t>> paths;
  std::vector<double> log_prior;
  for (std::size_t i = 0; i < a.tree.size(); ++i) {
    if (static_cast<std::size_t>(a.tree[i].depth) + 1 != L || leaf_weights[i] <= 0.0) continue;
    std::vector<std::size_t> p;
    for (std::optional<int> id = a.tree[i].id; id; id = a.tree[index.at(*id)].parent) p.push_back(index.at(*id));
    std::reverse(p.begin(), p.end());
    paths.push_back(std::move(p));
    log_prior.push_back(std::log(leaf_weights[i]));
  }
  if (paths.empty()) throw StructureError("hlda infer: tree has no complete paths");

  Rng rng(seed);
  std::vector<std::uint32_t> lvl(ids.size());
  std::vector<int> level_count(L, 0);
  for (auto& l : lvl) {
    l = static_cast<std::uint32_t>(rng.uniform_index(L));
    ++level_count[l];
  }
  std::size_t current = 0;
  std::vector<double> theta(a.tree.size(), 0.0);
  std::vector<double> weights;
  const std::size_t burn_in = sweeps / 2;
  const double denom = static_cast<double>(ids.size()) + static_cast<double>(L) * a.alpha;
  for (std::size_t s = 0; s < sweeps; ++s) {
    std::vector<double> scores(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) {
      double sc = log_prior[p];
      for (std::size_t n = 0; n < ids.size(); ++n)
        sc += std::log(phi(static_cast<Eigen::Index>(paths[p][lvl[n]]), ids[n]));
      scores[p] = sc;
    }
    const double best = *std::max_element(scores.begin(), scores.end());
    weights.resize(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) weights[p] = std::exp(scores[p] - best);
    current = rng.categorical(weights);

    weights.resize(L);
    for (std::size_t n = 0; n < ids.size(); ++n) {
      --level_count[lvl[n]];
      for (std::size_t l = 0; l < L; ++l)
        weights[l] = (level_count[l] + a.alpha) * phi(static_cast<Eigen::Index>(paths[current][l]), ids[n]);
      lvl[n] = static_cast<std::uint32_t>(rng.categorical(weights));
      ++level_count[lvl[n]];
    }
    if (s >= burn_in)
      for (std::size_t l = 0; l < L; ++l) theta[paths[current][l]] += (level_count[l] + a.alpha) / denom;
  }
  double total = 0.0;
  for (double t : theta) total += t;
  for (double& t : theta) t /= total;
  return theta;
}

}  // namespace topicforge

// Acceptance suite: one PASS/FAIL/SKIP line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "test_support.hpp"
#include "topicforge/cli.hpp"
#include "topicforge/topicforge.hpp"

using namespace topicforge;

namespace {

// Tolerances and budgets.
constexpr double kOracleTol = 1e-9;
constexpr double kOracleSeconds = 10.0;
constexpr double kRecoveryCosine = 0.90;
constexpr double kRecoverySeconds = 60.0;
constexpr double kGibbsTol = 0.01;
constexpr int kGibbsSamples = 100000;
constexpr double kNmfSlack = 1e-9;
constexpr double kRank1Residual = 1e-6;
constexpr double kPltmCosine = 0.85;
constexpr double kStochasticTol = 1e-9;
constexpr double kThetaSumTol = 1e-6;
constexpr std::size_t k20ngDocs = 18846;
constexpr std::size_t k20ngVocab = 5000;

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

// Collects failed sub-checks so a criterion can report all of them.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok) failed_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream ss;
    ss << what << " got " << got << " want " << want;
    expect(std::abs(got - want) <= tol, ss.str());
  }
  Outcome outcome(const std::string& summary) const {
    if (failed_.empty()) return {Status::pass, summary + " (" + std::to_string(count_) + " checks)"};
    std::string d = std::to_string(failed_.size()) + "/" + std::to_string(count_) + " failed; first: " + failed_[0];
    return {Status::fail, d};
  }

 private:
  std::size_t count_ = 0;
  std::vector<std::string> failed_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << std::fixed << v;
  return ss.str();
}

double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const double n = a.norm() * b.norm();
  return n == 0.0 ? 0.0 : a.dot(b) / n;
}

std::vector<Document> random_docs(Rng& rng, std::size_t D, std::size_t V, std::size_t max_len) {
  std::vector<Document> docs;
  for (std::size_t d = 0; d < D; ++d) {
    Document doc;
    const std::size_t len = 1 + rng.uniform_index(max_len);
    for (std::size_t n = 0; n < len; ++n) doc.token_ids.push_back(static_cast<TokenId>(rng.uniform_index(V)));
    docs.push_back(doc);
  }
  return docs;
}

TopicIdLists random_topics(Rng& rng, std::size_t K, std::size_t T, std::size_t V) {
  TopicIdLists out(K);
  for (auto& t : out) {
    std::set<TokenId> seen;
    while (t.size() < T) {
      const auto w = static_cast<TokenId>(rng.uniform_index(V));
      if (seen.insert(w).second) t.push_back(w);
    }
  }
  return out;
}

// ---------------------------------------------------------------- oracles

double oracle_td(const TopicIdLists& topics, std::size_t T) {
  std::set<TokenId> uniq;
  for (const auto& t : topics) uniq.insert(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(T));
  return static_cast<double>(uniq.size()) / static_cast<double>(topics.size() * T);
}

double oracle_tu(const TopicIdLists& topics, std::size_t T) {
  double total = 0.0;
  for (const auto& t : topics) {
    double s = 0.0;
    for (std::size_t i = 0; i < T; ++i) {
      int cnt = 0;
      for (const auto& u : topics) cnt += static_cast<int>(std::count(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(T), t[i]));
      s += 1.0 / cnt;
    }
    total += s / static_cast<double>(T);
  }
  return total / static_cast<double>(topics.size());
}

double oracle_cross_npmi(const std::vector<Document>& l1, const std::vector<Document>& l2, TokenId a, TokenId b) {
  double na = 0, nb = 0, nab = 0;
  for (std::size_t p = 0; p < l1.size(); ++p) {
    const bool ha = std::count(l1[p].token_ids.begin(), l1[p].token_ids.end(), a) > 0;
    const bool hb = std::count(l2[p].token_ids.begin(), l2[p].token_ids.end(), b) > 0;
    na += ha;
    nb += hb;
    nab += ha && hb;
  }
  const double N = static_cast<double>(l1.size()), eps = 1e-12;
  if (N == 0 || nab == 0) return -1.0;
  if (nab == N) return 1.0;
  const double pa = na > 0 ? na / N : eps, pb = nb > 0 ? nb / N : eps;
  return std::clamp(std::log((nab / N + eps) / (pa * pb)) / -std::log(nab / N + eps), -1.0, 1.0);
}

double oracle_cnpmi(const std::vector<Document>& l1, const std::vector<Document>& l2, const TopicIdLists& t1,
                    const TopicIdLists& t2) {
  double total = 0.0;
  for (std::size_t k = 0; k < t1.size(); ++k) {
    double s = 0.0;
    for (TokenId a : t1[k])
      for (TokenId b : t2[k]) s += oracle_cross_npmi(l1, l2, a, b);
    total += s / static_cast<double>(t1[k].size() * t2[k].size());
  }
  return total / static_cast<double>(t1.size());
}

ClusteringResult oracle_clustering(const std::vector<int>& c, const std::vector<int>& l) {
  const double N = static_cast<double>(c.size());
  std::map<int, double> pc, pl;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < c.size(); ++i) {
    pc[c[i]] += 1.0 / N;
    pl[l[i]] += 1.0 / N;
    joint[{c[i], l[i]}] += 1.0 / N;
  }
  double purity = 0.0;
  for (const auto& [ci, p] : pc) {
    double best = 0.0;
    for (const auto& [lj, q] : pl) best = std::max(best, joint.count({ci, lj}) ? joint[{ci, lj}] : 0.0);
    purity += best;
  }
  double hc = 0, hl = 0, mi = 0;
  for (const auto& [k, p] : pc) hc -= p * std::log(p);
  for (const auto& [k, p] : pl) hl -= p * std::log(p);
  for (const auto& [kl, p] : joint) mi += p * std::log(p / (pc[kl.first] * pl[kl.second]));
  return {purity, mi / (0.5 * (hc + hl))};
}

HierarchyResult oracle_hierarchy(const std::vector<TreeNodeInfo>& tree, const TopicIdLists& words,
                                 const std::vector<oracle::Unit>& units) {
  auto overlap = [&](std::size_t a, std::size_t b) {
    std::size_t s = 0;
    for (TokenId w : words[a]) s += static_cast<std::size_t>(std::count(words[b].begin(), words[b].end(), w));
    return static_cast<double>(s) / static_cast<double>(words[a].size());
  };
  double pcc = 0, pcd = 0, pncd = 0, sib = 0;
  int ne = 0, nn = 0, ns = 0;
  for (std::size_t p = 0; p < tree.size(); ++p)
    for (std::size_t c = 0; c < tree.size(); ++c) {
      if (tree[p].depth == 0 || p == c) continue;
      if (tree[c].parent == tree[p].id) {
        double s = 0;
        for (TokenId a : words[p])
          for (TokenId b : words[c]) s += oracle::npmi(units, a, b);
        pcc += s / static_cast<double>(words[p].size() * words[c].size());
        pcd += 1.0 - overlap(p, c);
        ++ne;
      } else if (tree[c].depth == tree[p].depth + 1) {
        pncd += 1.0 - overlap(p, c);
        ++nn;
      }
      if (p < c && tree[p].parent == tree[c].parent && tree[p].depth >= 2) {
        sib += 1.0 - overlap(p, c);
        ++ns;
      }
    }
  HierarchyResult r;
  if (ne) {
    r.pcc = pcc / ne;
    r.pcd = pcd / ne;
  }
  if (nn) r.pncd = pncd / nn;
  if (ns) r.sibling_d = sib / ns;
  return r;
}

// Random tree of depth <= 3 on n nodes; node i's parent is an earlier node.
std::vector<TreeNodeInfo> random_tree(Rng& rng, std::size_t n) {
  std::vector<TreeNodeInfo> tree{{0, std::nullopt, 0}};
  while (tree.size() < n) {
    const auto& p = tree[rng.uniform_index(tree.size())];
    if (p.depth >= 2) continue;
    tree.push_back({static_cast<int>(tree.size()), p.id, p.depth + 1});
  }
  return tree;
}

// ---------------------------------------------------------------- criteria

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  Checks c;
  Rng rng(20240601);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t D = 2 + rng.uniform_index(19), V = 12, T = 2 + rng.uniform_index(5), K = 2 + rng.uniform_index(4);
    const auto docs = random_docs(rng, D, V, 14);
    const auto topics = random_topics(rng, K, T, V + 2);  // ids V, V+1 never occur
    const auto units = oracle::doc_units(docs);
    const auto stats = CooccurrenceStats::from_documents(docs, V + 2);
    const std::string tag = " trial " + std::to_string(trial);
    c.near(topic_coherence(topics, stats).value, oracle::tc(units, topics), kOracleTol, "tc" + tag);
    const std::size_t w = 2 + rng.uniform_index(8);
    const auto wstats = CooccurrenceStats::from_windows(docs, V + 2, w);
    c.near(cv_coherence(topics, wstats).value, oracle::cv(oracle::window_units(docs, w), topics), kOracleTol, "cv" + tag);
    for (TokenId a = 0; a < V + 2; a += 3)
      for (TokenId b = 0; b < V + 2; b += 2) c.near(npmi_pair(stats, a, b), oracle::npmi(units, a, b), kOracleTol, "npmi" + tag);
    const std::size_t tt = 1 + rng.uniform_index(T);
    c.near(topic_diversity(topics, tt), oracle_td(topics, tt), kOracleTol, "td" + tag);
    c.near(topic_uniqueness(topics, tt), oracle_tu(topics, tt), kOracleTol, "tu" + tag);

    // cross-lingual: pair doc d with doc (d + 1) % D over a second vocabulary
    std::vector<Document> l2 = random_docs(rng, D, V, 14);
    std::vector<std::array<const Document*, 2>> pairs;
    for (std::size_t p = 0; p < D; ++p) pairs.push_back({&docs[p], &l2[p]});
    const auto pstats = PairedCooccurrenceStats::from_pairs(pairs, {V + 2, V + 2});
    const auto topics2 = random_topics(rng, K, T, V + 2);
    c.near(cnpmi(topics, topics2, pstats).value, oracle_cnpmi(docs, l2, topics, topics2), kOracleTol, "cnpmi" + tag);

    std::vector<int> clusters(D), labels(D);
    for (std::size_t i = 0; i < D; ++i) {
      clusters[i] = static_cast<int>(i < 2 ? i : rng.uniform_index(4));
      labels[i] = static_cast<int>(i < 2 ? 1 - i : rng.uniform_index(3));
    }
    const auto got = partition_agreement(clusters, labels);
    const auto want = oracle_clustering(clusters, labels);
    c.near(got.purity, want.purity, kOracleTol, "purity" + tag);
    c.near(got.nmi, want.nmi, kOracleTol, "nmi" + tag);

    const auto tree = random_tree(rng, 4 + rng.uniform_index(6));
    const auto node_words = random_topics(rng, tree.size(), T, V);
    const auto h = hierarchy_eval(tree, node_words, stats);
    const auto hw = oracle_hierarchy(tree, node_words, units);
    auto same = [&](const std::optional<double>& a, const std::optional<double>& b, const char* name) {
      c.expect(a.has_value() == b.has_value(), std::string(name) + " presence" + tag);
      if (a && b) c.near(*a, *b, kOracleTol, name + tag);
    };
    same(h.pcc, hw.pcc, "pcc");
    same(h.pcd, hw.pcd, "pcd");
    same(h.pncd, hw.pncd, "pncd");
    same(h.sibling_d, hw.sibling_d, "sibling");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < kOracleSeconds, "runtime " + fmt(secs, 2) + " s");
  return c.outcome("all metrics within " + fmt(kOracleTol, 9) + " in " + fmt(secs, 2) + " s");
}

// Best mean cosine over all one-to-one matchings (K is small enough to enumerate).
double matched_cosine(const Matrix& truth, const Matrix& learned) {
  std::vector<int> perm(static_cast<std::size_t>(truth.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  do {
    double s = 0.0;
    for (Eigen::Index k = 0; k < truth.rows(); ++k) s += cosine(truth.row(k), learned.row(perm[static_cast<std::size_t>(k)]));
    best = std::max(best, s / static_cast<double>(truth.rows()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Outcome lda_recovery() {
  SyntheticOptions o;
  o.kind = SyntheticKind::lda;
  o.num_docs = 500;
  o.vocab_size = 100;
  o.num_topics = 5;
  o.seed = 7;
  const auto data = generate_synthetic(o);
  const auto t0 = Clock::now();
  // priors match the generating concentrations
  const auto a = lda_train(data.corpus.train_docs, o.vocab_size, o.num_topics, o.doc_concentration,
                           o.topic_concentration, 500, 1);
  const double secs = seconds_since(t0);
  const double cos = matched_cosine(data.phi[0], a.phi[0]);
  Checks c;
  c.expect(cos >= kRecoveryCosine, "matched cosine " + fmt(cos));
  c.expect(secs < kRecoverySeconds, "runtime " + fmt(secs, 2) + " s");
  return c.outcome("matched cosine " + fmt(cos) + " in " + fmt(secs, 2) + " s");
}

void lda_token_conditional(Checks& c) {
  const auto docs = tf_test::docs({{0, 1, 1}, {0, 2}});
  const double alpha = 0.2, beta = 0.1;
  const std::size_t K = 3, V = 3;
  LdaState s = lda_init(docs, V, K, alpha, beta, 5);
  s.z = {{0, 1, 2}, {1, 1}};
  std::fill(s.doc_topic.begin(), s.doc_topic.end(), 0);
  std::fill(s.topic_word.begin(), s.topic_word.end(), 0);
  std::fill(s.topic_total.begin(), s.topic_total.end(), 0);
  for (std::size_t d = 0; d < 2; ++d)
    for (std::size_t n = 0; n < docs[d].token_ids.size(); ++n) {
      const auto k = s.z[d][n];
      ++s.doc_topic[d * K + k];
      ++s.topic_word[k * V + docs[d].token_ids[n]];
      ++s.topic_total[k];
    }
  // full conditional of token (0, 0) with it removed: n_dk {0,1,1}, n_kw {0,1,0}, n_k {0,3,1}
  const std::vector<double> ndk{0, 1, 1}, nkw{0, 1, 0}, nk{0, 3, 1};
  std::vector<double> p(K);
  for (std::size_t k = 0; k < K; ++k) p[k] = (ndk[k] + alpha) * (nkw[k] + beta) / (nk[k] + V * beta);
  const double Z = std::accumulate(p.begin(), p.end(), 0.0);
  std::vector<double> hist(K, 0.0);
  for (int i = 0; i < kGibbsSamples; ++i) {
    lda_resample_token(s, docs, 0, 0);
    hist[s.z[0][0]] += 1.0 / kGibbsSamples;
  }
  for (std::size_t k = 0; k < K; ++k) c.near(hist[k], p[k] / Z, kGibbsTol, "lda token topic " + std::to_string(k));
}

double lda_log_joint(const std::vector<Document>& docs, const std::vector<std::uint32_t>& z, std::size_t K,
                     std::size_t V, double alpha, double beta) {
  std::vector<std::vector<int>> ndk(docs.size(), std::vector<int>(K, 0)), nkw(K, std::vector<int>(V, 0));
  std::vector<int> nk(K, 0);
  std::size_t i = 0;
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (TokenId w : docs[d].token_ids) {
      const auto k = z[i++];
      ++ndk[d][k];
      ++nkw[k][w];
      ++nk[k];
    }
  double lp = 0.0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (std::size_t k = 0; k < K; ++k) lp += std::lgamma(ndk[d][k] + alpha);
    lp -= std::lgamma(static_cast<double>(docs[d].token_ids.size()) + static_cast<double>(K) * alpha);
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t w = 0; w < V; ++w) lp += std::lgamma(nkw[k][w] + beta);
    lp -= std::lgamma(nk[k] + static_cast<double>(V) * beta);
  }
  return lp;
}

void lda_joint_posterior(Checks& c) {
  const auto docs = tf_test::docs({{0, 1, 0}, {1, 2}});
  const std::size_t K = 2, V = 3, N = 5, S = 1u << N;
  const double alpha = 0.5, beta = 0.3;
  std::vector<double> exact(S);
  for (std::size_t code = 0; code < S; ++code) {
    std::vector<std::uint32_t> z(N);
    for (std::size_t i = 0; i < N; ++i) z[i] = static_cast<std::uint32_t>((code >> (N - 1 - i)) & 1u);
    exact[code] = std::exp(lda_log_joint(docs, z, K, V, alpha, beta));
  }
  const double total = std::accumulate(exact.begin(), exact.end(), 0.0);
  LdaState s = lda_init(docs, V, K, alpha, beta, 2024);
  for (int i = 0; i < 100; ++i) lda_gibbs_sweep(s, docs);
  std::vector<double> freq(S, 0.0);
  for (int i = 0; i < kGibbsSamples; ++i) {
    lda_gibbs_sweep(s, docs);
    std::size_t code = 0;
    for (const auto& zd : s.z)
      for (auto k : zd) code = code * K + k;
    freq[code] += 1.0 / kGibbsSamples;
  }
  for (std::size_t code = 0; code < S; ++code)
    c.near(freq[code], exact[code] / total, kGibbsTol, "lda joint state " + std::to_string(code));
}

double urn_log_predictive(std::vector<int> counts, int total, const std::vector<TokenId>& words, double beta) {
  const double vbeta = beta * static_cast<double>(counts.size());
  double lp = 0.0;
  for (TokenId w : words) {
    lp += std::log((counts[w] + beta) / (total + vbeta));
    ++counts[w];
    ++total;
  }
  return lp;
}

void hlda_path_conditional(Checks& c) {
  const auto docs = tf_test::docs({{0, 1, 1, 2}, {3, 4, 3}, {0, 4, 2}});
  const std::size_t V = 5, L = 3, d = 2;
  const double gamma = 0.7, beta = 0.2;
  HldaState s = hlda_init(docs, V, L, gamma, 1.0, beta, 8);
  for (int i = 0; i < 30; ++i) hlda_sweep(s, docs);
  if (s.path[0] == s.path[1]) {
    detail::hlda_detach_doc(s, docs, 1);
    const int child = s.tree.add_child(TopicTree::root());
    s.path[1] = {TopicTree::root(), child, s.tree.add_child(child)};
    detail::hlda_attach_doc(s, docs, 1);
  }
  HldaState ref = s;
  detail::hlda_detach_doc(ref, docs, d);
  std::vector<std::vector<TokenId>> level_words(L);
  for (std::size_t n = 0; n < docs[d].token_ids.size(); ++n) level_words[s.level[d][n]].push_back(docs[d].token_ids[n]);
  const std::vector<int> empty(V, 0);
  // key: leaf id for an existing path, -(1 + u) for a new branch below u
  std::map<int, double> exact;
  for (const auto& [id, node] : ref.tree.nodes()) {
    std::vector<int> chain;
    for (int u = id; u != -1; u = ref.tree.node(u).parent) chain.push_back(u);
    std::reverse(chain.begin(), chain.end());
    double lp = 0.0;
    for (std::size_t l = 0; l < chain.size(); ++l) {
      const auto& n = ref.tree.node(chain[l]);
      lp += urn_log_predictive(n.word_counts, n.total, level_words[l], beta);
      if (l > 0) lp += std::log(n.num_docs / (ref.tree.node(chain[l - 1]).num_docs + gamma));
    }
    if (chain.size() == L) {
      exact[id] = lp;
    } else {
      lp += std::log(gamma / (node.num_docs + gamma));
      for (std::size_t l = chain.size(); l < L; ++l) lp += urn_log_predictive(empty, 0, level_words[l], beta);
      exact[-(1 + id)] = lp;
    }
  }
  double mx = -1e300, z = 0.0;
  for (auto& [k, lp] : exact) mx = std::max(mx, lp);
  for (auto& [k, lp] : exact) z += (lp = std::exp(lp - mx));
  for (auto& [k, p] : exact) p /= z;

  const int first_new = s.tree.nodes().rbegin()->first + 1;
  std::map<int, double> freq;
  for (int i = 0; i < kGibbsSamples; ++i) {
    hlda_sample_path(s, docs, d);
    int key = s.path[d].back(), last_old = s.path[d][0];
    for (int id : s.path[d]) {
      if (id >= first_new) {
        key = -(1 + last_old);
        break;
      }
      last_old = id;
    }
    freq[key] += 1.0 / kGibbsSamples;
  }
  for (const auto& [k, f] : freq) c.expect(exact.count(k) > 0, "hlda path key " + std::to_string(k) + " not enumerated");
  for (const auto& [k, p] : exact) c.near(freq.count(k) ? freq[k] : 0.0, p, kGibbsTol, "hlda path " + std::to_string(k));
}

void hlda_level_conditional(Checks& c) {
  const auto docs = tf_test::docs({{0, 1, 1, 2}, {2, 3, 0}});
  const std::size_t V = 4, L = 3, d = 0, tok = 1;
  const double alpha = 0.6, beta = 0.15;
  HldaState s = hlda_init(docs, V, L, 1.0, alpha, beta, 3);
  for (int i = 0; i < 10; ++i) hlda_sweep(s, docs);
  const TokenId w = docs[d].token_ids[tok];
  HldaState ref = s;
  const auto cur = ref.level[d][tok];
  --ref.tree.node(ref.path[d][cur]).word_counts[w];
  --ref.tree.node(ref.path[d][cur]).total;
  --ref.doc_level[d][cur];
  std::vector<double> p(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& node = ref.tree.node(ref.path[d][l]);
    p[l] = (ref.doc_level[d][l] + alpha) * (node.word_counts[w] + beta) / (node.total + static_cast<double>(V) * beta);
  }
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  std::vector<double> hist(L, 0.0), weights;
  for (int i = 0; i < kGibbsSamples; ++i) {
    hlda_resample_level(s, docs, d, tok, weights);
    hist[s.level[d][tok]] += 1.0 / kGibbsSamples;
  }
  for (std::size_t l = 0; l < L; ++l) c.near(hist[l], p[l] / z, kGibbsTol, "hlda level " + std::to_string(l));
}

Outcome gibbs_correctness() {
  Checks c;
  lda_token_conditional(c);
  lda_joint_posterior(c);
  hlda_path_conditional(c);
  hlda_level_conditional(c);
  return c.outcome("LDA token/joint and hLDA path/level within " + fmt(kGibbsTol, 2) + " over " +
                   std::to_string(kGibbsSamples) + " resamples");
}

Outcome nmf_checks() {
  Checks c;
  Rng rng(99);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t D = 5 + rng.uniform_index(20), V = 5 + rng.uniform_index(30), K = 1 + rng.uniform_index(6);
    const auto docs = random_docs(rng, D, V, 30);
    const auto r = nmf_factorize(count_matrix(docs, V), K, 200, static_cast<std::uint64_t>(inst));
    const auto& tr = r.state.objective_trace;
    for (std::size_t i = 1; i < tr.size(); ++i) {
      worst = std::max(worst, tr[i] - tr[i - 1]);
      c.expect(tr[i] <= tr[i - 1] + kNmfSlack * std::max(1.0, tr[i - 1]),
               "instance " + std::to_string(inst) + " step " + std::to_string(i) + " rose by " + std::to_string(tr[i] - tr[i - 1]));
    }
  }
  // X = u v^T with positive integer entries
  std::vector<Document> docs;
  const std::vector<int> u{1, 2, 3, 1, 4}, v{2, 1, 3, 1, 1, 2};
  for (int a : u) {
    Document d;
    for (std::size_t w = 0; w < v.size(); ++w)
      for (int n = 0; n < a * v[w]; ++n) d.token_ids.push_back(static_cast<TokenId>(w));
    docs.push_back(d);
  }
  const SparseMatrix X = count_matrix(docs, v.size());
  const auto r = nmf_factorize(X, 1, 500, 3);
  const double rel = std::sqrt(nmf_objective(X, r.state.W, r.state.H)) / Matrix(X).norm();
  c.expect(rel < kRank1Residual, "rank-1 relative residual " + std::to_string(rel));
  std::ostringstream ss;
  ss << "max step increase " << worst << ", rank-1 relative residual " << rel;
  return c.outcome(ss.str());
}

Outcome dynamic_model() {
  Checks c;
  SyntheticOptions o;
  o.kind = SyntheticKind::dtm;
  o.num_docs = 300;
  o.vocab_size = 60;
  o.num_topics = 4;
  o.num_slices = 3;
  o.seed = 4;
  const auto data = generate_synthetic(o);
  const auto& docs = data.corpus.train_docs;
  const double alpha = o.doc_concentration, beta = 0.01, kappa = 100.0;
  const auto r = dtm_train(docs, o.vocab_size, o.num_slices, o.num_topics, alpha, beta, kappa, 200, 11);
  const auto& phis = r.artifact.phi_slices;
  double min_margin = 1e300;
  for (std::size_t t = 0; t + 1 < phis.size(); ++t)
    for (Eigen::Index k = 0; k < phis[t].rows(); ++k) {
      const double same = cosine(phis[t].row(k), phis[t + 1].row(k));
      double cross = 0.0;
      for (Eigen::Index j = 0; j < phis[t].rows(); ++j)
        if (j != k) cross += cosine(phis[t].row(k), phis[t + 1].row(j));
      cross /= static_cast<double>(phis[t].rows() - 1);
      min_margin = std::min(min_margin, same - cross);
      c.expect(same > cross, "slice " + std::to_string(t) + " topic " + std::to_string(k) + ": same " + fmt(same) +
                                 " <= cross mean " + fmt(cross));
    }
  const auto flat = dtm_train(docs, o.vocab_size, o.num_slices, o.num_topics, alpha, beta, 0.0, 20, 11);
  for (std::size_t t = 0; t < flat.state.eta.size(); ++t) {
    c.expect((flat.state.eta[t].array() == beta).all(), "kappa=0 eta not flat at slice " + std::to_string(t));
    c.expect(!flat.state.slices[t].has_table_prior(), "kappa=0 slice " + std::to_string(t) + " has a table prior");
  }
  // with flat priors each slice is a plain LDA run with that slice's seed
  for (std::size_t t = 0; t < o.num_slices; ++t) {
    std::vector<Document> slice;
    for (auto i : flat.state.slice_docs[t]) slice.push_back(docs[i]);
    const auto lda = lda_train(slice, o.vocab_size, o.num_topics, alpha, beta, 20, dtm_slice_seed(11, t));
    c.expect(lda.phi[0] == flat.artifact.phi_slices[t], "kappa=0 slice " + std::to_string(t) + " differs from LDA");
  }
  return c.outcome("min same-minus-cross cosine margin " + fmt(min_margin) + "; kappa=0 flat and equal to per-slice LDA");
}

Outcome pltm_alignment() {
  Checks c;
  SyntheticOptions o;
  o.kind = SyntheticKind::pltm;
  o.num_docs = 500;
  o.vocab_size = 200;
  o.num_topics = 5;
  o.seed = 8;
  const auto data = generate_synthetic(o);
  const auto a = pltm_train(data.corpus, o.num_topics, o.doc_concentration, o.topic_concentration, 300, 2);
  // map Chinese columns back to their English word before comparing
  Matrix zh_in_en(a.phi[1].rows(), a.phi[1].cols());
  for (std::size_t w = 0; w < o.vocab_size; ++w)
    zh_in_en.col(static_cast<Eigen::Index>(w)) = a.phi[1].col(static_cast<Eigen::Index>(data.translation[w]));
  double cos = 0.0;
  for (Eigen::Index k = 0; k < a.phi[0].rows(); ++k) cos += cosine(a.phi[0].row(k), zh_in_en.row(k));
  cos /= static_cast<double>(a.phi[0].rows());
  c.expect(cos >= kPltmCosine, "matched cross-language cosine " + fmt(cos));

  std::vector<Document> en, zh;
  for (const auto& d : data.corpus.test_docs) (d.language == "en" ? en : zh).push_back(d);
  std::vector<std::array<const Document*, 2>> pairs;
  for (std::size_t p = 0; p < en.size(); ++p) pairs.push_back({&en[p], &zh[p]});
  const auto ref = PairedCooccurrenceStats::from_pairs(pairs, {o.vocab_size, o.vocab_size});
  const auto t_en = top_id_lists(a.phi[0], data.corpus.vocabularies[0], 10);
  const auto t_zh = top_id_lists(a.phi[1], data.corpus.vocabularies[1], 10);
  const double trained = cnpmi(t_en, t_zh, ref).value;
  std::vector<std::size_t> perm(t_zh.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(17);
  auto deranged = [&] {
    for (std::size_t i = 0; i < perm.size(); ++i)
      if (perm[i] == i) return false;
    return true;
  };
  do rng.shuffle(perm);
  while (!deranged());
  TopicIdLists shuffled;
  for (auto i : perm) shuffled.push_back(t_zh[i]);
  const double random = cnpmi(t_en, shuffled, ref).value;
  c.expect(trained > random, "cnpmi trained " + fmt(trained) + " <= permuted " + fmt(random));
  return c.outcome("cross-language cosine " + fmt(cos) + ", cnpmi " + fmt(trained) + " vs permuted " + fmt(random));
}

void expect_stochastic(Checks& c, const Matrix& m, const std::string& what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    c.expect(std::abs(m.row(r).sum() - 1.0) <= kStochasticTol, what + " row " + std::to_string(r) + " sum");
    c.expect(m.row(r).minCoeff() >= 0.0, what + " row " + std::to_string(r) + " negative");
  }
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome invariants() {
  Checks c;
  struct Case {
    SyntheticKind data;
    ModelKind model;
  };
  for (const auto& k : {Case{SyntheticKind::lda, ModelKind::lda}, Case{SyntheticKind::lda, ModelKind::nmf},
                        Case{SyntheticKind::tree, ModelKind::hlda}, Case{SyntheticKind::dtm, ModelKind::dtm},
                        Case{SyntheticKind::pltm, ModelKind::pltm}}) {
    SyntheticOptions o;
    o.kind = k.data;
    o.num_docs = 80;
    o.vocab_size = 40;
    o.num_topics = 3;
    o.min_length = 10;
    o.max_length = 30;
    const auto data = generate_synthetic(o);
    RunConfig cfg;
    cfg.model_kind = k.model;
    cfg.num_topics = 3;
    cfg.iterations = 30;
    cfg.infer_sweeps = 20;
    cfg.seed = 5;
    const std::string name = to_string(k.model);
    const auto a = train_model(data.corpus, cfg);
    const auto b = train_model(data.corpus, cfg);
    c.expect(a == b, name + ": same seed gave different artifacts");
    c.expect(artifact_to_json(a) == artifact_to_json(b), name + ": same seed gave different JSON");
    expect_stochastic(c, a.theta_train, name + " theta_train");
    for (const auto& phi : a.phi) expect_stochastic(c, phi, name + " phi");
    for (const auto& phi : a.phi_slices) expect_stochastic(c, phi, name + " phi_slices");
    expect_stochastic(c, export_theta(a, data.corpus).test, name + " theta_test");
    if (k.model == ModelKind::hlda) {
      std::set<int> ids;
      int roots = 0;
      for (const auto& n : a.tree) ids.insert(n.id);
      c.expect(ids.size() == a.tree.size(), "hlda duplicate node ids");
      for (const auto& n : a.tree) {
        if (!n.parent) {
          ++roots;
          c.expect(n.depth == 0, "hlda root depth");
          continue;
        }
        const auto p = std::find_if(a.tree.begin(), a.tree.end(), [&](const TreeNodeInfo& x) { return x.id == *n.parent; });
        c.expect(p != a.tree.end(), "hlda parent missing for node " + std::to_string(n.id));
        if (p != a.tree.end()) c.expect(n.depth == p->depth + 1, "hlda depth of node " + std::to_string(n.id));
      }
      c.expect(roots == 1, "hlda root count");
    }
  }

  // count conservation through sampler sweeps
  SyntheticOptions o;
  o.num_docs = 40;
  o.vocab_size = 30;
  o.num_topics = 3;
  o.min_length = 5;
  o.max_length = 15;
  const auto flat = generate_synthetic(o);
  const auto& docs = flat.corpus.train_docs;
  std::size_t tokens = 0;
  for (const auto& d : docs) tokens += d.token_ids.size();
  LdaState lda = lda_init(docs, 30, 3, 0.1, 0.01, 1);
  HldaState hlda = hlda_init(docs, 30, 3, 1.0, 1.0, 0.1, 1);
  o.kind = SyntheticKind::pltm;
  const auto pair_data = generate_synthetic(o);
  PltmState pltm = pltm_init(pair_data.corpus, 3, 0.1, 0.01, 1);
  std::size_t pair_tokens = 0;
  for (const auto& d : pair_data.corpus.train_docs) pair_tokens += d.token_ids.size();
  for (int sweep = 0; sweep < 10; ++sweep) {
    lda_gibbs_sweep(lda, docs);
    hlda_sweep(hlda, docs);
    pltm_sweep(pltm);
    const std::string tag = " after sweep " + std::to_string(sweep);
    std::vector<int> dk(lda.doc_topic.size(), 0), kw(lda.topic_word.size(), 0), kt(3, 0);
    for (std::size_t d = 0; d < docs.size(); ++d)
      for (std::size_t n = 0; n < docs[d].token_ids.size(); ++n) {
        const auto k = lda.z[d][n];
        ++dk[d * 3 + k];
        ++kw[k * 30 + docs[d].token_ids[n]];
        ++kt[k];
      }
    c.expect(dk == lda.doc_topic && kw == lda.topic_word && kt == lda.topic_total, "lda counts" + tag);
    c.expect(static_cast<std::size_t>(std::accumulate(kt.begin(), kt.end(), 0)) == tokens, "lda token total" + tag);
    long node_tokens = 0;
    for (const auto& [id, n] : hlda.tree.nodes()) {
      node_tokens += n.total;
      c.expect(n.total == std::accumulate(n.word_counts.begin(), n.word_counts.end(), 0), "hlda node total" + tag);
    }
    c.expect(static_cast<std::size_t>(node_tokens) == tokens, "hlda token total" + tag);
    c.expect(hlda.tree.node(TopicTree::root()).num_docs == static_cast<int>(docs.size()), "hlda root docs" + tag);
    c.expect(static_cast<std::size_t>(std::accumulate(pltm.pair_topic.begin(), pltm.pair_topic.end(), 0)) == pair_tokens,
             "pltm token total" + tag);
  }

  // dataset round trip
  tf_test::TempDir tmp;
  save_dataset(pair_data.corpus, tmp / "a");
  const Corpus back = load_dataset(tmp / "a");
  save_dataset(back, tmp / "b");
  for (const char* f : {"meta.json", "train.jsonl", "test.jsonl", "vocab.en.txt", "vocab.zh.txt", "train.bow.txt"})
    c.expect(slurp(tmp / "a" / f) == slurp(tmp / "b" / f), std::string("dataset round trip changed ") + f);
  c.expect(back.train_docs.size() == pair_data.corpus.train_docs.size(), "dataset round trip doc count");
  for (std::size_t d = 0; d < back.train_docs.size() && d < pair_data.corpus.train_docs.size(); ++d)
    c.expect(back.train_docs[d].token_ids == pair_data.corpus.train_docs[d].token_ids &&
                 back.train_docs[d].pair_id == pair_data.corpus.train_docs[d].pair_id,
             "dataset round trip doc " + std::to_string(d));
  return c.outcome("counts, stochasticity, tree shape, determinism and round trip hold");
}

Outcome newsgroups() {
  const char* path = std::getenv("TOPICFORGE_20NG_JSONL");
  if (!path || !*path) return {Status::skip, "set TOPICFORGE_20NG_JSONL to a local 20 Newsgroups JSONL export"};
  tf_test::TempDir tmp;
  std::ostringstream out, err;
  const int code = run_cli({"preprocess", "--input", path, "--output", (tmp / "20ng").string()}, out, err);
  if (code != 0) return {Status::fail, "preprocess exited " + std::to_string(code) + ": " + err.str()};
  const Corpus corpus = load_dataset(tmp / "20ng");
  const std::size_t docs = corpus.train_docs.size() + corpus.test_docs.size();
  const std::size_t vocab = corpus.vocabulary().size();
  Checks c;
  c.expect(docs == k20ngDocs, "documents " + std::to_string(docs));
  c.expect(vocab == k20ngVocab, "vocabulary " + std::to_string(vocab));
  return c.outcome(std::to_string(docs) + " documents, |V| = " + std::to_string(vocab));
}

Outcome serving() {
  Checks c;
  tf_test::TempDir tmp;
  SyntheticOptions o;
  o.num_docs = 100;
  o.vocab_size = 50;
  o.num_topics = 4;
  const auto data = generate_synthetic(o);
  RunConfig cfg;
  cfg.model_kind = ModelKind::lda;
  cfg.num_topics = 4;
  cfg.iterations = 50;
  cfg.output_path = (tmp / "model").string();
  train(data.corpus, cfg);
  const TopicService service(load_model(tmp / "model"));
  const auto& vocab = service.model().vocabularies[0];

  Rng rng(3);
  for (int q = 0; q < 20; ++q) {
    std::string text;
    const std::size_t len = 1 + rng.uniform_index(20);
    for (std::size_t n = 0; n < len; ++n) text += vocab.token(static_cast<TokenId>(rng.uniform_index(50))) + " ";
    const std::string body = json{{"text", text}}.dump();
    const auto r1 = service.infer(body);
    const auto r2 = service.infer(body);
    c.expect(r1.status == 200, "infer status " + std::to_string(r1.status));
    if (r1.status != 200) continue;
    double sum = 0.0;
    for (double p : r1.body["theta"]) sum += p;
    c.near(sum, 1.0, kThetaSumTol, "theta sum for query " + std::to_string(q));
    c.expect(r1.body["theta"] == r2.body["theta"], "query " + std::to_string(q) + " not repeatable");
  }

  const Matrix& phi = service.model().artifact.phi[0];
  const auto topics = service.topics(std::string("10"));
  c.expect(topics.status == 200, "topics status");
  for (Eigen::Index k = 0; k < phi.rows() && topics.status == 200; ++k) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(phi.cols()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
      return phi(k, static_cast<Eigen::Index>(x)) > phi(k, static_cast<Eigen::Index>(y));
    });
    const auto& words = topics.body["topics"][static_cast<std::size_t>(k)]["words"];
    c.expect(words.size() == 10, "topic " + std::to_string(k) + " word count");
    for (std::size_t i = 0; i < 10 && i < words.size(); ++i) {
      c.expect(words[i]["w"] == vocab.token(static_cast<TokenId>(idx[i])), "topic " + std::to_string(k) + " word " + std::to_string(i));
      c.expect(words[i]["p"].get<double>() == phi(k, static_cast<Eigen::Index>(idx[i])), "topic " + std::to_string(k) + " weight " + std::to_string(i));
    }
  }
  return c.outcome("theta sums within " + fmt(kThetaSumTol, 6) + ", repeatable, topics match sorted phi");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric-oracles", metric_oracles},   {"lda-recovery", lda_recovery}, {"gibbs-correctness", gibbs_correctness},
      {"nmf", nmf_checks},                  {"dynamic-model", dynamic_model}, {"pltm", pltm_alignment},
      {"invariants", invariants},           {"20ng-preprocessing", newsgroups}, {"serving", serving}};
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    if (o.status == Status::fail) ++failures;
    std::cout << tag << " " << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

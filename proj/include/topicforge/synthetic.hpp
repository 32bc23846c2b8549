#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/dataset.hpp"
#include "topicforge/error.hpp"
#include "topicforge/json_io.hpp"
#include "topicforge/random.hpp"

namespace topicforge {

enum class SyntheticKind { lda, dtm, pltm, tree };

inline std::string to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::lda: return "lda";
    case SyntheticKind::dtm: return "dtm";
    case SyntheticKind::pltm: return "pltm";
    case SyntheticKind::tree: return "tree";
  }
  return "?";
}

inline SyntheticKind parse_synthetic_kind(const std::string& s) {
  for (auto k : {SyntheticKind::lda, SyntheticKind::dtm, SyntheticKind::pltm, SyntheticKind::tree})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown synthetic kind '" + s + "' (expected lda, dtm, pltm or tree)");
}

struct SyntheticOptions {
  SyntheticKind kind = SyntheticKind::lda;
  std::size_t num_docs = 500;   // training documents (pairs for pltm)
  std::size_t vocab_size = 100;
  std::size_t num_topics = 5;   // depth-1 branches for tree
  std::uint64_t seed = 1;
  std::size_t num_slices = 3;
  double topic_concentration = 0.05;
  double doc_concentration = 0.5;
  std::size_t min_length = 50;
  std::size_t max_length = 150;
  double test_fraction = 0.2;
};

/// Sampled corpus plus the parameters it was drawn from. For trees, rows of
/// `phi[0]` follow `tree`; for dynamic corpora `phi_slices` holds phi_t.
struct SyntheticDataset {
  Corpus corpus;
  SyntheticOptions options;
  std::vector<Matrix> phi;
  std::vector<Matrix> phi_slices;
  Matrix theta_train;
  Matrix theta_test;
  std::vector<TreeNodeInfo> tree;
  std::vector<std::vector<int>> train_paths;
  std::vector<std::size_t> translation;  // en word i <-> zh word translation[i]

  json ground_truth() const;
};

namespace detail {

inline std::string synthetic_token(const std::string& prefix, std::size_t i, std::size_t V) {
  const int width = V <= 1 ? 1 : static_cast<int>(std::to_string(V - 1).size());
  std::string digits = std::to_string(i);
  if (digits.size() < static_cast<std::size_t>(std::max(width, 3)))
    digits.insert(0, static_cast<std::size_t>(std::max(width, 3)) - digits.size(), '0');
  return prefix + digits;
}

inline Vocabulary synthetic_vocabulary(const std::string& prefix, std::size_t V, const std::string& lang) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < V; ++i) tokens.push_back(synthetic_token(prefix, i, V));
  return Vocabulary(tokens, {}, lang);
}

inline Matrix dirichlet_rows(Rng& rng, std::size_t rows, std::size_t dim, double concentration) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto v = rng.dirichlet(dim, concentration);
    for (std::size_t c = 0; c < dim; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
  }
  return m;
}

inline std::size_t sample_length(Rng& rng, const SyntheticOptions& o) {
  return o.min_length + rng.uniform_index(o.max_length - o.min_length + 1);
}

/// Draws tokens z ~ theta, w ~ phi[z].
inline std::vector<TokenId> sample_tokens(Rng& rng, const std::vector<double>& theta, const Matrix& phi,
                                          std::size_t length) {
  std::vector<std::vector<double>> cumulative(static_cast<std::size_t>(phi.rows()));
  for (Eigen::Index k = 0; k < phi.rows(); ++k) {
    auto& c = cumulative[static_cast<std::size_t>(k)];
    c.resize(static_cast<std::size_t>(phi.cols()));
    double run = 0.0;
    for (Eigen::Index w = 0; w < phi.cols(); ++w) c[static_cast<std::size_t>(w)] = run += phi(k, w);
  }
  std::vector<TokenId> ids(length);
  for (auto& w : ids) w = static_cast<TokenId>(rng.categorical_cumulative(cumulative[rng.categorical(theta)]));
  return ids;
}

inline int argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

inline PreprocessConfig synthetic_preprocess(std::size_t V) {
  PreprocessConfig cfg;
  cfg.max_vocab = V;
  cfg.min_token_len = 1;
  cfg.min_doc_freq = 1;
  cfg.max_doc_freq_ratio = 1.0;
  cfg.stopwords.clear();
  cfg.lowercase = false;
  cfg.pretokenized = true;
  return cfg;
}

inline std::size_t test_count(const SyntheticOptions& o) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(o.num_docs) * o.test_fraction)));
}

inline void store_theta(Matrix& m, std::size_t row, const std::vector<double>& theta) {
  for (std::size_t k = 0; k < theta.size(); ++k)
    m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(k)) = theta[k];
}

inline void generate_flat(SyntheticDataset& out, Rng& rng) {
  const auto& o = out.options;
  out.corpus.vocabularies = {synthetic_vocabulary("w", o.vocab_size, "en")};
  out.phi = {dirichlet_rows(rng, o.num_topics, o.vocab_size, o.topic_concentration)};
  const std::size_t n_test = test_count(o);
  out.theta_train.resize(static_cast<Eigen::Index>(o.num_docs), static_cast<Eigen::Index>(o.num_topics));
  out.theta_test.resize(static_cast<Eigen::Index>(n_test), static_cast<Eigen::Index>(o.num_topics));
  for (std::size_t d = 0; d < o.num_docs + n_test; ++d) {
    const auto theta = rng.dirichlet(o.num_topics, o.doc_concentration);
    Document doc;
    doc.token_ids = sample_tokens(rng, theta, out.phi[0], sample_length(rng, o));
    doc.label = argmax(theta);
    if (d < o.num_docs) {
      store_theta(out.theta_train, d, theta);
      out.corpus.train_docs.push_back(std::move(doc));
    } else {
      store_theta(out.theta_test, d - o.num_docs, theta);
      out.corpus.test_docs.push_back(std::move(doc));
    }
  }
}

/// Topic k at slice t is a Gaussian bump over word positions centred at
/// (k + 0.5) V / K, moving right by a quarter of the topic spacing per slice.
inline Matrix drifting_topics(std::size_t K, std::size_t V, std::size_t t) {
  Matrix phi(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(V));
  const double spacing = static_cast<double>(V) / static_cast<double>(K);
  const double width = spacing / 4.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double centre = (static_cast<double>(k) + 0.5) * spacing + 0.25 * spacing * static_cast<double>(t);
    double total = 0.0;
    for (std::size_t w = 0; w < V; ++w) {
      double dist = std::fabs(static_cast<double>(w) - centre);
      dist = std::min(dist, static_cast<double>(V) - dist);
      const double v = std::exp(-0.5 * dist * dist / (width * width)) + 1e-4;
      phi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(w)) = v;
      total += v;
    }
    phi.row(static_cast<Eigen::Index>(k)) /= total;
  }
  return phi;
}

inline void generate_dynamic(SyntheticDataset& out, Rng& rng) {
  const auto& o = out.options;
  if (o.num_slices < 1) throw InvalidArgument("synthetic: num_slices must be >= 1");
  if (o.num_docs < o.num_slices) throw InvalidArgument("synthetic: need at least one document per slice");
  out.corpus.vocabularies = {synthetic_vocabulary("w", o.vocab_size, "en")};
  out.corpus.num_slices = static_cast<int>(o.num_slices);
  for (std::size_t t = 0; t < o.num_slices; ++t) out.phi_slices.push_back(drifting_topics(o.num_topics, o.vocab_size, t));
  const std::size_t n_test = test_count(o);
  out.theta_train.resize(static_cast<Eigen::Index>(o.num_docs), static_cast<Eigen::Index>(o.num_topics));
  out.theta_test.resize(static_cast<Eigen::Index>(n_test), static_cast<Eigen::Index>(o.num_topics));
  for (std::size_t d = 0; d < o.num_docs + n_test; ++d) {
    const bool train = d < o.num_docs;
    const std::size_t local = train ? d : d - o.num_docs;
    const std::size_t count = train ? o.num_docs : n_test;
    const std::size_t t = local * o.num_slices / count;
    const auto theta = rng.dirichlet(o.num_topics, o.doc_concentration);
    Document doc;
    doc.token_ids = sample_tokens(rng, theta, out.phi_slices[t], sample_length(rng, o));
    doc.label = argmax(theta);
    doc.time_slice = static_cast<int>(t);
    if (train) {
      store_theta(out.theta_train, local, theta);
      out.corpus.train_docs.push_back(std::move(doc));
    } else {
      store_theta(out.theta_test, local, theta);
      out.corpus.test_docs.push_back(std::move(doc));
    }
  }
}

/// English word i translates to Chinese word translation[i]; topic mass is
/// carried over unchanged, and both documents of a pair share theta.
inline void generate_pairs(SyntheticDataset& out, Rng& rng) {
  const auto& o = out.options;
  const std::size_t V = o.vocab_size;
  out.corpus.vocabularies = {synthetic_vocabulary("en_w", V, "en"), synthetic_vocabulary("zh_w", V, "zh")};
  out.translation.resize(V);
  for (std::size_t i = 0; i < V; ++i) out.translation[i] = i;
  rng.shuffle(out.translation);
  Matrix en = dirichlet_rows(rng, o.num_topics, V, o.topic_concentration);
  Matrix zh(en.rows(), en.cols());
  for (std::size_t w = 0; w < V; ++w) zh.col(static_cast<Eigen::Index>(out.translation[w])) = en.col(static_cast<Eigen::Index>(w));
  out.phi = {en, zh};
  const std::size_t n_test = test_count(o);
  out.theta_train.resize(static_cast<Eigen::Index>(o.num_docs), static_cast<Eigen::Index>(o.num_topics));
  out.theta_test.resize(static_cast<Eigen::Index>(n_test), static_cast<Eigen::Index>(o.num_topics));
  for (std::size_t p = 0; p < o.num_docs + n_test; ++p) {
    const bool train = p < o.num_docs;
    const auto theta = rng.dirichlet(o.num_topics, o.doc_concentration);
    for (std::size_t l = 0; l < 2; ++l) {
      Document doc;
      doc.token_ids = sample_tokens(rng, theta, out.phi[l], sample_length(rng, o));
      doc.label = argmax(theta);
      doc.language = l == 0 ? "en" : "zh";
      doc.pair_id = static_cast<int>(p);
      (train ? out.corpus.train_docs : out.corpus.test_docs).push_back(std::move(doc));
    }
    store_theta(train ? out.theta_train : out.theta_test, train ? p : p - o.num_docs, theta);
  }
}

/// Depth-3 tree: a root topic over a shared block of words, K branch topics
/// each owning a block, and two leaves per branch splitting that block.
/// Documents pick a leaf uniformly and mix the three path topics.
inline void generate_tree(SyntheticDataset& out, Rng& rng) {
  const auto& o = out.options;
  const std::size_t K = o.num_topics;
  const std::size_t V = o.vocab_size;
  const std::size_t shared = std::max<std::size_t>(2, V / 10);
  if (V < shared + 4 * K) throw InvalidArgument("synthetic tree: vocabulary too small for the branch count");
  const std::size_t block = (V - shared) / K;
  out.corpus.vocabularies = {synthetic_vocabulary("w", V, "en")};

  auto block_topic = [&](std::size_t begin, std::size_t len) {
    std::vector<double> row(V, 0.0);
    const auto v = rng.dirichlet(len, 1.0);
    for (std::size_t i = 0; i < len; ++i) row[begin + i] = v[i];
    return row;
  };
  std::vector<std::vector<double>> rows;
  out.tree.push_back({0, std::nullopt, 0});
  rows.push_back(block_topic(0, shared));
  std::vector<int> leaves;
  for (std::size_t b = 0; b < K; ++b) {
    const std::size_t begin = shared + b * block;
    const int branch = static_cast<int>(out.tree.size());
    out.tree.push_back({branch, 0, 1});
    rows.push_back(block_topic(begin, block));
    for (std::size_t c = 0; c < 2; ++c) {
      const int leaf = static_cast<int>(out.tree.size());
      out.tree.push_back({leaf, branch, 2});
      const std::size_t half = block / 2;
      rows.push_back(block_topic(begin + c * half, c == 0 ? half : block - half));
      leaves.push_back(leaf);
    }
  }
  Matrix phi(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(V));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t w = 0; w < V; ++w) phi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w)) = rows[r][w];
  out.phi = {phi};

  const std::size_t n_test = test_count(o);
  out.theta_train = Matrix::Zero(static_cast<Eigen::Index>(o.num_docs), phi.rows());
  out.theta_test = Matrix::Zero(static_cast<Eigen::Index>(n_test), phi.rows());
  for (std::size_t d = 0; d < o.num_docs + n_test; ++d) {
    const bool train = d < o.num_docs;
    const int leaf = leaves[rng.uniform_index(leaves.size())];
    const int branch = *out.tree[static_cast<std::size_t>(leaf)].parent;
    const std::vector<int> path{0, branch, leaf};
    const auto levels = rng.dirichlet(3, 1.0);
    Matrix path_phi(3, static_cast<Eigen::Index>(V));
    for (Eigen::Index l = 0; l < 3; ++l) path_phi.row(l) = phi.row(path[static_cast<std::size_t>(l)]);
    Document doc;
    doc.token_ids = sample_tokens(rng, levels, path_phi, sample_length(rng, o));
    doc.label = (branch - 1) / 3;
    Matrix& theta = train ? out.theta_train : out.theta_test;
    const auto row = static_cast<Eigen::Index>(train ? d : d - o.num_docs);
    for (std::size_t l = 0; l < 3; ++l) theta(row, path[l]) = levels[l];
    if (train) out.train_paths.push_back(path);
    (train ? out.corpus.train_docs : out.corpus.test_docs).push_back(std::move(doc));
  }
}

}  // namespace detail

/// Samples a corpus from the named generative process. Labels are the
/// dominant topic (the branch for trees). A fifth as many test documents as
/// training documents are drawn from the same process.
inline SyntheticDataset generate_synthetic(const SyntheticOptions& options) {
  if (options.num_docs < 1 || options.vocab_size < 2 || options.num_topics < 1)
    throw InvalidArgument("synthetic: docs, vocab and k must be positive (vocab >= 2)");
  if (options.min_length < 1 || options.max_length < options.min_length)
    throw InvalidArgument("synthetic: invalid document length range");
  SyntheticDataset out;
  out.options = options;
  Rng rng(options.seed);
  switch (options.kind) {
    case SyntheticKind::lda: detail::generate_flat(out, rng); break;
    case SyntheticKind::dtm: detail::generate_dynamic(out, rng); break;
    case SyntheticKind::pltm: detail::generate_pairs(out, rng); break;
    case SyntheticKind::tree: detail::generate_tree(out, rng); break;
  }
  out.corpus.preprocess = detail::synthetic_preprocess(options.vocab_size);
  recompute_doc_freq(out.corpus);
  return out;
}

inline json SyntheticDataset::ground_truth() const {
  json j;
  j["kind"] = to_string(options.kind);
  j["seed"] = options.seed;
  j["num_docs"] = options.num_docs;
  j["vocab_size"] = options.vocab_size;
  j["k"] = options.num_topics;
  j["theta_train"] = detail::matrix_to_json(theta_train);
  j["theta_test"] = detail::matrix_to_json(theta_test);
  switch (options.kind) {
    case SyntheticKind::lda: j["phi"] = detail::matrix_to_json(phi.at(0)); break;
    case SyntheticKind::dtm: {
      json slices = json::array();
      for (const auto& m : phi_slices) slices.push_back(detail::matrix_to_json(m));
      j["phi_slices"] = std::move(slices);
      j["num_slices"] = phi_slices.size();
      break;
    }
    case SyntheticKind::pltm:
      j["phi"] = {{"en", detail::matrix_to_json(phi.at(0))}, {"zh", detail::matrix_to_json(phi.at(1))}};
      j["translation"] = translation;
      break;
    case SyntheticKind::tree: {
      json nodes = json::array();
      for (const auto& n : tree)
        nodes.push_back({{"id", n.id}, {"parent", n.parent ? json(*n.parent) : json(nullptr)}, {"depth", n.depth}});
      j["tree"] = {{"nodes", std::move(nodes)}};
      j["phi"] = detail::matrix_to_json(phi.at(0));
      j["train_paths"] = train_paths;
      break;
    }
  }
  return j;
}

/// Writes the dataset directory plus `ground-truth.json`.
inline void write_synthetic(const SyntheticDataset& s, const std::filesystem::path& dir) {
  save_dataset(s.corpus, dir);
  write_file((dir / "ground-truth.json").string(), dump_json(s.ground_truth()));
}

}  // namespace topicforge

#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "test_support.hpp"
#include "topicforge/models/pltm.hpp"
#include "topicforge/synthetic.hpp"

using namespace topicforge;

namespace {

Corpus pair_corpus() {
  Corpus c;
  c.vocabularies = {Vocabulary({"orbit", "launch", "goal"}, {}, "en"), Vocabulary({"轨道", "发射", "进球", "球迷"}, {}, "zh")};
  auto add = [&](int pair, const std::string& lang, std::vector<TokenId> ids) {
    Document d = tf_test::doc(std::move(ids));
    d.pair_id = pair;
    d.language = lang;
    c.train_docs.push_back(d);
  };
  add(3, "zh", {0, 1, 1});
  add(3, "en", {0, 1});
  add(1, "en", {2, 2, 2});
  add(1, "zh", {2, 3});
  add(2, "en", {0, 2});
  add(2, "zh", {3, 0, 0, 1});
  return c;
}

void expect_consistent(const PltmState& s) {
  const std::size_t K = s.num_topics;
  std::vector<int> dk(s.pairs.size() * K, 0);
  std::array<std::vector<int>, 2> kw, kt;
  for (std::size_t l = 0; l < 2; ++l) {
    kw[l].assign(K * s.vocab_sizes[l], 0);
    kt[l].assign(K, 0);
  }
  for (std::size_t p = 0; p < s.pairs.size(); ++p)
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t n = 0; n < s.pairs[p][l]->token_ids.size(); ++n) {
        const auto k = s.z[p][l][n];
        ++dk[p * K + k];
        ++kw[l][k * s.vocab_sizes[l] + s.pairs[p][l]->token_ids[n]];
        ++kt[l][k];
      }
  EXPECT_EQ(dk, s.pair_topic);
  EXPECT_EQ(kw, s.topic_word);
  EXPECT_EQ(kt, s.topic_total);
}

}  // namespace

TEST(Pltm, PairsOrderedByIdWithSidesByLanguage) {
  const Corpus c = pair_corpus();
  const PltmState s = pltm_init(c, 2, 0.1, 0.01, 1);
  EXPECT_EQ(s.pair_ids, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(s.pairs[2][0]->language, "en");
  EXPECT_EQ(s.pairs[2][1]->token_ids, (std::vector<TokenId>{0, 1, 1}));
}

TEST(Pltm, CountConservation) {
  const Corpus c = pair_corpus();
  PltmState s = pltm_init(c, 3, 0.1, 0.01, 4);
  expect_consistent(s);
  for (int i = 0; i < 30; ++i) {
    pltm_sweep(s);
    expect_consistent(s);
  }
  const int tokens = std::accumulate(s.pair_topic.begin(), s.pair_topic.end(), 0);
  EXPECT_EQ(tokens, 16);
}

TEST(Pltm, ExportShapes) {
  const Corpus c = pair_corpus();
  const auto a = pltm_train(c, 2, 0.1, 0.01, 20, 8);
  EXPECT_EQ(a.structure, Structure::languages);
  EXPECT_EQ(a.languages, (std::vector<std::string>{"en", "zh"}));
  ASSERT_EQ(a.phi.size(), 2u);
  EXPECT_EQ(a.phi[0].cols(), 3);
  EXPECT_EQ(a.phi[1].cols(), 4);
  EXPECT_EQ(a.pair_ids, (std::vector<int>{1, 2, 3}));
  for (Eigen::Index p = 0; p < 3; ++p) EXPECT_NEAR(a.theta_train.row(p).sum(), 1.0, 1e-12);
  for (const auto& phi : a.phi)
    for (Eigen::Index k = 0; k < 2; ++k) EXPECT_NEAR(phi.row(k).sum(), 1.0, 1e-12);
  const auto theta = pltm_infer(a, std::vector<TokenId>{3, 2}, "zh", 20, 1);
  EXPECT_NEAR(theta[0] + theta[1], 1.0, 1e-12);
  EXPECT_THROW(pltm_infer(a, std::vector<TokenId>{0}, "fr", 20, 1), InvalidArgument);
}

TEST(Pltm, SharedThetaCouplesLanguages) {
  // Pair p is about topic p % 2 in both languages: en words {0,1} / {2,3},
  // zh words {4,5} / {0,1} (permuted). Topics should line up across sides.
  Corpus c;
  c.vocabularies = {tf_test::numbered_vocab(4, "en"), tf_test::numbered_vocab(6, "zh")};
  Rng rng(2);
  for (int p = 0; p < 60; ++p) {
    const int t = p % 2;
    Document en, zh;
    en.pair_id = zh.pair_id = p;
    en.language = "en";
    zh.language = "zh";
    for (int n = 0; n < 10; ++n) {
      en.token_ids.push_back(static_cast<TokenId>(2 * t + rng.uniform_index(2)));
      zh.token_ids.push_back(static_cast<TokenId>((t == 0 ? 4 : 0) + rng.uniform_index(2)));
    }
    c.train_docs.push_back(en);
    c.train_docs.push_back(zh);
  }
  const auto a = pltm_train(c, 2, 0.1, 0.01, 100, 3);
  for (Eigen::Index k = 0; k < 2; ++k) {
    const bool en_first = a.phi[0](k, 0) + a.phi[0](k, 1) > 0.5;
    const bool zh_first = a.phi[1](k, 4) + a.phi[1](k, 5) > 0.5;
    EXPECT_EQ(en_first, zh_first) << "topic " << k;
  }
}

TEST(Pltm, InferenceRecoversGeneratingTheta) {
  SyntheticOptions o;
  o.kind = SyntheticKind::pltm;
  o.num_docs = 300;
  o.vocab_size = 50;
  o.num_topics = 3;
  o.seed = 6;
  const auto data = generate_synthetic(o);
  const auto a = pltm_train(data.corpus, 3, 0.5, 0.05, 200, 2);
  // learned topic matched to each true topic by best phi cosine
  std::vector<Eigen::Index> match(3);
  for (Eigen::Index k = 0; k < 3; ++k) {
    double best = -1.0;
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double c = data.phi[1].row(k).dot(a.phi[1].row(j)) / (data.phi[1].row(k).norm() * a.phi[1].row(j).norm());
      if (c > best) {
        best = c;
        match[static_cast<std::size_t>(k)] = j;
      }
    }
  }
  ASSERT_EQ(std::set<Eigen::Index>(match.begin(), match.end()).size(), 3u);

  Rng rng(40);
  const std::vector<double> truth{0.2, 0.7, 0.1};
  std::vector<TokenId> ids;
  for (int n = 0; n < 200; ++n) {
    const auto k = static_cast<Eigen::Index>(rng.categorical(truth));
    std::vector<double> row(50);
    for (Eigen::Index w = 0; w < 50; ++w) row[static_cast<std::size_t>(w)] = data.phi[1](k, w);
    ids.push_back(static_cast<TokenId>(rng.categorical(row)));
  }
  const auto theta = pltm_infer(a, ids, "zh", 200, 3);
  double tv = 0.0;
  for (std::size_t k = 0; k < 3; ++k) tv += 0.5 * std::abs(theta[static_cast<std::size_t>(match[k])] - truth[k]);
  EXPECT_LT(tv, 0.15);
}

TEST(Pltm, RejectsWrongLanguageCountAndBrokenPairs) {
  Corpus mono;
  mono.vocabularies = {Vocabulary({"a"}, {})};
  mono.train_docs = tf_test::docs({{0}});
  EXPECT_THROW(pltm_init(mono, 2, 0.1, 0.1, 1), StructureError);

  Corpus tri = pair_corpus();
  tri.vocabularies.push_back(Vocabulary({"x"}, {}, "fr"));
  EXPECT_THROW(pltm_init(tri, 2, 0.1, 0.1, 1), StructureError);

  Corpus missing = pair_corpus();
  missing.train_docs.pop_back();
  EXPECT_THROW(pltm_init(missing, 2, 0.1, 0.1, 1), FormatError);

  Corpus unpaired = pair_corpus();
  unpaired.train_docs[0].pair_id.reset();
  EXPECT_THROW(pltm_init(unpaired, 2, 0.1, 0.1, 1), FormatError);
}

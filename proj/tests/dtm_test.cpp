#include <gtest/gtest.h>

#include <algorithm>

#include "test_support.hpp"
#include "topicforge/models/dtm.hpp"
#include "topicforge/models/lda.hpp"
#include "topicforge/synthetic.hpp"

using namespace topicforge;

namespace {

std::vector<Document> sliced_docs() {
  auto docs = tf_test::docs({{0, 1, 1}, {2, 3}, {0, 3, 3}, {1, 2, 2}, {4, 0}, {4, 4, 1}});
  for (std::size_t i = 0; i < docs.size(); ++i) docs[i].time_slice = static_cast<int>(i % 3);
  return docs;
}

double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

// Mean cosine between topic k in slice t and topic k in slice t+1.
double aligned_cosine(const TopicModelArtifact& a) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t t = 0; t + 1 < a.phi_slices.size(); ++t)
    for (Eigen::Index k = 0; k < a.phi_slices[t].rows(); ++k) {
      sum += cosine(a.phi_slices[t].row(k), a.phi_slices[t + 1].row(k));
      ++n;
    }
  return sum / n;
}

}  // namespace

TEST(Dtm, ZeroKappaGivesFlatPriorTables) {
  const auto docs = sliced_docs();
  const auto r = dtm_train(docs, 5, 3, 2, 0.1, 0.05, 0.0, 5, 3);
  ASSERT_EQ(r.state.eta.size(), 3u);
  for (const auto& eta : r.state.eta) EXPECT_TRUE((eta.array() == 0.05).all());
  for (const auto& s : r.state.slices) EXPECT_FALSE(s.has_table_prior());
}

TEST(Dtm, PriorCarriesPreviousSlice) {
  const auto docs = sliced_docs();
  const double beta = 0.05, kappa = 7.0;
  const auto r = dtm_train(docs, 5, 3, 2, 0.1, beta, kappa, 5, 3);
  for (std::size_t t = 1; t < 3; ++t) {
    const Matrix expected = (beta + kappa * r.artifact.phi_slices[t - 1].array()).matrix();
    EXPECT_TRUE(r.state.eta[t].isApprox(expected, 1e-15));
    EXPECT_TRUE(r.state.slices[t].has_table_prior());
  }
}

TEST(Dtm, SingleSliceEqualsLda) {
  auto docs = tf_test::docs({{0, 1, 2, 3}, {3, 2, 1}, {4, 4, 0}, {0, 1}});
  for (auto& d : docs) d.time_slice = 0;
  const auto dyn = dtm_train(docs, 5, 1, 3, 0.2, 0.01, 50.0, 40, 99).artifact;
  const auto flat = lda_train(docs, 5, 3, 0.2, 0.01, 40, 99);
  ASSERT_EQ(dyn.phi_slices.size(), 1u);
  EXPECT_EQ(dyn.phi_slices[0], flat.phi[0]);
  EXPECT_EQ(dyn.theta_train, flat.theta_train);
}

TEST(Dtm, ThetaRowsFollowDocumentOrder) {
  const auto docs = sliced_docs();
  const auto r = dtm_train(docs, 5, 3, 2, 0.1, 0.05, 1.0, 5, 3);
  for (std::size_t t = 0; t < 3; ++t) {
    const Matrix theta = lda_theta(r.state.slices[t]);
    for (std::size_t j = 0; j < r.state.slice_docs[t].size(); ++j)
      EXPECT_EQ(r.artifact.theta_train.row(static_cast<Eigen::Index>(r.state.slice_docs[t][j])),
                theta.row(static_cast<Eigen::Index>(j)));
  }
}

TEST(Dtm, CouplingKeepsTopicsAligned) {
  SyntheticOptions o;
  o.kind = SyntheticKind::dtm;
  o.num_docs = 240;
  o.vocab_size = 40;
  o.num_topics = 4;
  o.num_slices = 3;
  o.seed = 12;
  const auto data = generate_synthetic(o);
  const auto& docs = data.corpus.train_docs;
  const auto coupled = dtm_train(docs, 40, 3, 4, 0.1, 0.01, 200.0, 60, 5).artifact;
  const auto free = dtm_train(docs, 40, 3, 4, 0.1, 0.01, 0.0, 60, 5).artifact;
  const double c = aligned_cosine(coupled);
  EXPECT_GT(c, 0.6);
  EXPECT_GT(c, aligned_cosine(free));
  // the drift is real: consecutive slices are similar but not identical
  for (std::size_t t = 0; t + 1 < 3; ++t) EXPECT_FALSE(coupled.phi_slices[t].isApprox(coupled.phi_slices[t + 1], 1e-3));
}

TEST(Dtm, TrajectoryFollowsDrift) {
  SyntheticOptions o;
  o.kind = SyntheticKind::dtm;
  o.num_docs = 240;
  o.vocab_size = 40;
  o.num_topics = 4;
  o.num_slices = 3;
  o.seed = 12;
  const auto data = generate_synthetic(o);
  const auto a = dtm_train(data.corpus.train_docs, 40, 3, 4, 0.1, 0.01, 200.0, 60, 5).artifact;
  auto overlap = [](const std::vector<std::string>& x, const std::vector<std::string>& y) {
    std::size_t n = 0;
    for (const auto& w : x) n += static_cast<std::size_t>(std::count(y.begin(), y.end(), w));
    return static_cast<double>(n) / static_cast<double>(x.size());
  };
  for (std::size_t k = 0; k < 4; ++k) {
    const auto traj = dtm_topic_trajectory(a, data.corpus.vocabulary(), k, 10);
    EXPECT_LT(overlap(traj[0], traj[2]), 1.0) << "topic " << k;
    EXPECT_GE(overlap(traj[0], traj[1]), 0.5) << "topic " << k;
    EXPECT_GE(overlap(traj[1], traj[2]), 0.5) << "topic " << k;
  }
}

TEST(Dtm, StructuralErrors) {
  auto docs = tf_test::docs({{0}, {1}});
  EXPECT_THROW(dtm_train(docs, 2, 2, 1, 0.1, 0.1, 1.0, 1, 1), StructureError);
  docs[0].time_slice = 0;
  docs[1].time_slice = 0;
  EXPECT_THROW(dtm_train(docs, 2, 2, 1, 0.1, 0.1, 1.0, 1, 1), StructureError);
  docs[1].time_slice = 5;
  EXPECT_THROW(dtm_train(docs, 2, 2, 1, 0.1, 0.1, 1.0, 1, 1), StructureError);
  EXPECT_THROW(dtm_train(docs, 2, 0, 1, 0.1, 0.1, 1.0, 1, 1), StructureError);
  docs[1].time_slice = 1;
  EXPECT_THROW(dtm_train(docs, 2, 2, 1, 0.1, 0.1, -1.0, 1, 1), InvalidArgument);
}

TEST(Dtm, Trajectory) {
  const auto docs = sliced_docs();
  const auto a = dtm_train(docs, 5, 3, 2, 0.1, 0.05, 1.0, 5, 3).artifact;
  const auto vocab = tf_test::numbered_vocab(5);
  const auto traj = dtm_topic_trajectory(a, vocab, 1, 2);
  ASSERT_EQ(traj.size(), 3u);
  for (const auto& words : traj) EXPECT_EQ(words.size(), 2u);
  EXPECT_THROW(dtm_topic_trajectory(a, vocab, 2, 2), InvalidArgument);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "test_support.hpp"
#include "topicforge/cli.hpp"

using namespace topicforge;
using tf_test::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string preprocess_stackoverflow(const TempDir& tmp) {
  const std::string data = (tmp / "so").string();
  const auto r = run({"preprocess", "--input", tf_test::fixture("stackoverflow.jsonl").string(), "--output", data});
  EXPECT_EQ(r.code, 0) << r.err;
  return data;
}

}  // namespace

TEST(Cli, PreprocessPrintsSummary) {
  TempDir tmp;
  const auto r = run({"preprocess", "--input", tf_test::fixture("preprocess_small.jsonl").string(), "--output",
                      (tmp / "d").string(), "--min-df", "1", "--max-df-ratio", "1.0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("docs=4 dropped=0 vocab=9 avg_len=", 0), 0u) << r.out;
  EXPECT_TRUE(fs::exists(tmp / "d" / "meta.json"));
  const Corpus c = load_dataset(tmp / "d");
  EXPECT_EQ(c.train_docs.size(), 3u);
  EXPECT_EQ(c.test_docs.size(), 1u);
}

TEST(Cli, PreprocessReportsBadLines) {
  TempDir tmp;
  const auto input = tmp / "bad.jsonl";
  std::ofstream(input) << "{\"text\": \"fine words here\"}\n{\"text\": \"more\", \"colour\": 1}\n";
  const auto r = run({"preprocess", "--input", input.string(), "--output", (tmp / "d").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.jsonl:2:"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
  TempDir tmp;
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"gen-synthetic", "--kind", "bogus", "--out", (tmp / "x").string()}).code, 1);
  const std::string data = preprocess_stackoverflow(tmp);
  EXPECT_EQ(run({"train", "--dataset", data, "--model", "lda", "--depth", "2", "--out", (tmp / "m").string()}).code, 1);
  EXPECT_EQ(run({"train", "--dataset", data, "--model", "nmf", "--kappa", "1", "--out", (tmp / "m").string()}).code, 1);
  EXPECT_EQ(run({"train", "--dataset", data, "--model", "lda", "--k", "0", "--out", (tmp / "m").string()}).code, 1);
}

TEST(Cli, HelpExitsZero) {
  const auto top = run({"--help"});
  EXPECT_EQ(top.code, 0);
  EXPECT_NE(top.out.find("gen-synthetic"), std::string::npos);
  const auto sub = run({"train", "--help"});
  EXPECT_EQ(sub.code, 0);
  EXPECT_NE(sub.out.find("--model"), std::string::npos);
}

TEST(Cli, DtmOnUnslicedDatasetIsRuntimeError) {
  TempDir tmp;
  const std::string data = preprocess_stackoverflow(tmp);
  const auto r = run({"train", "--dataset", data, "--model", "dtm", "--k", "3", "--out", (tmp / "m").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("slice"), std::string::npos) << r.err;
}

TEST(Cli, HldaTrainingIsReproducible) {
  TempDir tmp;
  const std::string data = preprocess_stackoverflow(tmp);
  for (const char* out : {"a", "b"}) {
    const auto r = run({"train", "--dataset", data, "--model", "hlda", "--depth", "3", "--iters", "20", "--seed", "5",
                        "--out", (tmp / out).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(tmp / "a" / "model.json"), slurp(tmp / "b" / "model.json"));
  const LoadedModel m = load_model(tmp / "a");
  EXPECT_EQ(m.artifact.structure, Structure::tree);
  EXPECT_GE(m.artifact.tree.size(), 3u);
  int max_depth = 0;
  for (const auto& n : m.artifact.tree) max_depth = std::max(max_depth, n.depth);
  EXPECT_EQ(max_depth, 2);
}

TEST(Cli, EvalWritesReportAndRejectsMissingLabels) {
  TempDir tmp;
  const std::string data = preprocess_stackoverflow(tmp);
  ASSERT_EQ(run({"train", "--dataset", data, "--model", "lda", "--k", "3", "--iters", "50", "--out",
                 (tmp / "m").string()}).code, 0);
  const auto ok = run({"eval", "--artifact", (tmp / "m").string(), "--dataset", data, "--metrics",
                       "tc,td,clustering", "--out", (tmp / "r").string()});
  ASSERT_EQ(ok.code, 0) << ok.err;
  const json report = json::parse(slurp(tmp / "r" / "eval-report.json"));
  EXPECT_TRUE(report.contains("artifact_hash"));
  EXPECT_NE(ok.out.find("td"), std::string::npos);

  // same vocabulary, labels stripped
  Corpus unlabeled = load_dataset(data);
  for (auto& d : unlabeled.train_docs) d.label.reset();
  for (auto& d : unlabeled.test_docs) d.label.reset();
  save_dataset(unlabeled, tmp / "nolabels");
  const auto bad = run({"eval", "--artifact", (tmp / "m").string(), "--dataset", (tmp / "nolabels").string(),
                        "--metrics", "clustering"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("clustering"), std::string::npos) << bad.err;
  EXPECT_EQ(run({"eval", "--artifact", (tmp / "m").string(), "--dataset", data, "--metrics", "bleu"}).code, 1);
}

TEST(Cli, MatlabQueryLandsOnMatlabTopic) {
  TempDir tmp;
  const std::string data = preprocess_stackoverflow(tmp);
  const std::string model = (tmp / "m").string();
  ASSERT_EQ(run({"train", "--dataset", data, "--model", "lda", "--k", "3", "--iters", "300", "--seed", "1", "--out",
                 model}).code, 0);
  const LoadedModel m = load_model(model);
  const auto w = *m.vocabularies[0].id("matlab");
  Eigen::Index matlab_topic = 0;
  m.artifact.phi[0].col(w).maxCoeff(&matlab_topic);

  const auto r = run({"infer", "--artifact", model, "--text", "How to plot lines between all points in vector in Matlab?"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["top_topic"].get<int>(), matlab_topic);
  double sum = 0.0;
  for (double p : j["theta"]) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-6);
  EXPECT_EQ(run({"infer", "--artifact", model, "--text", "How to plot lines between all points in vector in Matlab?"}).out,
            r.out);

  EXPECT_EQ(run({"infer", "--artifact", model, "--text", "   "}).code, 2);
  EXPECT_EQ(run({"infer", "--artifact", model, "--text", "zzzz qqqq"}).code, 2);
  EXPECT_EQ(run({"infer", "--artifact", model}).code, 1);
}

TEST(Cli, DefaultEvalMatchesOracles) {
  TempDir tmp;
  const std::string data = (tmp / "data").string(), model = (tmp / "m").string();
  ASSERT_EQ(run({"gen-synthetic", "--kind", "lda", "--docs", "120", "--vocab", "60", "--k", "4", "--seed", "2", "--out",
                 data}).code, 0);
  ASSERT_EQ(run({"train", "--dataset", data, "--model", "lda", "--k", "4", "--iters", "100", "--out", model}).code, 0);
  const auto r = run({"eval", "--artifact", model, "--dataset", data});
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(slurp(fs::path(model) / "eval-report.json"));

  const LoadedModel m = load_model(model);
  const Corpus corpus = load_dataset(data);
  const Matrix& phi = m.artifact.phi[0];
  auto top = [&](std::size_t T) {
    TopicIdLists out;
    for (Eigen::Index k = 0; k < phi.rows(); ++k) {
      std::vector<TokenId> ids(static_cast<std::size_t>(phi.cols()));
      std::iota(ids.begin(), ids.end(), 0);
      std::stable_sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) { return phi(k, a) > phi(k, b); });
      ids.resize(T);
      out.push_back(ids);
    }
    return out;
  };
  const auto units = oracle::doc_units(corpus.train_docs);
  EXPECT_NEAR(report["tc"].get<double>(), oracle::tc(units, top(10)), 1e-12);
  EXPECT_NEAR(report["cv"].get<double>(), oracle::cv(oracle::window_units(corpus.train_docs, 110), top(10)), 1e-12);

  const auto t25 = top(25);
  std::set<TokenId> uniq;
  for (const auto& t : t25) uniq.insert(t.begin(), t.end());
  EXPECT_DOUBLE_EQ(report["td"].get<double>(), static_cast<double>(uniq.size()) / 100.0);

  // purity of argmax test theta against stored labels
  std::istringstream theta(slurp(fs::path(model) / "theta-test.txt"));
  std::map<int, std::map<int, int>> table;
  std::string line;
  std::size_t d = 0;
  while (std::getline(theta, line)) {
    std::istringstream row(line);
    std::vector<double> v{std::istream_iterator<double>(row), std::istream_iterator<double>()};
    if (v.empty()) continue;
    const int k = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    ++table[k][*corpus.test_docs.at(d++).label];
  }
  ASSERT_EQ(d, corpus.test_docs.size());
  double hits = 0.0;
  for (const auto& [k, row] : table) {
    int best = 0;
    for (const auto& [label, n] : row) best = std::max(best, n);
    hits += best;
  }
  EXPECT_NEAR(report["purity"].get<double>(), hits / static_cast<double>(d), 1e-12);
}

TEST(Cli, GenSyntheticIsByteStable) {
  TempDir tmp;
  for (const char* out : {"a", "b"}) {
    const auto r = run({"gen-synthetic", "--kind", "dtm", "--docs", "60", "--vocab", "30", "--k", "3", "--seed", "9",
                        "--out", (tmp / out).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"meta.json", "train.jsonl", "test.jsonl", "vocab.en.txt", "ground-truth.json"})
    EXPECT_EQ(slurp(tmp / "a" / f), slurp(tmp / "b" / f)) << f;
  const Corpus c = load_dataset(tmp / "a");
  EXPECT_EQ(c.num_slices, 3);
  EXPECT_EQ(c.train_docs.size(), 60u);
}

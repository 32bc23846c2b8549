#pragma once

#include <map>
#include <string>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/eval/coherence.hpp"
#include "topicforge/eval/cooccurrence.hpp"
#include "topicforge/eval/diversity.hpp"
#include "topicforge/eval/report.hpp"
#include "topicforge/topics.hpp"

namespace topicforge {

enum class GroupBy { level, slice, language };

inline std::string to_string(GroupBy g) {
  switch (g) {
    case GroupBy::level: return "levels";
    case GroupBy::slice: return "slices";
    case GroupBy::language: return "languages";
  }
  return "?";
}

/// Top-T id lists of the selected rows of `phi`.
inline TopicIdLists top_id_lists(const Matrix& phi, const Vocabulary& vocab, std::size_t T,
                                 const std::vector<Eigen::Index>& rows) {
  TopicIdLists out;
  out.reserve(rows.size());
  for (Eigen::Index r : rows) {
    std::vector<TokenId> ids;
    for (const auto& w : top_weighted(phi.row(r), vocab, T)) ids.push_back(w.id);
    out.push_back(std::move(ids));
  }
  return out;
}

inline TopicIdLists top_id_lists(const Matrix& phi, const Vocabulary& vocab, std::size_t T) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(phi.rows()));
  for (Eigen::Index r = 0; r < phi.rows(); ++r) rows[static_cast<std::size_t>(r)] = r;
  return top_id_lists(phi, vocab, T, rows);
}

/// One evaluation group: a set of topics plus the reference texts their
/// coherence is measured against.
struct TopicGroup {
  std::string name;
  const Matrix* phi = nullptr;
  std::vector<Eigen::Index> rows;
  const Vocabulary* vocab = nullptr;
  std::vector<Document> reference;
};

/// Splits an artifact's topics by tree depth (root excluded), time slice or
/// language. Slice groups use the slice's own training texts as reference;
/// language groups use that language's training texts.
inline std::vector<TopicGroup> topic_groups(const TopicModelArtifact& a, const Corpus& corpus, GroupBy by) {
  std::vector<TopicGroup> groups;
  switch (by) {
    case GroupBy::level: {
      if (a.structure != Structure::tree) throw StructureError("grouping by level needs a tree artifact");
      std::map<int, TopicGroup> by_depth;
      for (std::size_t i = 0; i < a.tree.size(); ++i) {
        if (a.tree[i].depth == 0) continue;
        auto& g = by_depth[a.tree[i].depth];
        g.name = "depth_" + std::to_string(a.tree[i].depth);
        g.rows.push_back(static_cast<Eigen::Index>(i));
      }
      for (auto& [d, g] : by_depth) {
        g.phi = &a.phi.at(0);
        g.vocab = &corpus.vocabulary();
        g.reference = corpus.train_docs;
        groups.push_back(std::move(g));
      }
      break;
    }
    case GroupBy::slice: {
      if (a.structure != Structure::slices) throw StructureError("grouping by slice needs a dynamic artifact");
      for (std::size_t t = 0; t < a.phi_slices.size(); ++t) {
        TopicGroup g;
        g.name = "slice_" + std::to_string(t);
        g.phi = &a.phi_slices[t];
        for (Eigen::Index r = 0; r < g.phi->rows(); ++r) g.rows.push_back(r);
        g.vocab = &corpus.vocabulary();
        for (const auto& d : corpus.train_docs)
          if (d.time_slice && static_cast<std::size_t>(*d.time_slice) == t) g.reference.push_back(d);
        groups.push_back(std::move(g));
      }
      break;
    }
    case GroupBy::language: {
      if (a.structure != Structure::languages) throw StructureError("grouping by language needs a cross-lingual artifact");
      for (std::size_t l = 0; l < a.languages.size(); ++l) {
        TopicGroup g;
        g.name = a.languages[l];
        g.phi = &a.phi[l];
        for (Eigen::Index r = 0; r < g.phi->rows(); ++r) g.rows.push_back(r);
        g.vocab = &corpus.vocabulary(a.languages[l]);
        for (const auto& d : corpus.train_docs)
          if (d.language == a.languages[l]) g.reference.push_back(d);
        groups.push_back(std::move(g));
      }
      break;
    }
  }
  if (groups.empty()) throw StructureError("artifact has no topics to group by " + to_string(by));
  return groups;
}

/// TC and TD within each group, reported as `tc_<grouping>` and
/// `td_<grouping>`: the scalar is the mean of the per-group values.
inline EvalReport grouped_eval(const TopicModelArtifact& a, const Corpus& corpus, GroupBy by,
                               std::size_t t_coherence = 10, std::size_t t_diversity = 25) {
  const auto groups = topic_groups(a, corpus, by);
  MetricValue tc, td;
  std::vector<std::string> names;
  for (const auto& g : groups) {
    names.push_back(g.name);
    const auto stats = CooccurrenceStats::from_documents(g.reference, g.vocab->size());
    tc.per_group.push_back(topic_coherence(top_id_lists(*g.phi, *g.vocab, t_coherence, g.rows), stats).value);
    td.per_group.push_back(topic_diversity(top_id_lists(*g.phi, *g.vocab, t_diversity, g.rows), t_diversity));
  }
  tc.value = mean_of(tc.per_group);
  td.value = mean_of(td.per_group);
  EvalReport r;
  r.set_grouped("tc_" + to_string(by), names, tc);
  r.set_grouped("td_" + to_string(by), names, td);
  return r;
}

}  // namespace topicforge

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "topicforge/eval/classification.hpp"
#include "topicforge/eval/clustering.hpp"
#include "topicforge/eval/coherence.hpp"
#include "topicforge/eval/cooccurrence.hpp"
#include "topicforge/eval/diversity.hpp"
#include "topicforge/eval/grouped.hpp"
#include "topicforge/eval/hierarchy.hpp"
#include "topicforge/eval/report.hpp"
#include "topicforge/pipeline.hpp"

namespace topicforge {

struct EvalOptions {
  /// Metric families to compute; empty means every family applicable to the
  /// artifact and dataset. Families: tc, cv, td, tu, clustering,
  /// classification, cnpmi, hierarchy, grouped.
  std::set<std::string> metrics;
  std::size_t t_coherence = 10;
  std::size_t t_diversity = 25;
  std::size_t t_uniqueness = 10;
  std::size_t cv_window = 110;
};

inline const std::set<std::string>& metric_families() {
  static const std::set<std::string> all{"tc",    "cv",         "td",        "tu",     "clustering",
                                         "classification", "cnpmi", "hierarchy", "grouped"};
  return all;
}

namespace detail {

/// Topic sets for the ungrouped metrics: all topics (non-root nodes for
/// trees, the last slice for dynamic models) against the training texts;
/// one set per language for cross-lingual models.
inline std::vector<TopicGroup> primary_topic_sets(const TopicModelArtifact& a, const Corpus& corpus) {
  if (a.structure == Structure::languages) return topic_groups(a, corpus, GroupBy::language);
  TopicGroup g;
  g.name = "all";
  g.vocab = &corpus.vocabulary();
  if (a.structure == Structure::slices) {
    const std::size_t last = a.phi_slices.size() - 1;
    g.phi = &a.phi_slices[last];
    for (const auto& d : corpus.train_docs)
      if (d.time_slice && static_cast<std::size_t>(*d.time_slice) == last) g.reference.push_back(d);
  } else {
    g.phi = &a.phi.at(0);
    g.reference = corpus.train_docs;
  }
  for (Eigen::Index r = 0; r < g.phi->rows(); ++r)
    if (a.structure != Structure::tree || a.tree[static_cast<std::size_t>(r)].depth > 0) g.rows.push_back(r);
  if (g.rows.empty()) throw StructureError("artifact has no topics to evaluate");
  return {std::move(g)};
}

inline std::vector<std::string> row_names(const TopicModelArtifact& a, const TopicGroup& g) {
  std::vector<std::string> names;
  for (Eigen::Index r : g.rows)
    names.push_back(a.structure == Structure::tree ? "node_" + std::to_string(a.tree[static_cast<std::size_t>(r)].id)
                                                   : "topic_" + std::to_string(r));
  return names;
}

inline std::vector<int> labels_of(const std::vector<Document>& docs, const std::string& metric) {
  std::vector<int> out;
  for (const auto& d : docs) {
    if (!d.label) throw StructureError("metric '" + metric + "' needs labeled documents; the dataset has none");
    out.push_back(*d.label);
  }
  return out;
}

/// Training labels aligned with theta_train rows (one per pair for
/// cross-lingual artifacts).
inline std::vector<int> train_labels(const TopicModelArtifact& a, const Corpus& corpus, const std::string& metric) {
  if (a.structure != Structure::languages) return labels_of(corpus.train_docs, metric);
  std::map<int, int> by_pair;
  for (const auto& d : corpus.train_docs) {
    if (!d.label) throw StructureError("metric '" + metric + "' needs labeled documents; the dataset has none");
    if (d.pair_id) by_pair.try_emplace(*d.pair_id, *d.label);
  }
  std::vector<int> out;
  for (int p : a.pair_ids) out.push_back(by_pair.at(p));
  return out;
}

}  // namespace detail

/// Computes the requested metrics of a trained artifact against a dataset.
inline EvalReport evaluate(const TopicModelArtifact& a, const Corpus& corpus, const EvalOptions& opt = {},
                           const std::string& artifact_hash = {}) {
  check_vocabulary(a, corpus);
  for (const auto& m : opt.metrics)
    if (!metric_families().count(m)) throw InvalidArgument("unknown metric '" + m + "'");
  const bool explicit_set = !opt.metrics.empty();
  auto wanted = [&](const std::string& m) { return !explicit_set || opt.metrics.count(m) > 0; };

  EvalReport report;
  report.artifact_hash = artifact_hash;

  std::size_t min_vocab = SIZE_MAX;
  for (const auto& lang : a.languages) min_vocab = std::min(min_vocab, corpus.vocabulary(lang).size());
  auto effective = [&](std::size_t T, const char* what, bool requested) {
    if (T <= min_vocab) return T;
    if (requested)
      report.warnings.push_back(std::string(what) + " top-T reduced from " + std::to_string(T) +
                                " to vocabulary size " + std::to_string(min_vocab));
    return min_vocab;
  };
  const std::size_t tc_t = effective(opt.t_coherence, "coherence",
                                     wanted("tc") || wanted("cv") || wanted("hierarchy") || wanted("cnpmi") ||
                                         wanted("grouped"));
  const std::size_t td_t = effective(opt.t_diversity, "diversity", wanted("td"));
  const std::size_t tu_t = effective(opt.t_uniqueness, "uniqueness", wanted("tu"));
  report.config = {{"t_coherence", tc_t},
                   {"t_diversity", td_t},
                   {"t_uniqueness", tu_t},
                   {"cv_window", opt.cv_window},
                   {"epsilon", kNpmiEpsilon},
                   {"npmi_reference", "training documents, boolean document co-occurrence"},
                   {"slice_reference", "slice-local training documents"},
                   {"classifier", "softmax regression, lr 0.1, 500 iterations, l2 1e-4"}};

  const auto sets = detail::primary_topic_sets(a, corpus);
  auto put = [&](const std::string& name, const std::vector<TopicGroup>& groups,
                 const std::function<double(const TopicGroup&, std::vector<double>*)>& metric) {
    MetricValue v;
    std::vector<std::string> names;
    std::vector<double> details;
    for (const auto& g : groups) {
      v.per_group.push_back(metric(g, groups.size() == 1 ? &details : nullptr));
      names.push_back(g.name);
    }
    v.value = mean_of(v.per_group);
    if (groups.size() == 1 && !details.empty()) {
      report.set_grouped(name, detail::row_names(a, groups[0]), {v.value, details});
    } else {
      report.set_grouped(name, names, v);
    }
  };

  if (wanted("tc"))
    put("tc", sets, [&](const TopicGroup& g, std::vector<double>* per_topic) {
      const auto stats = CooccurrenceStats::from_documents(g.reference, g.vocab->size());
      auto v = topic_coherence(top_id_lists(*g.phi, *g.vocab, tc_t, g.rows), stats);
      if (per_topic) *per_topic = v.per_group;
      return v.value;
    });
  if (wanted("cv"))
    put("cv", sets, [&](const TopicGroup& g, std::vector<double>* per_topic) {
      const auto stats = CooccurrenceStats::from_windows(g.reference, g.vocab->size(), opt.cv_window);
      auto v = cv_coherence(top_id_lists(*g.phi, *g.vocab, tc_t, g.rows), stats);
      if (per_topic) *per_topic = v.per_group;
      return v.value;
    });
  if (wanted("td"))
    put("td", sets, [&](const TopicGroup& g, std::vector<double>*) {
      return topic_diversity(top_id_lists(*g.phi, *g.vocab, td_t, g.rows), td_t);
    });
  if (wanted("tu"))
    put("tu", sets, [&](const TopicGroup& g, std::vector<double>*) {
      return topic_uniqueness(top_id_lists(*g.phi, *g.vocab, tu_t, g.rows), tu_t);
    });

  const bool labeled = corpus.has_labels();
  const bool want_clustering = explicit_set ? wanted("clustering") : labeled && !corpus.test_docs.empty();
  std::set<int> train_classes;
  for (const auto& d : corpus.train_docs)
    if (d.label) train_classes.insert(*d.label);
  const bool want_classification =
      explicit_set ? wanted("classification") : labeled && !corpus.test_docs.empty() && train_classes.size() >= 2;
  if (want_clustering || want_classification) {
    const auto thetas = export_theta(a, corpus);
    for (const auto& w : thetas.warnings) report.warnings.push_back(w);
    if (want_clustering) {
      const auto labels = detail::labels_of(corpus.test_docs, "clustering");
      if (labels.empty()) throw StructureError("metric 'clustering' needs test documents");
      const auto c = clustering_eval(thetas.test, labels);
      report.set("purity", c.purity);
      report.set("nmi", c.nmi);
    }
    if (want_classification) {
      const auto train_y = detail::train_labels(a, corpus, "classification");
      const auto test_y = detail::labels_of(corpus.test_docs, "classification");
      if (test_y.empty()) throw StructureError("metric 'classification' needs test documents");
      const auto c = classification_eval(thetas.train, train_y, thetas.test, test_y);
      report.set("accuracy", c.accuracy);
      report.set("macro_f1", c.macro_f1);
      for (const auto& w : c.warnings) report.warnings.push_back(w);
    }
  }

  if (a.structure == Structure::languages && wanted("cnpmi")) {
    std::map<int, std::array<const Document*, 2>> pairs;
    for (const auto& d : corpus.train_docs)
      if (d.pair_id) pairs[*d.pair_id][a.language_index(d.language)] = &d;
    std::vector<std::array<const Document*, 2>> sides;
    for (const auto& [id, s] : pairs) sides.push_back(s);
    const auto stats = PairedCooccurrenceStats::from_pairs(
        sides, {corpus.vocabulary(a.languages[0]).size(), corpus.vocabulary(a.languages[1]).size()});
    const auto v = cnpmi(top_id_lists(a.phi[0], corpus.vocabulary(a.languages[0]), tc_t),
                         top_id_lists(a.phi[1], corpus.vocabulary(a.languages[1]), tc_t), stats);
    std::vector<std::string> names;
    for (std::size_t k = 0; k < a.num_topics; ++k) names.push_back("topic_" + std::to_string(k));
    report.set_grouped("cnpmi", names, v);
  } else if (explicit_set && wanted("cnpmi")) {
    throw StructureError("metric 'cnpmi' needs a cross-lingual artifact");
  }

  if (a.structure == Structure::tree && wanted("hierarchy")) {
    const auto stats = CooccurrenceStats::from_documents(corpus.train_docs, corpus.vocabulary().size());
    const auto h = hierarchy_eval(a.tree, top_id_lists(a.phi[0], corpus.vocabulary(), tc_t), stats);
    report.set("pcc", h.pcc);
    report.set("pcd", h.pcd);
    report.set("pncd", h.pncd);
    report.set("sibling_d", h.sibling_d);
  } else if (explicit_set && wanted("hierarchy")) {
    throw StructureError("metric 'hierarchy' needs a tree artifact");
  }

  if (wanted("grouped")) {
    std::optional<GroupBy> by;
    if (a.structure == Structure::tree) by = GroupBy::level;
    if (a.structure == Structure::slices) by = GroupBy::slice;
    if (a.structure == Structure::languages) by = GroupBy::language;
    if (by) {
      const auto g = grouped_eval(a, corpus, *by, tc_t, td_t);
      for (const auto& [k, v] : g.metrics) report.metrics[k] = v;
      for (const auto& [k, v] : g.groups) report.groups[k] = v;
    } else if (explicit_set) {
      throw StructureError("metric 'grouped' needs a tree, dynamic or cross-lingual artifact");
    }
  }
  return report;
}

}  // namespace topicforge

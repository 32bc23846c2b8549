#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "topicforge/corpus.hpp"
#include "topicforge/error.hpp"
#include "topicforge/eval/cooccurrence.hpp"

namespace topicforge {

/// Top-word lists as reference-vocabulary ids, one list per topic.
using TopicIdLists = std::vector<std::vector<TokenId>>;

/// Scalar plus one value per group (topic, level, slice or language).
struct MetricValue {
  double value = 0.0;
  std::vector<double> per_group;
};

/// Maps words to reference ids; unknown words become kAbsentToken.
inline TopicIdLists to_reference_ids(const std::vector<std::vector<std::string>>& topics, const Vocabulary& vocab) {
  TopicIdLists out;
  out.reserve(topics.size());
  for (const auto& words : topics) {
    std::vector<TokenId> ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(vocab.id(w).value_or(kAbsentToken));
    out.push_back(std::move(ids));
  }
  return out;
}

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Mean NPMI over the unordered pairs of each topic's list, averaged over topics.
inline MetricValue topic_coherence(const TopicIdLists& topics, const CooccurrenceStats& stats) {
  if (topics.empty()) throw InvalidArgument("topic_coherence: no topics");
  MetricValue out;
  for (const auto& words : topics) {
    if (words.size() < 2) throw InvalidArgument("topic_coherence: T must be >= 2");
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < words.size(); ++i)
      for (std::size_t j = i + 1; j < words.size(); ++j) {
        sum += npmi_pair(stats, words[i], words[j]);
        ++pairs;
      }
    out.per_group.push_back(sum / static_cast<double>(pairs));
  }
  out.value = mean_of(out.per_group);
  return out;
}

/// Cosine similarity; zero when either vector is zero.
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// C_V: each word's NPMI vector against the topic's words is compared by
/// cosine with the sum of all the topic's vectors. `stats` should be built
/// with sliding windows.
inline MetricValue cv_coherence(const TopicIdLists& topics, const CooccurrenceStats& stats) {
  if (topics.empty()) throw InvalidArgument("cv_coherence: no topics");
  MetricValue out;
  for (const auto& words : topics) {
    const std::size_t T = words.size();
    if (T < 2) throw InvalidArgument("cv_coherence: T must be >= 2");
    std::vector<std::vector<double>> vecs(T, std::vector<double>(T));
    std::vector<double> total(T, 0.0);
    for (std::size_t i = 0; i < T; ++i)
      for (std::size_t j = 0; j < T; ++j) {
        vecs[i][j] = i == j ? 1.0 : npmi_pair(stats, words[i], words[j]);
        total[j] += vecs[i][j];
      }
    double score = 0.0;
    for (std::size_t i = 0; i < T; ++i) score += cosine(vecs[i], total);
    out.per_group.push_back(score / static_cast<double>(T));
  }
  out.value = mean_of(out.per_group);
  return out;
}

/// Cross-lingual NPMI: topic k's lists in the two languages are compared
/// over all T x T cross pairs, counting co-occurrence within document pairs.
inline MetricValue cnpmi(const TopicIdLists& topics_l1, const TopicIdLists& topics_l2,
                         const PairedCooccurrenceStats& stats) {
  if (topics_l1.size() != topics_l2.size()) throw InvalidArgument("cnpmi: topic counts differ across languages");
  if (topics_l1.empty()) throw InvalidArgument("cnpmi: no topics");
  if (stats.num_units() == 0) throw InvalidArgument("cnpmi: reference has no document pairs");
  MetricValue out;
  for (std::size_t k = 0; k < topics_l1.size(); ++k) {
    const auto& a = topics_l1[k];
    const auto& b = topics_l2[k];
    if (a.empty() || b.empty()) throw InvalidArgument("cnpmi: empty top-word list");
    double sum = 0.0;
    for (TokenId wi : a)
      for (TokenId wj : b) sum += npmi_cross(stats, wi, wj);
    out.per_group.push_back(sum / static_cast<double>(a.size() * b.size()));
  }
  out.value = mean_of(out.per_group);
  return out;
}

}  // namespace topicforge

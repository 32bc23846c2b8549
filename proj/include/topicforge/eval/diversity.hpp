#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "topicforge/error.hpp"

namespace topicforge {

namespace detail {

template <class Word>
void check_lists(const std::vector<std::vector<Word>>& topics, std::size_t T, const char* what) {
  if (topics.empty()) throw InvalidArgument(std::string(what) + ": no topics");
  if (T < 1) throw InvalidArgument(std::string(what) + ": T must be >= 1");
  for (const auto& t : topics)
    if (t.size() < T)
      throw InvalidArgument(std::string(what) + ": topic has fewer than " + std::to_string(T) + " words");
}

}  // namespace detail

/// Fraction of unique words among the first T words of every topic.
template <class Word>
double topic_diversity(const std::vector<std::vector<Word>>& topics, std::size_t T = 25) {
  detail::check_lists(topics, T, "topic_diversity");
  std::set<Word> unique;
  for (const auto& t : topics) unique.insert(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(T));
  return static_cast<double>(unique.size()) / static_cast<double>(topics.size() * T);
}

/// Mean over topics and their top-T words of 1 / (number of topics listing the word).
template <class Word>
double topic_uniqueness(const std::vector<std::vector<Word>>& topics, std::size_t T = 10) {
  detail::check_lists(topics, T, "topic_uniqueness");
  std::map<Word, std::size_t> cnt;
  for (const auto& t : topics) {
    std::set<Word> seen(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(T));
    for (const auto& w : seen) ++cnt[w];
  }
  double total = 0.0;
  for (const auto& t : topics) {
    double s = 0.0;
    for (std::size_t i = 0; i < T; ++i) s += 1.0 / static_cast<double>(cnt[t[i]]);
    total += s / static_cast<double>(T);
  }
  return total / static_cast<double>(topics.size());
}

}  // namespace topicforge

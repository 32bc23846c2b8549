#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "topicforge/corpus.hpp"

namespace topicforge {

// Stands for a top word that does not exist in the reference vocabulary.
inline constexpr TokenId kAbsentToken = std::numeric_limits<TokenId>::max();

inline constexpr double kNpmiEpsilon = 1e-12;

/// Boolean co-occurrence counts over reference units: whole documents, or
/// sliding windows when `window_size` is set. Posting lists are sorted unit
/// indices, so pair counts are list intersections.
class CooccurrenceStats {
 public:
  CooccurrenceStats() = default;

  static CooccurrenceStats from_documents(std::span<const Document> docs, std::size_t vocab_size) {
    CooccurrenceStats s;
    s.postings_.resize(vocab_size);
    std::vector<std::uint32_t> last(vocab_size, std::numeric_limits<std::uint32_t>::max());
    for (std::size_t d = 0; d < docs.size(); ++d) {
      const auto unit = static_cast<std::uint32_t>(d);
      for (TokenId w : docs[d].token_ids) {
        if (w >= vocab_size) throw InvalidArgument("cooccurrence: token id >= V");
        if (last[w] != unit) {
          last[w] = unit;
          s.postings_[w].push_back(unit);
        }
      }
    }
    s.units_ = docs.size();
    return s;
  }

  /// Each run of `window` consecutive tokens is one unit; a document shorter
  /// than the window contributes a single unit.
  static CooccurrenceStats from_windows(std::span<const Document> docs, std::size_t vocab_size, std::size_t window) {
    if (window == 0) throw InvalidArgument("cooccurrence: window size must be >= 1");
    CooccurrenceStats s;
    s.postings_.resize(vocab_size);
    s.window_ = window;
    std::vector<int> in_window(vocab_size, 0);
    std::vector<TokenId> present;
    std::uint32_t unit = 0;
    for (const auto& doc : docs) {
      const auto& ids = doc.token_ids;
      for (TokenId w : ids)
        if (w >= vocab_size) throw InvalidArgument("cooccurrence: token id >= V");
      if (ids.empty()) continue;
      const std::size_t span = std::min(window, ids.size());
      const std::size_t n_windows = ids.size() <= window ? 1 : ids.size() - window + 1;
      for (std::size_t i = 0; i < span; ++i) ++in_window[ids[i]];
      for (std::size_t start = 0; start < n_windows; ++start) {
        if (start > 0) {
          --in_window[ids[start - 1]];
          ++in_window[ids[start + window - 1]];
        }
        present.assign(ids.begin() + static_cast<std::ptrdiff_t>(start),
                       ids.begin() + static_cast<std::ptrdiff_t>(start + span));
        std::sort(present.begin(), present.end());
        present.erase(std::unique(present.begin(), present.end()), present.end());
        for (TokenId w : present)
          if (in_window[w] > 0) s.postings_[w].push_back(unit);
        ++unit;
      }
      for (std::size_t i = n_windows - 1; i < n_windows - 1 + span; ++i) --in_window[ids[i]];
    }
    s.units_ = unit;
    return s;
  }

  std::size_t num_units() const { return units_; }
  std::optional<std::size_t> window_size() const { return window_; }
  std::size_t vocab_size() const { return postings_.size(); }

  std::size_t count(TokenId w) const { return w < postings_.size() ? postings_[w].size() : 0; }

  std::size_t count(TokenId a, TokenId b) const {
    if (a >= postings_.size() || b >= postings_.size()) return 0;
    return intersection_size(postings_[a], postings_[b]);
  }

  const std::vector<std::uint32_t>& postings(TokenId w) const { return postings_.at(w); }

  static std::size_t intersection_size(const std::vector<std::uint32_t>& x, const std::vector<std::uint32_t>& y) {
    std::size_t i = 0, j = 0, n = 0;
    while (i < x.size() && j < y.size()) {
      if (x[i] < y[j]) ++i;
      else if (y[j] < x[i]) ++j;
      else {
        ++n;
        ++i;
        ++j;
      }
    }
    return n;
  }

 private:
  std::vector<std::vector<std::uint32_t>> postings_;
  std::size_t units_ = 0;
  std::optional<std::size_t> window_;
};

/// Co-occurrence over document pairs: a word of language 0 and a word of
/// language 1 co-occur in a pair when each appears on its own side.
class PairedCooccurrenceStats {
 public:
  /// `sides[p]` holds the two documents of pair p, ordered by language index.
  static PairedCooccurrenceStats from_pairs(std::span<const std::array<const Document*, 2>> sides,
                                            std::array<std::size_t, 2> vocab_sizes) {
    PairedCooccurrenceStats s;
    std::array<std::vector<Document>, 2> split;
    for (const auto& pair : sides)
      for (std::size_t l = 0; l < 2; ++l) {
        if (!pair[l]) throw InvalidArgument("paired reference: pair is missing a side");
        split[l].push_back(*pair[l]);
      }
    for (std::size_t l = 0; l < 2; ++l) s.sides_[l] = CooccurrenceStats::from_documents(split[l], vocab_sizes[l]);
    s.units_ = sides.size();
    return s;
  }

  std::size_t num_units() const { return units_; }
  const CooccurrenceStats& side(std::size_t l) const { return sides_.at(l); }

  std::size_t count_cross(TokenId w0, TokenId w1) const {
    if (w0 >= sides_[0].vocab_size() || w1 >= sides_[1].vocab_size()) return 0;
    return CooccurrenceStats::intersection_size(sides_[0].postings(w0), sides_[1].postings(w1));
  }

 private:
  std::array<CooccurrenceStats, 2> sides_;
  std::size_t units_ = 0;
};

/// NPMI from unit counts with eps = 1e-12 inside the logs, clamped to [-1, 1].
///
/// Boundary cases where the smoothed expression degenerates take their
/// limits: pairs that never co-occur score -1, and a pair present in every
/// unit scores 1. A word absent from the reference has probability eps.
inline double npmi_from_counts(std::size_t ci, std::size_t cj, std::size_t cij, std::size_t units) {
  if (units == 0 || cij == 0) return -1.0;
  const double n = static_cast<double>(units);
  const double pij = static_cast<double>(cij) / n;
  if (cij >= units) return 1.0;
  const double pi = ci ? static_cast<double>(ci) / n : kNpmiEpsilon;
  const double pj = cj ? static_cast<double>(cj) / n : kNpmiEpsilon;
  const double v = std::log((pij + kNpmiEpsilon) / (pi * pj)) / -std::log(pij + kNpmiEpsilon);
  return std::clamp(v, -1.0, 1.0);
}

/// NPMI of two reference words; a word paired with itself scores 1.
inline double npmi_pair(const CooccurrenceStats& stats, TokenId wi, TokenId wj) {
  if (wi == wj && wi != kAbsentToken) return 1.0;
  return npmi_from_counts(stats.count(wi), stats.count(wj), stats.count(wi, wj), stats.num_units());
}

inline double npmi_cross(const PairedCooccurrenceStats& stats, TokenId w0, TokenId w1) {
  return npmi_from_counts(stats.side(0).count(w0), stats.side(1).count(w1), stats.count_cross(w0, w1),
                          stats.num_units());
}

}  // namespace topicforge

#pragma once

// Sequence- and set-level differential scores between candidates.
//
// For sequences y1, y2 the score is the negated mean pairwise cosine
// between their token hidden states:
//
//   d(y1, y2) = -1/(L1 L2) * sum_i sum_j cos(h1_i, h2_j)
//
// Since sum_i sum_j cos(h_i, g_j) = <sum_i h_i/|h_i|, sum_j g_j/|g_j|>, this
// is -<m1, m2> with m the mean of unit-normalized hiddens, which every
// Candidate maintains.

#include <algorithm>
#include <span>
#include <vector>

#include "dbd/core.hpp"

namespace dbd {

inline void require_comparable(const Candidate& c) {
  if (c.empty()) throw InvalidArgument("differential score needs at least one token");
  if (c.has_zero_norm_hidden())
    throw ZeroNormError("candidate has a zero-norm hidden state; cosine undefined");
}

/// Symmetric exactly: the dot product multiplies the same pairs in the same
/// order whichever argument comes first.
inline double pairwise_diff(const Candidate& a, const Candidate& b) {
  require_comparable(a);
  require_comparable(b);
  if (a.norm_mean().size() != b.norm_mean().size())
    throw InvalidArgument("hidden widths differ between candidates");
  return -detail::dot(a.norm_mean(), b.norm_mean());
}

/// Sum of pairwise_diff over unordered distinct pairs. The pair values are
/// summed in sorted order, so the result does not depend on input order.
inline double set_diff(std::span<const Candidate> facts) {
  for (const auto& f : facts) require_comparable(f);
  std::vector<double> pairs;
  pairs.reserve(facts.size() * (facts.size() > 0 ? facts.size() - 1 : 0) / 2);
  for (std::size_t i = 1; i < facts.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) pairs.push_back(pairwise_diff(facts[i], facts[j]));
  std::sort(pairs.begin(), pairs.end());
  double total = 0.0;
  for (double d : pairs) total += d;
  return total;
}

}  // namespace dbd

#pragma once

// Word-level edit distance between the input sentence and a retrieved
// source sentence, the set of unedited retrieved-side positions on the
// canonical optimal backtrace, and the similarity 1 - d/max(|X|,|Xm|).

#include "tpiece/corpus.hpp"

namespace tpiece {

struct EditResult {
  int distance = 0;
  std::vector<int> unedited;  // sorted 0-based positions into Xm matched at zero cost
};

// Unit-cost Levenshtein over tokens. When several optimal paths exist the
// backtrace from the terminal cell prefers match > substitution > deletion
// of an Xm word > insertion, which makes the unedited set deterministic.
inline EditResult edit_distance_with_matches(const Sentence& x, const Sentence& xm) {
  if (x.empty() || xm.empty())
    throw std::invalid_argument("edit_distance_with_matches: sentences must be non-empty");
  const size_t n = x.size(), m = xm.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      int diag = d[i - 1][j - 1] + (x[i - 1] == xm[j - 1] ? 0 : 1);
      d[i][j] = std::min({diag, d[i][j - 1] + 1, d[i - 1][j] + 1});
    }
  }
  EditResult res;
  res.distance = d[n][m];
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && x[i - 1] == xm[j - 1] && d[i][j] == d[i - 1][j - 1]) {
      res.unedited.push_back(static_cast<int>(j - 1));
      --i, --j;
    } else if (i > 0 && j > 0 && x[i - 1] != xm[j - 1] && d[i][j] == d[i - 1][j - 1] + 1) {
      --i, --j;  // substitution
    } else if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
      --j;  // Xm word not used
    } else {
      --i;  // X word inserted
    }
  }
  std::reverse(res.unedited.begin(), res.unedited.end());
  return res;
}

inline double sentence_similarity(const Sentence& x, const Sentence& xm) {
  int d = edit_distance_with_matches(x, xm).distance;
  return 1.0 - static_cast<double>(d) / static_cast<double>(std::max(x.size(), xm.size()));
}

struct RetrievedMatch {
  ParallelExample example;
  int distance = 0;
  std::vector<int> unedited;
  double similarity = 0.0;
};

inline RetrievedMatch compute_match(const Sentence& x, const ParallelExample& example) {
  RetrievedMatch m;
  m.example = example;
  EditResult res = edit_distance_with_matches(x, example.source);
  m.distance = res.distance;
  m.unedited = std::move(res.unedited);
  m.similarity =
      1.0 - static_cast<double>(m.distance) / static_cast<double>(std::max(x.size(), example.source.size()));
  return m;
}

}  // namespace tpiece

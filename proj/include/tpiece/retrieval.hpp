#pragma once

// Inverted index over corpus source sides, standing in for an external
// search engine. Scoring is additive idf over distinct shared tokens;
// exact ranking happens downstream via edit distance, so retrieval only
// needs recall.

#include <cmath>
#include <unordered_map>

#include "tpiece/corpus.hpp"

namespace tpiece {

struct Candidate {
  int example_id = 0;
  double lexical_score = 0.0;
};

struct InvertedIndex {
  int doc_count = 0;
  std::unordered_map<Token, std::vector<int>> postings;  // strictly increasing ids, set semantics per sentence

  int doc_freq(const Token& t) const {
    auto it = postings.find(t);
    return it == postings.end() ? 0 : static_cast<int>(it->second.size());
  }
  double idf(const Token& t) const {
    return std::log(static_cast<double>(doc_count + 1) / (doc_freq(t) + 1)) + 1.0;
  }
};

inline InvertedIndex build_index(const ParallelCorpus& corpus) {
  InvertedIndex index;
  index.doc_count = static_cast<int>(corpus.size());
  for (const auto& ex : corpus.examples) {
    for (const auto& tok : ex.source) {
      auto& list = index.postings[tok];
      if (list.empty() || list.back() != ex.id) list.push_back(ex.id);
    }
  }
  return index;
}

// Top-M examples sharing at least one token with the query, by descending
// additive idf over distinct query tokens; ties broken by ascending id.
inline std::vector<Candidate> search(const InvertedIndex& index, const Sentence& query, int M) {
  std::vector<Candidate> out;
  if (M <= 0) return out;
  std::vector<Token> terms = query;
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

  std::unordered_map<int, double> scores;
  for (const auto& t : terms) {
    auto it = index.postings.find(t);
    if (it == index.postings.end()) continue;
    double w = index.idf(t);
    for (int id : it->second) scores[id] += w;
  }
  out.reserve(scores.size());
  for (const auto& [id, s] : scores) out.push_back({id, s});
  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.lexical_score != b.lexical_score) return a.lexical_score > b.lexical_score;
    return a.example_id < b.example_id;
  };
  if (static_cast<size_t>(M) < out.size()) {
    std::partial_sort(out.begin(), out.begin() + M, out.end(), better);
    out.resize(M);
  } else {
    std::sort(out.begin(), out.end(), better);
  }
  return out;
}

// Index artifact: versioned text file embedding the validated corpus.
// Postings are rebuilt on load, so the serialized form is canonical and
// rebuilding from the same corpus is byte-identical.
inline constexpr const char* kIndexMagic = "tpiece-index\t1";

inline void save_index(const ParallelCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << kIndexMagic << '\n' << corpus.size() << '\n';
  for (const auto& ex : corpus.examples) {
    out << join_tokens(ex.source) << '\n'
        << join_tokens(ex.target) << '\n'
        << format_alignment(ex.alignment) << '\n';
  }
}

struct IndexedCorpus {
  ParallelCorpus corpus;
  InvertedIndex index;
};

inline IndexedCorpus load_index(const std::string& path) {
  auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != kIndexMagic)
    throw ValidationError(path + ": not a tpiece index artifact");
  if (lines.size() < 2) throw ValidationError(path + ": truncated index artifact");
  size_t n = 0;
  try {
    n = std::stoul(lines[1]);
  } catch (const std::exception&) {
    throw ValidationError(path + ": malformed example count '" + lines[1] + "'");
  }
  if (lines.size() != 2 + 3 * n)
    throw ValidationError(path + ": expected " + std::to_string(2 + 3 * n) + " lines, found " +
                          std::to_string(lines.size()));
  IndexedCorpus ic;
  ic.corpus.examples.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    ParallelExample ex;
    ex.id = static_cast<int>(k);
    ex.source = split_line(lines[2 + 3 * k], path, 3 + 3 * k);
    ex.target = split_line(lines[3 + 3 * k], path, 4 + 3 * k);
    ex.alignment = parse_alignment_line(lines[4 + 3 * k], path, 5 + 3 * k, ex.source.size(), ex.target.size());
    ic.corpus.examples.push_back(std::move(ex));
  }
  ic.index = build_index(ic.corpus);
  return ic;
}

}  // namespace tpiece

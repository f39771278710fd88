#pragma once

// Translation pieces: target n-grams (1-4 tokens) from retrieved sentence
// pairs whose every token is aligned only to unedited source words. Pieces
// from all matches are merged into a per-input table scored by the maximum
// similarity of a retrieving sentence, with the unigram list kept for the
// sparse decode-time update.

#include <cstdio>
#include <map>
#include <set>

#include "tpiece/retrieval.hpp"
#include "tpiece/similarity.hpp"

namespace tpiece {

using Piece = std::vector<Token>;

inline constexpr int kMaxPieceLen = 4;

struct PieceTable {
  std::map<Piece, double> scores;      // every score in (0,1]; closed under contiguous sub-spans
  std::vector<Token> unigrams;         // exactly the length-1 keys, sorted
  bool empty() const { return scores.empty(); }

  double score(const Piece& p) const {
    auto it = scores.find(p);
    return it == scores.end() ? 0.0 : it->second;
  }
  bool contains(const Piece& p) const { return scores.count(p) != 0; }

  void rebuild_unigrams() {
    unigrams.clear();
    for (const auto& [p, s] : scores)
      if (p.size() == 1) unigrams.push_back(p[0]);
  }
};

// A target position is blocked when some alignment link sends it to an
// edited source word; unaligned target words never block collection. A span
// is collected iff none of its positions is blocked.
inline std::set<Piece> collect_pieces_single(const RetrievedMatch& match) {
  const Sentence& y = match.example.target;
  const size_t len = y.size();
  std::vector<char> blocked(len, 0);
  std::vector<char> unedited(match.example.source.size(), 0);
  for (int p : match.unedited) unedited[p] = 1;
  for (const auto& link : match.example.alignment)
    if (!unedited[link.src_pos]) blocked[link.tgt_pos] = 1;

  std::set<Piece> pieces;
  for (size_t i = 0; i < len; ++i) {
    Piece span;
    for (size_t j = i; j < len && j - i < kMaxPieceLen; ++j) {
      if (blocked[j]) break;
      span.push_back(y[j]);
      pieces.insert(span);
    }
  }
  return pieces;
}

// Union of per-match pieces, each scored by the maximum similarity over the
// matches that contributed it. Matches with similarity 0 carry no evidence
// (their score would make the reward vanish) and are skipped, which keeps
// scores inside (0,1].
inline PieceTable build_piece_table(const std::vector<RetrievedMatch>& matches) {
  PieceTable table;
  for (const auto& m : matches) {
    if (m.similarity <= 0.0) continue;
    for (const auto& p : collect_pieces_single(m)) {
      auto [it, inserted] = table.scores.emplace(p, m.similarity);
      if (!inserted && m.similarity > it->second) it->second = m.similarity;
    }
  }
  table.rebuild_unigrams();
  return table;
}

// Ablation: same key set, every score forced to 1.
inline PieceTable binarize_table(const PieceTable& table) {
  PieceTable out;
  for (const auto& [p, s] : table.scores) out.scores.emplace(p, 1.0);
  out.rebuild_unigrams();
  return out;
}

// Full retrieval-to-table pipeline for one input sentence.
inline PieceTable collect_table_for(const InvertedIndex& index, const ParallelCorpus& corpus,
                                    const Sentence& x, int M) {
  std::vector<RetrievedMatch> matches;
  for (const auto& cand : search(index, x, M))
    matches.push_back(compute_match(x, corpus.examples[cand.example_id]));
  return build_piece_table(matches);
}

// TSV serialization: space-joined piece, TAB, score with 6 decimal digits,
// sorted by token sequence.
inline void save_table(const PieceTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  char buf[32];
  for (const auto& [p, s] : table.scores) {
    std::snprintf(buf, sizeof(buf), "%.6f", s);
    out << join_tokens(p) << '\t' << buf << '\n';
  }
}

inline PieceTable load_table(const std::string& path) {
  auto lines = detail::read_lines(path);
  PieceTable table;
  for (size_t k = 0; k < lines.size(); ++k) {
    const std::string& line = lines[k];
    size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw ValidationError(path + ":" + std::to_string(k + 1) + ": malformed piece line");
    Piece piece = split_line(line.substr(0, tab), path, k + 1);
    if (piece.size() > kMaxPieceLen)
      throw ValidationError(path + ":" + std::to_string(k + 1) + ": piece longer than " +
                            std::to_string(kMaxPieceLen) + " tokens");
    double score = 0.0;
    try {
      size_t used = 0;
      score = std::stod(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ValidationError(path + ":" + std::to_string(k + 1) + ": malformed score");
    }
    if (!(score > 0.0 && score <= 1.0))
      throw ValidationError(path + ":" + std::to_string(k + 1) + ": score " + std::to_string(score) +
                            " outside (0,1]");
    if (!table.scores.emplace(std::move(piece), score).second)
      throw ValidationError(path + ":" + std::to_string(k + 1) + ": duplicate piece");
  }
  // sub-span closure: every contiguous sub-span of a stored piece is stored
  for (const auto& [p, s] : table.scores) {
    for (size_t i = 0; i < p.size(); ++i) {
      for (size_t j = i; j < p.size(); ++j) {
        if (i == 0 && j + 1 == p.size()) continue;
        Piece sub(p.begin() + i, p.begin() + j + 1);
        if (!table.contains(sub))
          throw ValidationError(path + ": sub-span closure violated: '" + join_tokens(sub) +
                                "' missing for piece '" + join_tokens(p) + "'");
      }
    }
  }
  table.rebuild_unigrams();
  return table;
}

}  // namespace tpiece

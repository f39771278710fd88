#pragma once

// Output scoring and corpus analyses: corpus BLEU, length ratio, test/train
// similarity statistics, high/low-similarity splits, and counts of correctly
// translated n-grams bucketed by training frequency.

#include <array>
#include <map>

#include "tpiece/pieces.hpp"

namespace tpiece {

namespace detail {

// Multiset of n-grams (1..max_n) keyed by token sequence.
inline std::map<Piece, int> ngram_counts(const Sentence& s, int max_n) {
  std::map<Piece, int> counts;
  for (size_t i = 0; i < s.size(); ++i) {
    Piece gram;
    for (size_t j = i; j < s.size() && j - i < static_cast<size_t>(max_n); ++j) {
      gram.push_back(s[j]);
      counts[gram] += 1;
    }
  }
  return counts;
}

}  // namespace detail

// Set of distinct n-grams up to max_n contained in a sentence.
inline std::set<Piece> uniq_ngrams(const Sentence& s, int max_n = 4) {
  std::set<Piece> out;
  for (size_t i = 0; i < s.size(); ++i) {
    Piece gram;
    for (size_t j = i; j < s.size() && j - i < static_cast<size_t>(max_n); ++j) {
      gram.push_back(s[j]);
      out.insert(gram);
    }
  }
  return out;
}

// Corpus-level BLEU in [0,100]: clipped modified n-gram precisions for
// n=1..4 aggregated over the corpus, geometric mean, brevity penalty
// exp(1-r/c) when c <= r. No smoothing; any zero precision gives 0.
inline double corpus_bleu(const std::vector<Sentence>& hypotheses, const std::vector<Sentence>& references) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("corpus_bleu: got " + std::to_string(hypotheses.size()) + " hypotheses for " +
                                std::to_string(references.size()) + " references");
  constexpr int kOrder = 4;
  std::array<long, kOrder> matched{}, total{};
  long hyp_len = 0, ref_len = 0;
  for (size_t k = 0; k < hypotheses.size(); ++k) {
    const Sentence& hyp = hypotheses[k];
    const Sentence& ref = references[k];
    hyp_len += static_cast<long>(hyp.size());
    ref_len += static_cast<long>(ref.size());
    auto hyp_counts = detail::ngram_counts(hyp, kOrder);
    auto ref_counts = detail::ngram_counts(ref, kOrder);
    for (const auto& [gram, count] : hyp_counts) {
      int n = static_cast<int>(gram.size());
      total[n - 1] += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
    }
  }
  double log_precision = 0.0;
  for (int n = 0; n < kOrder; ++n) {
    if (matched[n] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
  }
  double bp = hyp_len <= ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len)) : 1.0;
  return 100.0 * bp * std::exp(log_precision / kOrder);
}

// Smoothed sentence-level BLEU (add-one on the n>1 precisions), for
// diagnostics only; corpus_bleu is the reported metric.
inline double sentence_bleu(const Sentence& hyp, const Sentence& ref) {
  constexpr int kOrder = 4;
  double log_precision = 0.0;
  auto hyp_counts = detail::ngram_counts(hyp, kOrder);
  auto ref_counts = detail::ngram_counts(ref, kOrder);
  std::array<long, kOrder> matched{}, total{};
  for (const auto& [gram, count] : hyp_counts) {
    int n = static_cast<int>(gram.size());
    total[n - 1] += count;
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
  }
  for (int n = 0; n < kOrder; ++n) {
    double smooth = n == 0 ? 0.0 : 1.0;
    double num = static_cast<double>(matched[n]) + smooth;
    double den = static_cast<double>(total[n]) + smooth;
    if (num <= 0.0 || den <= 0.0) return 0.0;
    log_precision += std::log(num / den);
  }
  if (hyp.empty()) return 0.0;
  double bp = hyp.size() <= ref.size()
                  ? std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()))
                  : 1.0;
  return 100.0 * bp * std::exp(log_precision / kOrder);
}

inline double length_ratio(const std::vector<Sentence>& hypotheses, const std::vector<Sentence>& references) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("length_ratio: hypothesis/reference count mismatch");
  long hyp = 0, ref = 0;
  for (const auto& s : hypotheses) hyp += static_cast<long>(s.size());
  for (const auto& s : references) ref += static_cast<long>(s.size());
  return static_cast<double>(hyp) / static_cast<double>(ref);
}

// Max similarity between the input and any retrieved source; 0 when nothing
// was retrieved.
inline double similarity_to_train(const std::vector<RetrievedMatch>& matches) {
  double best = 0.0;
  for (const auto& m : matches) best = std::max(best, m.similarity);
  return best;
}

inline double similarity_to_train(const InvertedIndex& index, const ParallelCorpus& corpus, const Sentence& x,
                                  int M) {
  double best = 0.0;
  for (const auto& cand : search(index, x, M))
    best = std::max(best, compute_match(x, corpus.examples[cand.example_id]).similarity);
  return best;
}

// Mean over the test set of the per-sentence max similarity.
inline double testset_similarity(const std::vector<Sentence>& test, const InvertedIndex& index,
                                 const ParallelCorpus& corpus, int M) {
  if (test.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& x : test) sum += similarity_to_train(index, corpus, x, M);
  return sum / static_cast<double>(test.size());
}

// Sorts by similarity descending (stable in original position) and assigns
// the first ceil(n/2) indices to the high half.
inline std::pair<std::vector<int>, std::vector<int>> split_half_by_similarity(const std::vector<double>& sims) {
  if (sims.size() < 2) throw std::invalid_argument("split_half_by_similarity: need at least 2 sentences");
  std::vector<int> order(sims.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sims[a] > sims[b]; });
  size_t h = (sims.size() + 1) / 2;
  std::vector<int> high(order.begin(), order.begin() + h);
  std::vector<int> low(order.begin() + h, order.end());
  return {std::move(high), std::move(low)};
}

// Buckets [0,0.1), [0.1,0.2), ..., [0.9,1) plus a separate bucket for
// exactly 1.
struct SimilarityHistogram {
  std::array<long, 11> counts{};
  long total = 0;

  static std::string label(int bucket) {
    if (bucket == 10) return "1";
    char buf[16];
    std::snprintf(buf, sizeof(buf), "[%.1f,%.1f)", bucket / 10.0, (bucket + 1) / 10.0);
    return buf;
  }
  double percent(int bucket) const {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(counts[bucket]) / static_cast<double>(total);
  }
};

inline SimilarityHistogram similarity_histogram(const std::vector<double>& sims) {
  SimilarityHistogram hist;
  for (double v : sims) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("similarity_histogram: value " + std::to_string(v) + " outside [0,1]");
    int bucket = v == 1.0 ? 10 : std::min(9, static_cast<int>(v * 10.0));
    hist.counts[bucket] += 1;
    hist.total += 1;
  }
  return hist;
}

// Sentence-level presence counts over the training target side: for each
// distinct n-gram, in how many training sentences it appears.
struct OccurTable {
  std::map<Piece, long> counts;
  long occur(const Piece& u) const {
    auto it = counts.find(u);
    return it == counts.end() ? 0 : it->second;
  }
};

inline OccurTable build_occur_table(const ParallelCorpus& train, int max_n = 4) {
  OccurTable table;
  for (const auto& ex : train.examples)
    for (const auto& gram : uniq_ngrams(ex.target, max_n)) table.counts[gram] += 1;
  return table;
}

inline long occur(const Piece& u, const ParallelCorpus& train) {
  long count = 0;
  for (const auto& ex : train.examples)
    if (uniq_ngrams(ex.target).count(u)) ++count;
  return count;
}

// Full histogram gamma -> number of correctly translated n-grams (present
// in both output and reference, counted once per sentence) whose training
// occurrence equals gamma. min_n/max_n restrict the pooled orders for the
// per-n diagnostic breakdown.
inline std::map<long, long> count_gamma_histogram(const std::vector<Sentence>& outputs,
                                                  const std::vector<Sentence>& references, const OccurTable& train,
                                                  int min_n = 1, int max_n = 4) {
  if (outputs.size() != references.size())
    throw std::invalid_argument("count_gamma: output/reference count mismatch");
  std::map<long, long> hist;
  for (size_t k = 0; k < outputs.size(); ++k) {
    auto out_grams = uniq_ngrams(outputs[k], max_n);
    auto ref_grams = uniq_ngrams(references[k], max_n);
    for (const auto& gram : out_grams) {
      if (static_cast<int>(gram.size()) < min_n) continue;
      if (!ref_grams.count(gram)) continue;
      hist[train.occur(gram)] += 1;
    }
  }
  return hist;
}

// Counts for an explicit list of exact gamma values.
inline std::map<long, long> count_gamma(const std::vector<Sentence>& outputs,
                                        const std::vector<Sentence>& references, const OccurTable& train,
                                        const std::vector<long>& gammas) {
  auto hist = count_gamma_histogram(outputs, references, train);
  std::map<long, long> out;
  for (long g : gammas) {
    auto it = hist.find(g);
    out[g] = it == hist.end() ? 0 : it->second;
  }
  return out;
}

inline std::string gamma_range_label(const std::vector<long>& edges, size_t i) {
  if (i + 1 < edges.size()) return "[" + std::to_string(edges[i]) + "," + std::to_string(edges[i + 1]) + ")";
  return "[" + std::to_string(edges[i]) + ",inf)";
}

// Counts aggregated over half-open ranges [e0,e1), [e1,e2), ..., [ek,inf).
inline std::map<std::string, long> count_gamma_ranges(const std::vector<Sentence>& outputs,
                                                      const std::vector<Sentence>& references,
                                                      const OccurTable& train, const std::vector<long>& edges) {
  if (edges.empty()) throw std::invalid_argument("count_gamma_ranges: need at least one edge");
  auto hist = count_gamma_histogram(outputs, references, train);
  std::map<std::string, long> out;
  for (size_t i = 0; i < edges.size(); ++i) out[gamma_range_label(edges, i)] = 0;
  for (const auto& [gamma, count] : hist) {
    for (size_t i = edges.size(); i-- > 0;) {
      if (gamma >= edges[i]) {
        out[gamma_range_label(edges, i)] += count;
        break;
      }
    }
  }
  return out;
}

struct EvalReport {
  double corpus_bleu = 0.0;
  double length_ratio = 0.0;
  std::vector<double> similarities;
  SimilarityHistogram histogram;
  std::map<long, long> count_gamma;
};

}  // namespace tpiece

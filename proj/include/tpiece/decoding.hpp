#pragma once

// Beam-search decoding over an abstract conditional translation model with
// per-step piece rewards added to the output log-probabilities. Rewards are
// added to post-softmax log-probs and nothing is renormalized; only tokens
// in the table's unigram list are ever touched. Two deterministic toy
// models are provided for exact testing: a table model that plays back an
// explicit listing of conditional distributions, and a lexicon model that
// corrupts a word-for-word translation with seeded noise.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <unordered_map>

#include "tpiece/pieces.hpp"

namespace tpiece {

inline constexpr const char* kBosToken = "<s>";
inline constexpr const char* kEosToken = "</s>";
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Vocabulary {
  std::vector<Token> tokens;  // [0] = BOS, [1] = EOS, then content tokens sorted
  std::unordered_map<Token, int> index;
  static constexpr int kBosId = 0;
  static constexpr int kEosId = 1;

  int find(const Token& t) const {
    auto it = index.find(t);
    return it == index.end() ? -1 : it->second;
  }
  size_t size() const { return tokens.size(); }
};

inline Vocabulary make_vocabulary(std::vector<Token> content) {
  std::sort(content.begin(), content.end());
  content.erase(std::unique(content.begin(), content.end()), content.end());
  Vocabulary v;
  v.tokens = {kBosToken, kEosToken};
  for (auto& t : content)
    if (t != kBosToken && t != kEosToken) v.tokens.push_back(std::move(t));
  for (size_t i = 0; i < v.tokens.size(); ++i) v.index.emplace(v.tokens[i], static_cast<int>(i));
  return v;
}

// Provider of next-token log-probability distributions given the source
// sentence and the emitted target prefix (BOS and EOS are implicit: the
// prefix never contains BOS, and emitting EOS finishes a hypothesis).
// Implementations must be safe for concurrent read-only queries.
class TranslationModel {
 public:
  virtual ~TranslationModel() = default;
  virtual const Vocabulary& vocab() const = 0;
  virtual std::vector<double> next_log_distribution(const Sentence& source, const Sentence& prefix) const = 0;
};

struct DecodeConfig {
  double lambda = 1.5;
  int beam_size = 5;
  int max_output_len = 0;  // 0 = auto: 2*|source|+10
  static constexpr int max_ngram = kMaxPieceLen;
};

struct Hypothesis {
  Sentence prefix;  // emitted tokens; ends with EOS iff finished
  double base_logprob = 0.0;
  double reward_total = 0.0;
  bool finished = false;

  double guided_score() const { return base_logprob + reward_total; }
  // Length-normalized combined score; |Y| excludes BOS but includes EOS.
  double normalized_score() const {
    return prefix.empty() ? guided_score() : guided_score() / static_cast<double>(prefix.size());
  }
  Sentence output() const {  // surface tokens, EOS stripped
    if (finished && !prefix.empty()) return Sentence(prefix.begin(), prefix.end() - 1);
    return prefix;
  }
};

struct DecodeResult {
  std::vector<Hypothesis> nbest;  // ranked by normalized score, best first
  const Hypothesis& best() const { return nbest.front(); }
};

// Sparse per-step reward increments: for every table unigram u that the
// model can emit, lambda * score(u) plus lambda * score of each longer
// piece formed by the last 1..3 history tokens followed by u, stopping at
// the first absent extension (sound because tables are sub-span closed).
inline std::unordered_map<int, double> piece_reward_increments(const Sentence& history, const PieceTable& table,
                                                               double lambda, const Vocabulary& vocab) {
  std::unordered_map<int, double> incr;
  if (lambda == 0.0 || table.empty()) return incr;
  Piece gram;
  for (const auto& u : table.unigrams) {
    int vid = vocab.find(u);
    if (vid < 0) continue;
    double r = lambda * table.score({u});
    for (int i = 1; i <= DecodeConfig::max_ngram - 1; ++i) {
      if (history.size() < static_cast<size_t>(i)) break;
      gram.assign(history.end() - i, history.end());
      gram.push_back(u);
      auto it = table.scores.find(gram);
      if (it == table.scores.end()) break;
      r += lambda * it->second;
    }
    incr.emplace(vid, r);
  }
  return incr;
}

// Reward update of one full output layer; entries for tokens outside the
// table's unigram list are returned bit-identical.
inline std::vector<double> apply_piece_rewards(std::vector<double> logdist, const Sentence& history,
                                               const PieceTable& table, double lambda, const Vocabulary& vocab) {
  if (logdist.size() != vocab.size())
    throw std::runtime_error("apply_piece_rewards: distribution length " + std::to_string(logdist.size()) +
                             " does not match vocabulary size " + std::to_string(vocab.size()));
  for (const auto& [vid, r] : piece_reward_increments(history, table, lambda, vocab)) logdist[vid] += r;
  return logdist;
}

namespace detail {

inline void check_distribution(const std::vector<double>& logdist, size_t vocab_size) {
  if (logdist.size() != vocab_size)
    throw std::runtime_error("model returned distribution of length " + std::to_string(logdist.size()) +
                             ", expected " + std::to_string(vocab_size));
  double sum = 0.0;
  for (double lp : logdist) sum += std::exp(lp);
  if (!(std::fabs(sum - 1.0) <= 1e-6))
    throw std::runtime_error("model distribution not normalized: sum(exp) = " + std::to_string(sum));
}

inline bool hypothesis_order(const Hypothesis& a, const Hypothesis& b, double sa, double sb) {
  if (sa != sb) return sa > sb;
  return a.prefix < b.prefix;
}

}  // namespace detail

// Standard beam search with guided per-step scores. Hypotheses emitting EOS
// move to a finished pool; decoding stops once beam_size hypotheses have
// finished or max_output_len steps were taken. Pruning uses the unnormalized
// cumulative guided score; the final ranking normalizes by output length.
inline DecodeResult beam_search(const TranslationModel& model, const Sentence& source, const PieceTable& table,
                                const DecodeConfig& config) {
  if (config.beam_size < 1) throw std::invalid_argument("beam_search: beam_size must be >= 1");
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda))
    throw std::invalid_argument("beam_search: lambda must be finite and >= 0");
  const Vocabulary& vocab = model.vocab();
  const int max_len = config.max_output_len > 0 ? config.max_output_len
                                                : 2 * static_cast<int>(source.size()) + 10;

  std::vector<Hypothesis> live(1);
  std::vector<Hypothesis> pool;
  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Hypothesis> candidates;
    candidates.reserve(live.size() * vocab.size());
    for (const auto& h : live) {
      std::vector<double> dist = model.next_log_distribution(source, h.prefix);
      detail::check_distribution(dist, vocab.size());
      auto incr = piece_reward_increments(h.prefix, table, config.lambda, vocab);
      for (size_t v = 0; v < vocab.size(); ++v) {
        if (static_cast<int>(v) == Vocabulary::kBosId) continue;
        if (dist[v] == kNegInf) continue;  // zero-probability continuation
        Hypothesis next = h;
        next.prefix.push_back(vocab.tokens[v]);
        next.base_logprob += dist[v];
        auto it = incr.find(static_cast<int>(v));
        if (it != incr.end()) next.reward_total += it->second;
        next.finished = static_cast<int>(v) == Vocabulary::kEosId;
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Hypothesis& a, const Hypothesis& b) {
      return detail::hypothesis_order(a, b, a.guided_score(), b.guided_score());
    });
    live.clear();
    int taken = 0;
    for (const auto& c : candidates) {
      if (taken >= config.beam_size) break;
      if (c.finished)
        pool.push_back(c);
      else
        live.push_back(c);
      ++taken;
    }
    if (static_cast<int>(pool.size()) >= config.beam_size) break;
  }

  std::vector<Hypothesis>& ranked = pool.empty() ? live : pool;
  std::sort(ranked.begin(), ranked.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return detail::hypothesis_order(a, b, a.normalized_score(), b.normalized_score());
  });
  DecodeResult result;
  for (const auto& h : ranked) {
    result.nbest.push_back(h);
    if (static_cast<int>(result.nbest.size()) >= config.beam_size) break;
  }
  if (result.nbest.empty()) result.nbest.push_back(Hypothesis{});
  return result;
}

// Retrieval -> matches -> piece table -> guided beam search. With M = 0 or
// lambda = 0 this is exactly the baseline decoder.
inline DecodeResult guided_translate(const InvertedIndex& index, const ParallelCorpus& corpus,
                                     const TranslationModel& model, const Sentence& x, int M,
                                     const DecodeConfig& config, bool binary_reward = false) {
  PieceTable table = collect_table_for(index, corpus, x, M);
  if (binary_reward) table = binarize_table(table);
  return beam_search(model, x, table, config);
}

// ---------------------------------------------------------------------------
// Table model: plays back an explicit listing of conditional distributions.

struct ListingEntry {
  std::string source_key;  // space-joined source sentence, or "*" for the fallback
  Sentence prefix;         // emitted target prefix, or {"*"} for the fallback
  std::vector<std::pair<Token, double>> probs;
};

inline bool is_fallback_entry(const ListingEntry& e) {
  return e.source_key == "*" && e.prefix.size() == 1 && e.prefix[0] == "*";
}

class TableModel : public TranslationModel {
 public:
  explicit TableModel(const std::vector<ListingEntry>& entries) {
    std::vector<Token> content;
    bool have_fallback = false;
    for (const auto& e : entries) {
      double sum = 0.0;
      for (const auto& [tok, p] : e.probs) {
        if (p < 0.0) throw ValidationError("table model: negative probability for '" + tok + "'");
        sum += p;
        content.push_back(tok);
      }
      if (std::fabs(sum - 1.0) > 1e-9)
        throw ValidationError("table model: distribution for (" + e.source_key + ", " + join_tokens(e.prefix) +
                              ") sums to " + std::to_string(sum));
      have_fallback = have_fallback || is_fallback_entry(e);
    }
    if (!have_fallback) throw ValidationError("table model: missing fallback entry (*\t*\t...)");
    vocab_ = make_vocabulary(std::move(content));
    for (const auto& e : entries) {
      std::vector<double> dist(vocab_.size(), kNegInf);
      std::vector<char> seen(vocab_.size(), 0);
      for (const auto& [tok, p] : e.probs) {
        int vid = vocab_.find(tok);
        if (seen[vid]) throw ValidationError("table model: duplicate token '" + tok + "' in one distribution");
        seen[vid] = 1;
        dist[vid] = p > 0.0 ? std::log(p) : kNegInf;
      }
      if (is_fallback_entry(e)) {
        fallback_ = dist;
        continue;
      }
      if (!contexts_.emplace(context_key(e.source_key, e.prefix), std::move(dist)).second)
        throw ValidationError("table model: duplicate context (" + e.source_key + ", " + join_tokens(e.prefix) + ")");
    }
  }

  const Vocabulary& vocab() const override { return vocab_; }

  std::vector<double> next_log_distribution(const Sentence& source, const Sentence& prefix) const override {
    auto it = contexts_.find(context_key(join_tokens(source), prefix));
    return it == contexts_.end() ? fallback_ : it->second;
  }

 private:
  static std::string context_key(const std::string& source_key, const Sentence& prefix) {
    return source_key + "\x1f" + join_tokens(prefix);
  }
  Vocabulary vocab_;
  std::unordered_map<std::string, std::vector<double>> contexts_;
  std::vector<double> fallback_;
};

inline TableModel make_table_model(const std::vector<ListingEntry>& entries) { return TableModel(entries); }

// One record per line: source-key TAB prefix-tokens TAB token:prob,token:prob,...
// The prefix field is empty at the start of decoding; "*" in both key fields
// marks the fallback record.
inline TableModel load_table_model(const std::string& path) {
  auto lines = detail::read_lines(path);
  std::vector<ListingEntry> entries;
  for (size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    size_t t1 = lines[k].find('\t');
    size_t t2 = t1 == std::string::npos ? std::string::npos : lines[k].find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(k + 1) + ": expected 3 tab-separated fields");
    ListingEntry e;
    e.source_key = lines[k].substr(0, t1);
    std::string prefix_field = lines[k].substr(t1 + 1, t2 - t1 - 1);
    if (!prefix_field.empty()) e.prefix = split_line(prefix_field, path, k + 1);
    std::string probs = lines[k].substr(t2 + 1);
    size_t start = 0;
    while (start <= probs.size()) {
      size_t comma = probs.find(',', start);
      std::string item = probs.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      size_t colon = item.rfind(':');
      if (colon == std::string::npos || colon == 0)
        throw ValidationError(path + ":" + std::to_string(k + 1) + ": malformed token:prob item '" + item + "'");
      double p = 0.0;
      try {
        size_t used = 0;
        p = std::stod(item.substr(colon + 1), &used);
        if (used != item.size() - colon - 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ValidationError(path + ":" + std::to_string(k + 1) + ": malformed probability in '" + item + "'");
      }
      e.probs.emplace_back(item.substr(0, colon), p);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    entries.push_back(std::move(e));
  }
  return TableModel(entries);
}

// ---------------------------------------------------------------------------
// Lexicon model: word-for-word translation with seeded, reproducible noise.

namespace detail {

inline uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t hash_sentence(const Sentence& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : s) h = fnv1a(t, h) * 0x100000001b3ULL + 0x1f;
  return h;
}

}  // namespace detail

// At step t the distribution peaks on the lexicon translation of source
// token t (EOS past the source end) with mass 1-eps, and eps is spread
// uniformly over a per-token confusion set that contains the correct token.
// With probability eps -- drawn from a hash of (seed, source, t), so the
// model is a pure function -- the peak moves to a uniform member of the
// confusion set instead, which yields an expected per-token argmax accuracy
// of exactly 1 - eps*(1 - 1/confusion_size). Steps past the source end are
// never corrupted so that termination stays stable. confusion_pools can
// restrict which target tokens a given target token gets confused with
// (e.g. words of the same category, or variant surface forms the model
// cannot pick between); pool members enter the vocabulary even when no
// lexicon entry produces them. The default pool is the whole vocabulary.
class LexiconModel : public TranslationModel {
 public:
  LexiconModel(const std::unordered_map<Token, Token>& lexicon, double noise_eps, uint64_t seed,
               int confusion_size = 4,
               const std::unordered_map<Token, std::vector<Token>>& confusion_pools = {})
      : lexicon_(lexicon), eps_(noise_eps), seed_(seed) {
    if (!(noise_eps >= 0.0 && noise_eps < 1.0))
      throw std::invalid_argument("lexicon model: noise_eps must be in [0,1)");
    std::vector<Token> targets;
    for (const auto& [s, t] : lexicon) targets.push_back(t);
    for (const auto& [t, pool] : confusion_pools) {
      targets.push_back(t);
      for (const auto& p : pool) targets.push_back(p);
    }
    vocab_ = make_vocabulary(std::move(targets));
    const int content = static_cast<int>(vocab_.size()) - 2;
    k_ = std::max(1, std::min(confusion_size, content));
    for (size_t v = 1; v < vocab_.size(); ++v) {  // EOS and every content token
      std::vector<int> set = {static_cast<int>(v)};
      std::vector<int> pool;
      if (auto it = confusion_pools.find(vocab_.tokens[v]); it != confusion_pools.end()) {
        for (const auto& t : it->second) {
          int id = vocab_.find(t);
          if (id >= 2 && id != static_cast<int>(v)) pool.push_back(id);
        }
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
      }
      std::mt19937_64 rng(detail::splitmix64(seed ^ detail::fnv1a(vocab_.tokens[v])));
      if (pool.empty()) {  // whole-vocabulary default
        while (static_cast<int>(set.size()) < k_) {
          int cand = 2 + static_cast<int>(rng() % content);
          if (std::find(set.begin(), set.end(), cand) == set.end()) set.push_back(cand);
        }
      } else {  // restricted pool; the set may come out smaller than k
        int want = std::min<int>(k_, 1 + static_cast<int>(pool.size()));
        while (static_cast<int>(set.size()) < want) {
          int cand = pool[rng() % pool.size()];
          if (std::find(set.begin(), set.end(), cand) == set.end()) set.push_back(cand);
        }
      }
      std::sort(set.begin(), set.end());
      confusion_[static_cast<int>(v)] = std::move(set);
    }
  }

  const Vocabulary& vocab() const override { return vocab_; }
  int confusion_size() const { return k_; }

  std::vector<double> next_log_distribution(const Sentence& source, const Sentence& prefix) const override {
    const size_t t = prefix.size();
    int correct;
    if (t >= source.size()) {
      correct = Vocabulary::kEosId;
    } else {
      auto it = lexicon_.find(source[t]);
      if (it == lexicon_.end())
        throw std::runtime_error("lexicon model: no entry for source token '" + source[t] + "'");
      correct = vocab_.find(it->second);
    }
    const std::vector<int>& set = confusion_.at(correct);
    int peak = correct;
    if (correct != Vocabulary::kEosId && eps_ > 0.0) {
      uint64_t h = detail::splitmix64(seed_ ^ detail::splitmix64(detail::hash_sentence(source) + t));
      double u = static_cast<double>(h >> 11) * 0x1.0p-53;
      if (u < eps_) peak = set[detail::splitmix64(h) % set.size()];
    }
    std::vector<double> probs(vocab_.size(), 0.0);
    probs[peak] += 1.0 - eps_;
    for (int v : set) probs[v] += eps_ / static_cast<double>(set.size());
    std::vector<double> dist(vocab_.size(), kNegInf);
    for (size_t v = 0; v < probs.size(); ++v)
      if (probs[v] > 0.0) dist[v] = std::log(probs[v]);
    return dist;
  }

 private:
  std::unordered_map<Token, Token> lexicon_;
  double eps_;
  uint64_t seed_;
  int k_;
  Vocabulary vocab_;
  std::unordered_map<int, std::vector<int>> confusion_;
};

inline LexiconModel make_lexicon_model(const std::unordered_map<Token, Token>& lexicon, double noise_eps,
                                       uint64_t seed, int confusion_size = 4,
                                       const std::unordered_map<Token, std::vector<Token>>& confusion_pools = {}) {
  return LexiconModel(lexicon, noise_eps, seed, confusion_size, confusion_pools);
}

// Lexicon file: source TAB target per line.
inline std::unordered_map<Token, Token> load_lexicon(const std::string& path) {
  auto lines = detail::read_lines(path);
  std::unordered_map<Token, Token> lex;
  for (size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    size_t tab = lines[k].find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == lines[k].size())
      throw ValidationError(path + ":" + std::to_string(k + 1) + ": expected 'source TAB target'");
    lex[lines[k].substr(0, tab)] = lines[k].substr(tab + 1);
  }
  return lex;
}

}  // namespace tpiece

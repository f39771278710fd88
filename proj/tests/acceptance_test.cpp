// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criteria 8-10 share one synthetic narrow-domain run.

#include <chrono>
#include <iomanip>
#include <iostream>

#include "synthetic.hpp"
#include "testutil.hpp"

using namespace tpiece;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail = "") {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << number << ": " << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!pass) ++g_failures;
}

double elapsed_s(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

// --- criterion 1: piece collection vs brute-force span enumeration ---------

void criterion_collect_oracle() {
  auto start = Clock::now();
  testutil::Rng rng(1001);
  std::vector<Token> src_vocab = {"a", "b", "c", "d", "e", "f"};
  std::vector<Token> tgt_vocab = {"p", "q", "r", "s", "t", "u"};
  int mismatches = 0;
  const int instances = 1200;
  for (int iter = 0; iter < instances; ++iter) {
    Sentence x = testutil::random_sentence(rng, src_vocab, 1, 12);
    auto ex = testutil::random_example(rng, 0, src_vocab, tgt_vocab, 12);
    auto match = compute_match(x, ex);
    if (collect_pieces_single(match) != testutil::brute_force_collect(match)) ++mismatches;
  }
  double secs = elapsed_s(start);
  report(1, "piece collection equals brute-force span enumeration", mismatches == 0 && secs < 10.0,
         std::to_string(instances) + " instances, " + std::to_string(mismatches) + " mismatches, " +
             fmt(secs) + "s");
}

// --- criterion 2: per-step rewards vs direct evaluation --------------------

void criterion_reward_equivalence() {
  auto start = Clock::now();
  testutil::Rng rng(1002);
  std::vector<Token> src_vocab = {"a", "b", "c", "d"};
  std::vector<Token> tgt_vocab = {"p", "q", "r", "s", "t"};
  auto vocab = make_vocabulary(tgt_vocab);
  int mismatches = 0;
  const int instances = 1200;
  for (int iter = 0; iter < instances; ++iter) {
    auto table = testutil::random_piece_table(rng, src_vocab, tgt_vocab, rng.range(1, 3));
    double lambda = rng.real() * 2.0;
    // per-step vectors over a random history
    Sentence history = testutil::random_sentence(rng, tgt_vocab, 0, 6);
    auto incr = piece_reward_increments(history, table, lambda, vocab);
    for (size_t v = 0; v < vocab.size(); ++v) {
      double direct = testutil::direct_ngram_reward(history, vocab.tokens[v], table, lambda);
      auto it = incr.find(static_cast<int>(v));
      double got = it == incr.end() ? 0.0 : it->second;
      if (std::fabs(got - direct) > 1e-12) ++mismatches;
    }
    // trajectory totals over a random output sequence
    Sentence trajectory = testutil::random_sentence(rng, tgt_vocab, 1, 8);
    double total = 0.0, direct_total = 0.0;
    for (size_t t = 0; t < trajectory.size(); ++t) {
      Sentence h(trajectory.begin(), trajectory.begin() + t);
      auto step = piece_reward_increments(h, table, lambda, vocab);
      auto it = step.find(vocab.find(trajectory[t]));
      total += it == step.end() ? 0.0 : it->second;
      direct_total += testutil::direct_ngram_reward(h, trajectory[t], table, lambda);
    }
    if (std::fabs(total - direct_total) > 1e-12) ++mismatches;
  }
  double secs = elapsed_s(start);
  report(2, "sparse reward update equals direct per-step evaluation", mismatches == 0 && secs < 10.0,
         std::to_string(instances) + " tables, " + std::to_string(mismatches) + " mismatches, " + fmt(secs) +
             "s");
}

// --- criterion 5: closure and monotonicity property ------------------------

void criterion_closure() {
  testutil::Rng rng(1005);
  std::vector<Token> src_vocab = {"a", "b", "c", "d"};
  std::vector<Token> tgt_vocab = {"p", "q", "r", "s"};
  int violations = 0;
  const int instances = 1000;
  for (int iter = 0; iter < instances; ++iter) {
    auto table = testutil::random_piece_table(rng, src_vocab, tgt_vocab, rng.range(1, 5));
    for (const auto& [p, s] : table.scores) {
      if (!(s > 0.0 && s <= 1.0)) ++violations;
      for (size_t i = 0; i < p.size(); ++i) {
        for (size_t j = i; j < p.size(); ++j) {
          Piece sub(p.begin() + i, p.begin() + j + 1);
          auto it = table.scores.find(sub);
          if (it == table.scores.end() || it->second < s) ++violations;
        }
      }
    }
  }
  report(5, "built tables are sub-span closed with monotone scores", violations == 0,
         std::to_string(instances) + " match sets, " + std::to_string(violations) + " violations");
}

// --- criterion 6: similarity math ------------------------------------------

void criterion_similarity() {
  testutil::Rng rng(1006);
  std::vector<Token> vocab = {"a", "b", "c", "d", "e"};
  int violations = 0;
  const int triples = 10000;
  for (int iter = 0; iter < triples; ++iter) {
    Sentence x = testutil::random_sentence(rng, vocab, 1, 10);
    Sentence y = testutil::random_sentence(rng, vocab, 1, 10);
    Sentence z = testutil::random_sentence(rng, vocab, 1, 10);
    int dxy = edit_distance_with_matches(x, y).distance;
    if (dxy != testutil::reference_edit_distance(x, y)) ++violations;
    if (dxy != edit_distance_with_matches(y, x).distance) ++violations;
    int dxz = edit_distance_with_matches(x, z).distance;
    int dzy = edit_distance_with_matches(z, y).distance;
    if (dxy > dxz + dzy) ++violations;
    double sim = sentence_similarity(x, y);
    if (!(sim >= 0.0 && sim <= 1.0)) ++violations;
    if (sentence_similarity(x, x) != 1.0) ++violations;
  }
  report(6, "similarity identities, symmetry, triangle inequality, reference DP", violations == 0,
         std::to_string(triples) + " triples, " + std::to_string(violations) + " violations");
}

// --- criterion 7: BLEU ------------------------------------------------------

void criterion_bleu() {
  testutil::Rng rng(1007);
  std::vector<Token> vocab = {"a", "b", "c", "d", "e"};
  bool ok = true;
  std::vector<Sentence> h;
  for (int i = 0; i < 10; ++i) h.push_back(testutil::random_sentence(rng, vocab, 4, 10));
  ok = ok && std::fabs(corpus_bleu(h, h) - 100.0) < 1e-9;

  double hand = corpus_bleu({split_line("a b c d", "t", 1)}, {split_line("a b c d e", "t", 1)});
  ok = ok && std::fabs(hand - 100.0 * std::exp(1.0 - 5.0 / 4.0)) < 0.01;

  std::vector<Sentence> refs;
  for (int i = 0; i < 10; ++i) refs.push_back(testutil::random_sentence(rng, vocab, 4, 10));
  double before = corpus_bleu(h, refs);
  std::vector<int> perm(h.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine);
  std::vector<Sentence> h2, r2;
  for (int i : perm) {
    h2.push_back(h[i]);
    r2.push_back(refs[i]);
  }
  ok = ok && std::fabs(corpus_bleu(h2, r2) - before) < 1e-9;
  report(7, "BLEU identity, hand-computed pair, permutation invariance", ok);
}

// --- criterion 4: beam search vs exhaustive enumeration --------------------

void criterion_exhaustive_decode() {
  testutil::Rng rng(1004);
  std::vector<Token> tgt_vocab = {"p", "q", "r", "s"};  // 4 tokens + EOS
  int mismatches = 0;
  const int instances = 200;
  for (int iter = 0; iter < instances; ++iter) {
    std::vector<std::pair<Token, double>> fallback;
    double mass = 0.0;
    std::vector<double> w;
    for (size_t i = 0; i <= tgt_vocab.size(); ++i) {
      w.push_back(0.05 + rng.real());
      mass += w.back();
    }
    for (size_t i = 0; i < tgt_vocab.size(); ++i) fallback.emplace_back(tgt_vocab[i], w[i] / mass);
    fallback.emplace_back(kEosToken, w.back() / mass);
    auto model = make_table_model({{"*", {"*"}, fallback}});

    auto table = testutil::random_piece_table(rng, {"a", "b", "c"}, tgt_vocab, rng.range(0, 3));
    DecodeConfig config;
    config.lambda = rng.real() * 2.0;
    config.beam_size = 1024;
    config.max_output_len = 4;
    auto result = beam_search(model, {"a"}, table, config);
    auto oracle = testutil::oracle_decode(model, {"a"}, table, config.lambda, 4);
    if (!oracle.found || result.best().prefix != oracle.prefix ||
        std::fabs(result.best().normalized_score() - oracle.normalized) > 1e-9)
      ++mismatches;
  }
  report(4, "beam 1024 equals exhaustive enumeration on toy instances", mismatches == 0,
         std::to_string(instances) + " models, " + std::to_string(mismatches) + " mismatches");
}

// --- shared synthetic suite for criteria 3, 8, 9, 10 ------------------------

struct SuiteRun {
  synthetic::Suite suite;
  ParallelCorpus train;
  InvertedIndex index;
  std::unique_ptr<LexiconModel> model;
  std::vector<Sentence> base_out, guided_out, binary_out;
  std::vector<double> sims;
  double runtime_s = 0.0;
};

SuiteRun run_synthetic(int n_train, int n_test, uint64_t seed) {
  SuiteRun run;
  auto start = Clock::now();
  run.suite = synthetic::make_suite(n_train, n_test, seed);
  run.train = dedup_corpus(run.suite.train);
  run.index = build_index(run.train);
  run.model = std::make_unique<LexiconModel>(run.suite.lexicon, 0.3, seed + 17, 4, run.suite.confusion_pools);

  DecodeConfig config;
  config.lambda = 1.5;
  config.beam_size = 5;
  const int M = 10;
  for (const auto& x : run.suite.test_src) {
    PieceTable table = collect_table_for(run.index, run.train, x, M);
    PieceTable binary = binarize_table(table);
    PieceTable empty;
    config.lambda = 0.0;
    run.base_out.push_back(beam_search(*run.model, x, empty, config).best().output());
    config.lambda = 1.5;
    run.guided_out.push_back(beam_search(*run.model, x, table, config).best().output());
    run.binary_out.push_back(beam_search(*run.model, x, binary, config).best().output());
    run.sims.push_back(similarity_to_train(run.index, run.train, x, M));
  }
  run.runtime_s = elapsed_s(start);
  return run;
}

void criterion_lambda_zero(const SuiteRun& run) {
  DecodeConfig config;
  config.lambda = 0.0;
  config.beam_size = 5;
  int mismatches = 0;
  for (const auto& x : run.suite.test_src) {
    auto guided = guided_translate(run.index, run.train, *run.model, x, 10, config);
    auto baseline = beam_search(*run.model, x, PieceTable{}, config);
    if (guided.nbest.size() != baseline.nbest.size()) {
      ++mismatches;
      continue;
    }
    for (size_t i = 0; i < guided.nbest.size(); ++i) {
      if (guided.nbest[i].prefix != baseline.nbest[i].prefix ||
          guided.nbest[i].base_logprob != baseline.nbest[i].base_logprob ||
          guided.nbest[i].reward_total != baseline.nbest[i].reward_total)
        ++mismatches;
    }
  }
  report(3, "lambda 0 reproduces baseline n-best lists exactly", mismatches == 0,
         std::to_string(run.suite.test_src.size()) + " sentences, " + std::to_string(mismatches) +
             " mismatches");
}

void criterion_efficacy(const SuiteRun& run) {
  double base = corpus_bleu(run.base_out, run.suite.test_ref);
  double guided = corpus_bleu(run.guided_out, run.suite.test_ref);
  bool pass = guided >= base + 5.0 && run.runtime_s < 300.0;
  report(8, "guided decoding gains at least 5 BLEU on the synthetic suite", pass,
         "baseline " + fmt(base, 2) + ", guided " + fmt(guided, 2) + ", runtime " + fmt(run.runtime_s, 1) +
             "s");
}

void criterion_trends(const SuiteRun& run) {
  const auto& refs = run.suite.test_ref;

  // (a) similarity split
  auto [high, low] = split_half_by_similarity(run.sims);
  auto pick = [&](const std::vector<Sentence>& all, const std::vector<int>& idx) {
    std::vector<Sentence> out;
    for (int i : idx) out.push_back(all[i]);
    return out;
  };
  double gain_high = corpus_bleu(pick(run.guided_out, high), pick(refs, high)) -
                     corpus_bleu(pick(run.base_out, high), pick(refs, high));
  double gain_low = corpus_bleu(pick(run.guided_out, low), pick(refs, low)) -
                    corpus_bleu(pick(run.base_out, low), pick(refs, low));
  report(9, "trend (a): high-similarity half gains at least as much", gain_high >= gain_low,
         "half-H +" + fmt(gain_high, 2) + ", half-L +" + fmt(gain_low, 2));

  // (b) 1/0 reward between baseline and weighted
  double base = corpus_bleu(run.base_out, refs);
  double guided = corpus_bleu(run.guided_out, refs);
  double binary = corpus_bleu(run.binary_out, refs);
  report(9, "trend (b): 1/0 reward lies between baseline and weighted", base <= binary && binary <= guided,
         "baseline " + fmt(base, 2) + " <= binary " + fmt(binary, 2) + " <= weighted " + fmt(guided, 2));

  // (c) Count_gamma ratio shrinks as gamma grows
  auto occ = build_occur_table(run.train);
  std::vector<long> edges = {0, 1, 5, 20};
  auto base_counts = count_gamma_ranges(run.base_out, refs, occ, edges);
  auto guided_counts = count_gamma_ranges(run.guided_out, refs, occ, edges);
  auto ratio = [&](const std::string& bucket) {
    double b = static_cast<double>(base_counts.at(bucket));
    double g = static_cast<double>(guided_counts.at(bucket));
    return b == 0.0 ? 1.0 : g / b;
  };
  double r0 = ratio("[0,1)"), r1 = ratio("[1,5)"), r2 = ratio("[5,20)"), r3 = ratio("[20,inf)");
  bool trend = r1 >= r2 && r2 >= r3 && r1 >= r0;
  report(9, "trend (c): Count_gamma gains peak for rare n-grams and shrink", trend,
         "ratios gamma=0 " + fmt(r0, 2) + ", [1,5) " + fmt(r1, 2) + ", [5,20) " + fmt(r2, 2) + ", [20,inf) " +
             fmt(r3, 2));

  // (d) guided output length stays near the references
  double ratio_len = length_ratio(run.guided_out, refs);
  report(9, "trend (d): length ratio within [0.95, 1.05]", ratio_len >= 0.95 && ratio_len <= 1.05,
         fmt(ratio_len, 4));
}

// --- criterion 10: latency over a 10k index ---------------------------------

void criterion_latency() {
  auto suite = synthetic::make_suite(10000, 200, 77, 50, 5);
  auto train = dedup_corpus(suite.train);
  auto index = build_index(train);

  auto time_pipeline = [&](int M) {
    auto start = Clock::now();
    for (const auto& x : suite.test_src) {
      std::vector<RetrievedMatch> matches;
      for (const auto& cand : search(index, x, M))
        matches.push_back(compute_match(x, train.examples[cand.example_id]));
      build_piece_table(matches);
    }
    return elapsed_s(start) / static_cast<double>(suite.test_src.size());
  };
  // one warm-up pass so allocator effects do not skew the comparison
  time_pipeline(10);
  double at_10 = time_pipeline(10);
  double at_100 = time_pipeline(100);
  bool pass = at_10 < 0.050 && at_100 > at_10;
  report(10, "retrieval + piece collection latency at M=10 under 50 ms and monotone in M", pass,
         "M=10 " + fmt(at_10 * 1000.0, 3) + " ms, M=100 " + fmt(at_100 * 1000.0, 3) + " ms, " +
             std::to_string(train.size()) + " indexed");
}

}  // namespace

int main() {
  criterion_collect_oracle();
  criterion_reward_equivalence();

  auto run = run_synthetic(5000, 500, 4242);
  criterion_lambda_zero(run);
  criterion_exhaustive_decode();
  criterion_closure();
  criterion_similarity();
  criterion_bleu();
  criterion_efficacy(run);
  criterion_trends(run);
  criterion_latency();

  if (g_failures > 0) {
    std::cout << g_failures << " criterion check(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all acceptance criteria passed" << std::endl;
  return 0;
}

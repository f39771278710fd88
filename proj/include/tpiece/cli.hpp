#pragma once

// Batch command-line surface: index building, piece extraction, guided
// decoding, evaluation and retrieval-size benchmarking. Exit codes: 0 on
// success, 1 on runtime failure, 2 on input validation failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "tpiece/decoding.hpp"
#include "tpiece/evaluation.hpp"

namespace tpiece {

namespace cli {

// Source-side input: one pre-tokenized sentence per line, no empty lines.
inline std::vector<Sentence> read_sentences(const std::string& path) {
  auto lines = detail::read_lines(path);
  std::vector<Sentence> out;
  out.reserve(lines.size());
  for (size_t k = 0; k < lines.size(); ++k) out.push_back(split_line(lines[k], path, k + 1));
  return out;
}

// Hypothesis/reference files: empty lines are legal (an empty translation).
inline std::vector<Sentence> read_sentences_lax(const std::string& path) {
  auto lines = detail::read_lines(path);
  std::vector<Sentence> out;
  out.reserve(lines.size());
  for (size_t k = 0; k < lines.size(); ++k)
    out.push_back(lines[k].empty() ? Sentence{} : split_line(lines[k], path, k + 1));
  return out;
}

inline std::string piece_file_name(size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.pieces", k);
  return buf;
}

inline std::vector<long> parse_long_list(const std::string& csv, const std::string& what) {
  std::vector<long> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stol(item, &used));
      if (used != item.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ValidationError("malformed " + what + " list item '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError("empty " + what + " list");
  return out;
}

struct IndexArgs {
  std::string src, tgt, align, out;
  int max_len = 80;
};

inline int cmd_index(const IndexArgs& a) {
  ParallelCorpus corpus = load_corpus(a.src, a.tgt, a.align);
  size_t raw = corpus.size();
  corpus = dedup_corpus(corpus);
  if (a.max_len > 0) corpus = length_filter(corpus, a.max_len);
  save_index(corpus, a.out);
  std::cerr << "indexed " << corpus.size() << " examples (" << raw << " input pairs)\n";
  return 0;
}

struct PiecesArgs {
  std::string index, input, out_dir;
  int retrieve = 100;
};

inline int cmd_pieces(const PiecesArgs& a) {
  IndexedCorpus ic = load_index(a.index);
  auto inputs = read_sentences(a.input);
  std::filesystem::create_directories(a.out_dir);
  for (size_t k = 0; k < inputs.size(); ++k) {
    PieceTable table = collect_table_for(ic.index, ic.corpus, inputs[k], a.retrieve);
    save_table(table, a.out_dir + "/" + piece_file_name(k));
  }
  std::cerr << "wrote " << inputs.size() << " piece tables to " << a.out_dir << "\n";
  return 0;
}

struct DecodeArgs {
  std::string index, input, out;
  std::string model_table, model_lexicon, pieces_dir;
  double lambda = 1.5;
  double eps = 0.0;
  int retrieve = 100;
  int beam = 5;
  int max_len = 0;
  int confusion = 4;
  int threads = 1;
  uint64_t seed = 1;
  bool binary_reward = false;
  bool baseline = false;
};

inline int cmd_decode(const DecodeArgs& a) {
  std::unique_ptr<TranslationModel> model;
  if (!a.model_table.empty())
    model = std::make_unique<TableModel>(load_table_model(a.model_table));
  else
    model = std::make_unique<LexiconModel>(load_lexicon(a.model_lexicon), a.eps, a.seed, a.confusion);

  IndexedCorpus ic;
  bool need_retrieval = !a.baseline && a.pieces_dir.empty() && a.retrieve > 0;
  if (need_retrieval) ic = load_index(a.index);

  auto inputs = read_sentences(a.input);
  std::vector<PieceTable> tables(inputs.size());
  if (!a.baseline) {
    for (size_t k = 0; k < inputs.size(); ++k) {
      if (!a.pieces_dir.empty())
        tables[k] = load_table(a.pieces_dir + "/" + piece_file_name(k));
      else if (need_retrieval)
        tables[k] = collect_table_for(ic.index, ic.corpus, inputs[k], a.retrieve);
      if (a.binary_reward) tables[k] = binarize_table(tables[k]);
    }
  }

  DecodeConfig config;
  config.lambda = a.lambda;
  config.beam_size = a.beam;
  config.max_output_len = a.max_len;

  std::vector<Sentence> outputs(inputs.size());
  int threads = std::max(1, a.threads);
  auto worker = [&](size_t begin, size_t end) {
    for (size_t k = begin; k < end; ++k)
      outputs[k] = beam_search(*model, inputs[k], tables[k], config).best().output();
  };
  if (threads == 1 || inputs.size() < 2) {
    worker(0, inputs.size());
  } else {
    std::vector<std::thread> pool;
    size_t chunk = (inputs.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      size_t begin = std::min(inputs.size(), static_cast<size_t>(t) * chunk);
      size_t end = std::min(inputs.size(), begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + a.out);
  for (const auto& s : outputs) out << join_tokens(s) << '\n';
  return 0;
}

struct EvalArgs {
  std::string hyp, ref, src, index;
  std::string modes = "bleu";
  std::string gamma = "0,1,2,5,10,20,50,100";
  std::string gamma_ranges;
  int retrieve = 100;
};

inline int cmd_eval(const EvalArgs& a) {
  auto hyp = read_sentences_lax(a.hyp);
  auto ref = read_sentences_lax(a.ref);
  if (hyp.size() != ref.size())
    throw ValidationError("eval: " + a.hyp + " has " + std::to_string(hyp.size()) + " lines but " + a.ref +
                          " has " + std::to_string(ref.size()));

  bool mode_bleu = false, mode_similarity = false, mode_count_gamma = false;
  {
    std::istringstream in(a.modes);
    std::string mode;
    while (std::getline(in, mode, ',')) {
      if (mode == "bleu")
        mode_bleu = true;
      else if (mode == "similarity")
        mode_similarity = true;
      else if (mode == "count-gamma")
        mode_count_gamma = true;
      else
        throw ValidationError("unknown eval mode '" + mode + "'");
    }
  }

  EvalReport report;
  std::ostream& out = std::cout;
  char buf[64];
  if (mode_bleu) {
    report.corpus_bleu = corpus_bleu(hyp, ref);
    report.length_ratio = length_ratio(hyp, ref);
    std::snprintf(buf, sizeof(buf), "%.2f", report.corpus_bleu);
    out << "bleu: " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.4f", report.length_ratio);
    out << "length_ratio: " << buf << "\n";
  }
  if (mode_similarity) {
    if (a.src.empty() || a.index.empty())
      throw ValidationError("similarity mode requires --src and --index");
    IndexedCorpus ic = load_index(a.index);
    auto test = read_sentences(a.src);
    report.similarities.reserve(test.size());
    for (const auto& x : test)
      report.similarities.push_back(similarity_to_train(ic.index, ic.corpus, x, a.retrieve));
    double mean = 0.0;
    for (double s : report.similarities) mean += s;
    mean = report.similarities.empty() ? 0.0 : mean / static_cast<double>(report.similarities.size());
    report.histogram = similarity_histogram(report.similarities);
    std::snprintf(buf, sizeof(buf), "%.4f", mean);
    out << "testset_similarity: " << buf << "\n";
    out << "similarity\tcount\tpercent\n";
    for (int b = 0; b <= 10; ++b) {
      std::snprintf(buf, sizeof(buf), "%.1f", report.histogram.percent(b));
      out << SimilarityHistogram::label(b) << '\t' << report.histogram.counts[b] << '\t' << buf << "\n";
    }
  }
  if (mode_count_gamma) {
    if (a.index.empty()) throw ValidationError("count-gamma mode requires --index");
    IndexedCorpus ic = load_index(a.index);
    OccurTable occ = build_occur_table(ic.corpus);
    out << "gamma\tcount\n";
    if (!a.gamma_ranges.empty()) {
      auto edges = parse_long_list(a.gamma_ranges, "gamma range edge");
      auto counts = count_gamma_ranges(hyp, ref, occ, edges);
      for (size_t i = 0; i < edges.size(); ++i)
        out << gamma_range_label(edges, i) << '\t' << counts.at(gamma_range_label(edges, i)) << "\n";
    } else {
      report.count_gamma = count_gamma(hyp, ref, occ, parse_long_list(a.gamma, "gamma"));
      for (const auto& [gamma, count] : report.count_gamma) out << gamma << '\t' << count << "\n";
    }
  }
  return 0;
}

struct BenchArgs {
  std::string index, input, model_lexicon;
  std::string sweep = "1,10,100";
  double eps = 0.0;
  double lambda = 1.5;
  int beam = 5;
  int confusion = 4;
  uint64_t seed = 1;
};

inline int cmd_bench(const BenchArgs& a) {
  using clock = std::chrono::steady_clock;
  IndexedCorpus ic = load_index(a.index);
  auto inputs = read_sentences(a.input);
  if (inputs.empty()) throw ValidationError("bench: empty input file");
  std::unique_ptr<LexiconModel> model;
  if (!a.model_lexicon.empty())
    model = std::make_unique<LexiconModel>(load_lexicon(a.model_lexicon), a.eps, a.seed, a.confusion);

  auto seconds_since = [](clock::time_point start) {
    return std::chrono::duration<double>(clock::now() - start).count();
  };

  std::cout << "stage\tM\tmean_seconds\n";
  char buf[64];
  for (long M : parse_long_list(a.sweep, "sweep")) {
    std::vector<std::vector<Candidate>> retrieved(inputs.size());
    auto t0 = clock::now();
    for (size_t k = 0; k < inputs.size(); ++k)
      retrieved[k] = search(ic.index, inputs[k], static_cast<int>(M));
    double retrieval = seconds_since(t0) / static_cast<double>(inputs.size());

    std::vector<PieceTable> tables(inputs.size());
    t0 = clock::now();
    for (size_t k = 0; k < inputs.size(); ++k) {
      std::vector<RetrievedMatch> matches;
      matches.reserve(retrieved[k].size());
      for (const auto& cand : retrieved[k])
        matches.push_back(compute_match(inputs[k], ic.corpus.examples[cand.example_id]));
      tables[k] = build_piece_table(matches);
    }
    double collection = seconds_since(t0) / static_cast<double>(inputs.size());

    std::snprintf(buf, sizeof(buf), "%.6f", retrieval);
    std::cout << "retrieval\t" << M << '\t' << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.6f", collection);
    std::cout << "piece_collection\t" << M << '\t' << buf << "\n";

    if (model) {
      DecodeConfig config;
      config.lambda = a.lambda;
      config.beam_size = a.beam;
      t0 = clock::now();
      for (size_t k = 0; k < inputs.size(); ++k) beam_search(*model, inputs[k], tables[k], config);
      double decode = seconds_since(t0) / static_cast<double>(inputs.size());
      std::snprintf(buf, sizeof(buf), "%.6f", decode);
      std::cout << "decode\t" << M << '\t' << buf << "\n";
    }
  }
  return 0;
}

}  // namespace cli

inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"translation-piece guided decoding toolkit"};
  app.require_subcommand(1);

  cli::IndexArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "build a retrieval index artifact from a parallel corpus");
  index_cmd->add_option("--src", index_args.src, "source sentences, one per line")->required();
  index_cmd->add_option("--tgt", index_args.tgt, "target sentences, one per line")->required();
  index_cmd->add_option("--align", index_args.align, "word alignments in i-j format")->required();
  index_cmd->add_option("--out", index_args.out, "output index artifact")->required();
  index_cmd->add_option("--max-len", index_args.max_len, "drop pairs with a side longer than this (0 = keep all)");

  cli::PiecesArgs pieces_args;
  auto* pieces_cmd = app.add_subcommand("pieces", "extract piece tables for input sentences");
  pieces_cmd->add_option("--index", pieces_args.index, "index artifact")->required();
  pieces_cmd->add_option("--input", pieces_args.input, "input sentences")->required();
  pieces_cmd->add_option("--out-dir", pieces_args.out_dir, "directory for per-sentence tables")->required();
  pieces_cmd->add_option("--retrieve,-M", pieces_args.retrieve, "retrieval size M");

  cli::DecodeArgs decode_args;
  auto* decode_cmd = app.add_subcommand("decode", "translate with optional piece guidance");
  decode_cmd->add_option("--index", decode_args.index, "index artifact");
  decode_cmd->add_option("--input", decode_args.input, "input sentences")->required();
  decode_cmd->add_option("--out", decode_args.out, "output translations")->required();
  auto* mt = decode_cmd->add_option("--model-table", decode_args.model_table, "table-model listing file");
  auto* ml = decode_cmd->add_option("--model-lexicon", decode_args.model_lexicon, "lexicon file (source TAB target)");
  mt->excludes(ml);
  decode_cmd->add_option("--eps", decode_args.eps, "lexicon model noise rate");
  decode_cmd->add_option("--confusion", decode_args.confusion, "lexicon model confusion set size");
  decode_cmd->add_option("--lambda", decode_args.lambda, "piece reward weight");
  decode_cmd->add_option("--retrieve,-M", decode_args.retrieve, "retrieval size M");
  decode_cmd->add_option("--beam", decode_args.beam, "beam size");
  decode_cmd->add_option("--max-len", decode_args.max_len, "max output tokens (0 = 2*|source|+10)");
  decode_cmd->add_option("--seed", decode_args.seed, "model noise seed");
  decode_cmd->add_option("--threads", decode_args.threads, "sentence-level worker threads");
  decode_cmd->add_option("--pieces-dir", decode_args.pieces_dir, "read piece tables from this directory");
  decode_cmd->add_flag("--binary-reward", decode_args.binary_reward, "score every piece 1.0");
  decode_cmd->add_flag("--baseline", decode_args.baseline, "decode without piece rewards");

  cli::EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "score translations and run corpus analyses");
  eval_cmd->add_option("--hyp", eval_args.hyp, "hypothesis translations")->required();
  eval_cmd->add_option("--ref", eval_args.ref, "reference translations")->required();
  eval_cmd->add_option("--src", eval_args.src, "test source sentences (similarity mode)");
  eval_cmd->add_option("--index", eval_args.index, "index artifact (similarity / count-gamma modes)");
  eval_cmd->add_option("--modes", eval_args.modes, "comma list of bleu,similarity,count-gamma");
  eval_cmd->add_option("--retrieve,-M", eval_args.retrieve, "retrieval size for similarity mode");
  eval_cmd->add_option("--gamma", eval_args.gamma, "comma list of exact gamma values");
  eval_cmd->add_option("--gamma-ranges", eval_args.gamma_ranges, "comma list of range edges (overrides --gamma)");

  cli::BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "per-stage timings across retrieval sizes");
  bench_cmd->add_option("--index", bench_args.index, "index artifact")->required();
  bench_cmd->add_option("--input", bench_args.input, "input sentences")->required();
  bench_cmd->add_option("--sweep", bench_args.sweep, "comma list of retrieval sizes");
  bench_cmd->add_option("--model-lexicon", bench_args.model_lexicon, "lexicon file; adds the decode stage");
  bench_cmd->add_option("--eps", bench_args.eps, "lexicon model noise rate");
  bench_cmd->add_option("--lambda", bench_args.lambda, "piece reward weight");
  bench_cmd->add_option("--beam", bench_args.beam, "beam size");
  bench_cmd->add_option("--confusion", bench_args.confusion, "lexicon model confusion set size");
  bench_cmd->add_option("--seed", bench_args.seed, "model noise seed");

  args.insert(args.begin(), "tpiece");
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(index_cmd)) return cli::cmd_index(index_args);
    if (app.got_subcommand(pieces_cmd)) return cli::cmd_pieces(pieces_args);
    if (app.got_subcommand(decode_cmd)) {
      if (decode_args.model_table.empty() && decode_args.model_lexicon.empty())
        throw ValidationError("decode: one of --model-table / --model-lexicon is required");
      bool needs_index = !decode_args.baseline && decode_args.pieces_dir.empty() && decode_args.retrieve > 0;
      if (needs_index && decode_args.index.empty())
        throw ValidationError("decode: --index is required unless --baseline, --pieces-dir or -M 0 is given");
      return cli::cmd_decode(decode_args);
    }
    if (app.got_subcommand(eval_cmd)) return cli::cmd_eval(eval_args);
    if (app.got_subcommand(bench_cmd)) return cli::cmd_bench(bench_args);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tpiece

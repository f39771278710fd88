#pragma once

// Tokenized parallel corpus with word alignments. Input is pre-tokenized
// text, one sentence per line, tokens separated by single ASCII spaces;
// alignments use the Pharaoh "i-j" convention, 0-based, source first.

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace tpiece {

using Token = std::string;
using Sentence = std::vector<Token>;

// Raised for malformed input files and violated file-level contracts.
// The CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

struct AlignmentLink {
  int src_pos = 0;
  int tgt_pos = 0;
  friend bool operator==(const AlignmentLink&, const AlignmentLink&) = default;
  friend auto operator<=>(const AlignmentLink&, const AlignmentLink&) = default;
};

struct ParallelExample {
  int id = 0;
  Sentence source;
  Sentence target;
  std::vector<AlignmentLink> alignment;  // sorted, no duplicates
};

struct ParallelCorpus {
  std::vector<ParallelExample> examples;
  size_t size() const { return examples.size(); }
};

inline std::string join_tokens(const Sentence& s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ' ';
    out += s[i];
  }
  return out;
}

// Splits a corpus line into tokens. Empty lines and empty tokens (leading,
// trailing or doubled spaces) are hard errors: skipping them silently would
// desynchronize the sibling files.
inline Sentence split_line(const std::string& line, const std::string& file, size_t line_no) {
  if (line.empty())
    throw ValidationError(file + ":" + std::to_string(line_no) + ": empty line");
  Sentence tokens;
  size_t start = 0;
  while (true) {
    size_t space = line.find(' ', start);
    std::string tok = line.substr(start, space == std::string::npos ? std::string::npos : space - start);
    if (tok.empty())
      throw ValidationError(file + ":" + std::to_string(line_no) + ": empty token (check for doubled or trailing spaces)");
    if (tok.find_first_of("\t\r\n") != std::string::npos)
      throw ValidationError(file + ":" + std::to_string(line_no) + ": token contains whitespace");
    tokens.push_back(std::move(tok));
    if (space == std::string::npos) break;
    start = space + 1;
  }
  return tokens;
}

inline std::vector<AlignmentLink> parse_alignment_line(const std::string& line, const std::string& file,
                                                       size_t line_no, size_t src_len, size_t tgt_len) {
  std::vector<AlignmentLink> links;
  if (line.empty()) return links;  // unaligned pair
  std::istringstream in(line);
  std::string item;
  while (in >> item) {
    size_t dash = item.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 == item.size())
      throw ValidationError(file + ":" + std::to_string(line_no) + ": malformed alignment token '" + item + "'");
    int s = 0, t = 0;
    try {
      size_t used = 0;
      s = std::stoi(item.substr(0, dash), &used);
      if (used != dash) throw std::invalid_argument("");
      std::string rest = item.substr(dash + 1);
      t = std::stoi(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ValidationError(file + ":" + std::to_string(line_no) + ": malformed alignment token '" + item + "'");
    }
    if (s < 0 || t < 0 || static_cast<size_t>(s) >= src_len || static_cast<size_t>(t) >= tgt_len)
      throw ValidationError(file + ":" + std::to_string(line_no) + ": alignment link " + item +
                            " out of bounds for lengths " + std::to_string(src_len) + "/" + std::to_string(tgt_len));
    links.push_back({s, t});
  }
  std::sort(links.begin(), links.end());
  links.erase(std::unique(links.begin(), links.end()), links.end());
  return links;
}

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

// Loads the .src/.tgt/.align triple. Line k of each file yields example id k;
// no dedup or filtering happens here. All errors carry 1-based line numbers.
inline ParallelCorpus load_corpus(const std::string& src_path, const std::string& tgt_path,
                                  const std::string& align_path) {
  auto src_lines = detail::read_lines(src_path);
  auto tgt_lines = detail::read_lines(tgt_path);
  auto align_lines = detail::read_lines(align_path);
  if (src_lines.size() != tgt_lines.size() || src_lines.size() != align_lines.size())
    throw ValidationError("line count mismatch: " + src_path + " has " + std::to_string(src_lines.size()) +
                          " lines, " + tgt_path + " has " + std::to_string(tgt_lines.size()) + ", " + align_path +
                          " has " + std::to_string(align_lines.size()));
  ParallelCorpus corpus;
  corpus.examples.reserve(src_lines.size());
  for (size_t k = 0; k < src_lines.size(); ++k) {
    ParallelExample ex;
    ex.id = static_cast<int>(k);
    ex.source = split_line(src_lines[k], src_path, k + 1);
    ex.target = split_line(tgt_lines[k], tgt_path, k + 1);
    ex.alignment = parse_alignment_line(align_lines[k], align_path, k + 1, ex.source.size(), ex.target.size());
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

inline std::string format_alignment(const std::vector<AlignmentLink>& links) {
  std::string out;
  for (size_t i = 0; i < links.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(links[i].src_pos) + "-" + std::to_string(links[i].tgt_pos);
  }
  return out;
}

inline void save_corpus(const ParallelCorpus& corpus, const std::string& src_path, const std::string& tgt_path,
                        const std::string& align_path) {
  std::ofstream src(src_path, std::ios::binary), tgt(tgt_path, std::ios::binary),
      align(align_path, std::ios::binary);
  if (!src || !tgt || !align) throw std::runtime_error("cannot open corpus output files");
  for (const auto& ex : corpus.examples) {
    src << join_tokens(ex.source) << '\n';
    tgt << join_tokens(ex.target) << '\n';
    align << format_alignment(ex.alignment) << '\n';
  }
}

// Keeps the first occurrence of each exact (source, target) pair; ids are
// re-densified preserving order. Alignments do not take part in the key.
inline ParallelCorpus dedup_corpus(const ParallelCorpus& corpus) {
  ParallelCorpus out;
  std::unordered_set<std::string> seen;
  for (const auto& ex : corpus.examples) {
    std::string key = join_tokens(ex.source) + "\t" + join_tokens(ex.target);
    if (!seen.insert(std::move(key)).second) continue;
    ParallelExample copy = ex;
    copy.id = static_cast<int>(out.examples.size());
    out.examples.push_back(std::move(copy));
  }
  return out;
}

// Drops pairs where either side is longer than max_len; ids re-densified.
inline ParallelCorpus length_filter(const ParallelCorpus& corpus, int max_len) {
  if (max_len < 1) throw std::invalid_argument("length_filter: max_len must be >= 1");
  ParallelCorpus out;
  for (const auto& ex : corpus.examples) {
    if (ex.source.size() > static_cast<size_t>(max_len) || ex.target.size() > static_cast<size_t>(max_len))
      continue;
    ParallelExample copy = ex;
    copy.id = static_cast<int>(out.examples.size());
    out.examples.push_back(std::move(copy));
  }
  return out;
}

}  // namespace tpiece

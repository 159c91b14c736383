#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mlmkit {

// Marker appended to the word-final symbol so merges can distinguish
// word-internal from word-final contexts.
inline constexpr const char* kEowMarker = "</w>";

class MergeTable {
 public:
  void add(const std::string& left, const std::string& right);
  // Rank of a pair, or -1 when the pair is not a merge.
  int rank(const std::string& left, const std::string& right) const;
  std::size_t size() const { return merges_.size(); }
  const std::vector<std::pair<std::string, std::string>>& merges() const {
    return merges_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> merges_;
  std::unordered_map<std::string, int> rank_;  // key = left + '\n' + right
};

struct BpeVocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumSpecials = 5;

  std::vector<std::string> symbols;       // id -> symbol, specials first
  std::vector<std::int64_t> counts;       // corpus frequency, 0 for specials
  std::unordered_map<std::string, int> id_of;

  // Id for a symbol, UNK when unknown.
  int id(const std::string& symbol) const;
  std::size_t size() const { return symbols.size(); }
  static BpeVocab with_specials();
};

struct EncodedSequence {
  std::vector<int> ids;
  // Half-open [start, end) span of ids per original word.
  std::vector<std::pair<std::size_t, std::size_t>> word_boundaries;
};

// Word frequency aggregation over cleaned lines (space-separated tokens).
std::map<std::string, std::int64_t> count_words(std::istream& cleaned);

struct LearnedBpe {
  MergeTable table;
  BpeVocab vocab;
};

// Greedy most-frequent-pair learning over word frequencies. Ties break to
// the lexicographically smallest (left, right); learning stops early once no
// pair occurs at least twice. Pair occurrences within a word never overlap.
LearnedBpe learn_bpe(const std::map<std::string, std::int64_t>& word_freq,
                     std::size_t num_merges);

// Greedy segmentation: split into characters (eow marker on the last), then
// repeatedly apply the lowest-rank applicable merge until none applies.
std::vector<std::string> apply_bpe(const std::string& word,
                                   const MergeTable& table);

EncodedSequence encode_sequence(const std::vector<std::string>& tokens,
                                const BpeVocab& vocab, const MergeTable& table);
std::vector<std::string> decode(const std::vector<int>& ids,
                                const BpeVocab& vocab);

// "left right" per line, rank = line order.
void save_merges(const MergeTable& table, const std::string& path);
MergeTable load_merges(const std::string& path);

// "symbol count" per line, descending count then symbol; specials implied.
void save_vocab(const BpeVocab& vocab, const std::string& path);
BpeVocab load_vocab(const std::string& path);

}  // namespace mlmkit

#pragma once

// Reference BPE learner for tests: recounts every pair from scratch at each
// step, so it is quadratic but has no incremental bookkeeping to get wrong.
// Shares only the published conventions with the real learner: eow marker on
// the final character, non-overlapping pair occurrences, smallest-pair tie
// break, stop when the best pair occurs fewer than 2 times.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mlmkit/bpe.hpp"
#include "mlmkit/unicode.hpp"

namespace bpe_oracle {

using Pair = std::pair<std::string, std::string>;

struct OracleWord {
  std::vector<std::string> syms;
  std::int64_t freq;
};

inline std::vector<OracleWord> split_words(
    const std::map<std::string, std::int64_t>& word_freq) {
  std::vector<OracleWord> words;
  for (const auto& [word, freq] : word_freq) {
    OracleWord w;
    w.freq = freq;
    for (char32_t cp : mlmkit::uni::decode_utf8(word))
      w.syms.push_back(mlmkit::uni::encode_utf8(std::u32string(1, cp)));
    if (!w.syms.empty()) w.syms.back() += mlmkit::kEowMarker;
    words.push_back(std::move(w));
  }
  return words;
}

// Counts occurrences of every adjacent pair, never letting two occurrences
// of the same pair share a symbol.
inline std::map<Pair, std::int64_t> count_pairs(
    const std::vector<OracleWord>& words) {
  std::map<Pair, std::int64_t> counts;
  for (const auto& w : words) {
    bool prev_counted = false;
    for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
      if (i > 0 && prev_counted && w.syms[i - 1] == w.syms[i] &&
          w.syms[i] == w.syms[i + 1]) {
        prev_counted = false;
        continue;
      }
      counts[{w.syms[i], w.syms[i + 1]}] += w.freq;
      prev_counted = true;
    }
  }
  return counts;
}

inline std::vector<std::string> replace_pair(const std::vector<std::string>& syms,
                                             const Pair& p) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < syms.size()) {
    if (i + 1 < syms.size() && syms[i] == p.first && syms[i + 1] == p.second) {
      out.push_back(p.first + p.second);
      i += 2;
    } else {
      out.push_back(syms[i]);
      ++i;
    }
  }
  return out;
}

// Returns the merge list; `final_words` (if given) receives the segmented
// word forms after all merges.
inline std::vector<Pair> learn(const std::map<std::string, std::int64_t>& word_freq,
                               std::size_t num_merges,
                               std::vector<OracleWord>* final_words = nullptr) {
  auto words = split_words(word_freq);
  std::vector<Pair> merges;
  for (std::size_t step = 0; step < num_merges; ++step) {
    auto counts = count_pairs(words);
    const Pair* best = nullptr;
    std::int64_t best_count = 0;
    for (const auto& [pair, count] : counts) {
      if (count > best_count) {  // map order makes first max the smallest pair
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr || best_count < 2) break;
    merges.push_back(*best);
    for (auto& w : words) w.syms = replace_pair(w.syms, *best);
  }
  if (final_words != nullptr) *final_words = words;
  return merges;
}

}  // namespace bpe_oracle

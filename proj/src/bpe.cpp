#include "mlmkit/bpe.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <queue>
#include <set>
#include <sstream>

#include "mlmkit/common.hpp"
#include "mlmkit/unicode.hpp"

namespace mlmkit {

namespace {

std::string pair_key(const std::string& left, const std::string& right) {
  std::string k;
  k.reserve(left.size() + right.size() + 1);
  k += left;
  k += '\n';
  k += right;
  return k;
}

struct Word {
  std::vector<std::string> syms;
  std::int64_t freq = 0;
};

std::vector<std::string> split_chars(const std::string& word) {
  std::vector<std::string> syms;
  for (char32_t cp : uni::decode_utf8(word))
    syms.push_back(uni::encode_utf8(std::u32string(1, cp)));
  if (!syms.empty()) syms.back() += kEowMarker;
  return syms;
}

// Occurrences of each adjacent pair; two occurrences of the same pair never
// share a symbol (a run "x x x" holds one occurrence of (x, x), not two).
std::map<std::pair<std::string, std::string>, std::int64_t> local_pairs(
    const std::vector<std::string>& syms) {
  std::map<std::pair<std::string, std::string>, std::int64_t> counts;
  bool prev_counted = false;
  for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
    if (i > 0 && prev_counted && syms[i - 1] == syms[i] &&
        syms[i] == syms[i + 1]) {
      prev_counted = false;
      continue;
    }
    ++counts[{syms[i], syms[i + 1]}];
    prev_counted = true;
  }
  return counts;
}

std::vector<std::string> replace_pair(const std::vector<std::string>& syms,
                                      const std::string& left,
                                      const std::string& right) {
  std::vector<std::string> out;
  out.reserve(syms.size());
  std::size_t i = 0;
  while (i < syms.size()) {
    if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(syms[i]);
      ++i;
    }
  }
  return out;
}

struct HeapEntry {
  std::int64_t count;
  std::string left, right;
};

// Max count first; at equal count the lexicographically smallest pair wins.
struct HeapLess {
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.count != b.count) return a.count < b.count;
    if (a.left != b.left) return a.left > b.left;
    return a.right > b.right;
  }
};

}  // namespace

void MergeTable::add(const std::string& left, const std::string& right) {
  std::string key = pair_key(left, right);
  if (rank_.count(key))
    throw DataError("merge table: duplicate pair '" + left + " " + right + "'");
  rank_.emplace(std::move(key), static_cast<int>(merges_.size()));
  merges_.emplace_back(left, right);
}

int MergeTable::rank(const std::string& left, const std::string& right) const {
  auto it = rank_.find(pair_key(left, right));
  return it == rank_.end() ? -1 : it->second;
}

BpeVocab BpeVocab::with_specials() {
  BpeVocab v;
  v.symbols = {"<pad>", "<unk>", "<s>", "</s>", "<mask>"};
  v.counts.assign(v.symbols.size(), 0);
  for (std::size_t i = 0; i < v.symbols.size(); ++i)
    v.id_of.emplace(v.symbols[i], static_cast<int>(i));
  return v;
}

int BpeVocab::id(const std::string& symbol) const {
  auto it = id_of.find(symbol);
  return it == id_of.end() ? kUnk : it->second;
}

std::map<std::string, std::int64_t> count_words(std::istream& cleaned) {
  std::map<std::string, std::int64_t> freq;
  std::string line;
  while (std::getline(cleaned, line)) {
    std::size_t start = 0;
    while (start < line.size()) {
      std::size_t end = line.find(' ', start);
      if (end == std::string::npos) end = line.size();
      if (end > start) ++freq[line.substr(start, end - start)];
      start = end + 1;
    }
  }
  return freq;
}

LearnedBpe learn_bpe(const std::map<std::string, std::int64_t>& word_freq,
                     std::size_t num_merges) {
  if (word_freq.empty()) throw DataError("bpe: cannot learn from an empty corpus");

  std::vector<Word> words;
  words.reserve(word_freq.size());
  std::set<std::string> initial_chars;
  for (const auto& [word, freq] : word_freq) {
    Word w;
    w.freq = freq;
    w.syms = split_chars(word);
    for (const auto& s : w.syms) initial_chars.insert(s);
    if (!w.syms.empty()) words.push_back(std::move(w));
  }

  std::unordered_map<std::string, std::int64_t> counts;
  std::unordered_map<std::string, std::set<std::size_t>> pair_words;
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLess> heap;

  for (std::size_t idx = 0; idx < words.size(); ++idx) {
    for (const auto& [pair, n] : local_pairs(words[idx].syms)) {
      counts[pair_key(pair.first, pair.second)] += n * words[idx].freq;
      pair_words[pair_key(pair.first, pair.second)].insert(idx);
    }
  }
  for (const auto& [key, count] : counts) {
    auto nl = key.find('\n');
    heap.push({count, key.substr(0, nl), key.substr(nl + 1)});
  }

  LearnedBpe out;
  for (std::size_t step = 0; step < num_merges; ++step) {
    // Discard entries whose count went stale since they were pushed.
    while (!heap.empty()) {
      const HeapEntry& top = heap.top();
      auto it = counts.find(pair_key(top.left, top.right));
      std::int64_t current = it == counts.end() ? 0 : it->second;
      if (current == top.count) break;
      heap.pop();
    }
    if (heap.empty() || heap.top().count < 2) break;

    std::string left = heap.top().left, right = heap.top().right;
    heap.pop();
    out.table.add(left, right);

    std::string chosen_key = pair_key(left, right);
    std::vector<std::size_t> touched(pair_words[chosen_key].begin(),
                                     pair_words[chosen_key].end());
    for (std::size_t idx : touched) {
      Word& w = words[idx];
      auto replaced = replace_pair(w.syms, left, right);
      if (replaced == w.syms) continue;
      auto before = local_pairs(w.syms);
      auto after = local_pairs(replaced);
      for (const auto& [pair, n] : before) {
        auto hit = after.find(pair);
        std::int64_t delta = (hit == after.end() ? 0 : hit->second) - n;
        if (delta == 0) continue;
        std::string key = pair_key(pair.first, pair.second);
        std::int64_t next = (counts[key] += delta * w.freq);
        if (next <= 0) {
          counts.erase(key);
        } else {
          heap.push({next, pair.first, pair.second});
        }
      }
      for (const auto& [pair, n] : after) {
        if (before.count(pair)) continue;  // delta handled above
        std::string key = pair_key(pair.first, pair.second);
        std::int64_t next = (counts[key] += n * w.freq);
        heap.push({next, pair.first, pair.second});
        pair_words[key].insert(idx);
      }
      w.syms = std::move(replaced);
    }
  }

  // Vocabulary: specials, then observed characters and merge outputs ordered
  // by descending frequency in the fully merged corpus, ties by symbol.
  std::map<std::string, std::int64_t> sym_counts;
  for (const auto& s : initial_chars) sym_counts[s] = 0;
  for (const auto& [l, r] : out.table.merges()) sym_counts[l + r] = 0;
  for (const auto& w : words)
    for (const auto& s : w.syms) sym_counts[s] += w.freq;

  std::vector<std::pair<std::string, std::int64_t>> ordered(sym_counts.begin(),
                                                            sym_counts.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  out.vocab = BpeVocab::with_specials();
  for (const auto& [sym, count] : ordered) {
    out.vocab.id_of.emplace(sym, static_cast<int>(out.vocab.symbols.size()));
    out.vocab.symbols.push_back(sym);
    out.vocab.counts.push_back(count);
  }
  return out;
}

std::vector<std::string> apply_bpe(const std::string& word,
                                   const MergeTable& table) {
  std::vector<std::string> syms = split_chars(word);
  while (syms.size() > 1) {
    int best_rank = -1;
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      int r = table.rank(syms[i], syms[i + 1]);
      if (r >= 0 && (best_rank < 0 || r < best_rank)) {
        best_rank = r;
        best_pos = i;
      }
    }
    if (best_rank < 0) break;
    syms = replace_pair(syms, syms[best_pos], syms[best_pos + 1]);
  }
  return syms;
}

EncodedSequence encode_sequence(const std::vector<std::string>& tokens,
                                const BpeVocab& vocab, const MergeTable& table) {
  EncodedSequence seq;
  for (const auto& tok : tokens) {
    std::size_t start = seq.ids.size();
    for (const auto& sym : apply_bpe(tok, table))
      seq.ids.push_back(vocab.id(sym));
    seq.word_boundaries.emplace_back(start, seq.ids.size());
  }
  return seq;
}

std::vector<std::string> decode(const std::vector<int>& ids,
                                const BpeVocab& vocab) {
  std::vector<std::string> tokens;
  std::string current;
  const std::size_t marker_len = std::string(kEowMarker).size();
  for (int id : ids) {
    if (id == BpeVocab::kPad || id == BpeVocab::kBos || id == BpeVocab::kEos ||
        id == BpeVocab::kMask)
      continue;
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.symbols.size())
      throw DataError("decode: id " + std::to_string(id) + " out of range");
    const std::string& sym = vocab.symbols[id];
    if (sym.size() >= marker_len &&
        sym.compare(sym.size() - marker_len, marker_len, kEowMarker) == 0) {
      current += sym.substr(0, sym.size() - marker_len);
      tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += sym;
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void save_merges(const MergeTable& table, const std::string& path) {
  std::ostringstream out;
  for (const auto& [l, r] : table.merges()) out << l << ' ' << r << '\n';
  write_file(path, out.str());
}

MergeTable load_merges(const std::string& path) {
  MergeTable table;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size() ||
        line.find(' ', sp + 1) != std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'left right'");
    table.add(line.substr(0, sp), line.substr(sp + 1));
  }
  return table;
}

void save_vocab(const BpeVocab& vocab, const std::string& path) {
  std::ostringstream out;
  for (std::size_t id = BpeVocab::kNumSpecials; id < vocab.symbols.size(); ++id)
    out << vocab.symbols[id] << ' ' << vocab.counts[id] << '\n';
  write_file(path, out.str());
}

BpeVocab load_vocab(const std::string& path) {
  BpeVocab vocab = BpeVocab::with_specials();
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 ||
        line.find(' ', sp + 1) != std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'symbol count'");
    std::string sym = line.substr(0, sp);
    std::int64_t count = 0;
    const char* first = line.data() + sp + 1;
    const char* last = line.data() + line.size();
    auto [end, ec] = std::from_chars(first, last, count);
    if (ec != std::errc{} || end != last)
      throw DataError(path + ":" + std::to_string(line_no) + ": bad count");
    if (!vocab.id_of.emplace(sym, static_cast<int>(vocab.symbols.size())).second)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": duplicate symbol '" + sym + "'");
    vocab.symbols.push_back(sym);
    vocab.counts.push_back(count);
  }
  return vocab;
}

}  // namespace mlmkit

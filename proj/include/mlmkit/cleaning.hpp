#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mlmkit/unicode.hpp"

namespace mlmkit {

enum class DropReason {
  kTooShort,
  kTooLong,
  kNonAlphaRatio,
  kDigitRatio,
  kEmail,
  kPhoneFax,
  kUrl,
  kDuplicate,
};

std::string_view drop_reason_name(DropReason r);

struct CleaningConfig {
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 1024;
  double max_nonalpha_ratio = 0.5;
  double max_digit_ratio = 0.3;
  bool drop_email = true;
  bool drop_phone_fax = true;
  bool drop_url = true;
  std::size_t dedup_window = 1'000'000;
  bool lowercase = true;
  uni::NormForm unicode_form = uni::NormForm::NFC;

  void validate() const;  // throws DataError on out-of-range fields
};

struct CleanSentence {
  std::vector<std::string> tokens;
  std::string source_id;
  std::size_t line_no = 0;

  std::string render() const;  // tokens joined by single spaces
};

struct CorpusStats {
  std::uint64_t lines_in = 0;
  std::uint64_t lines_kept = 0;
  std::uint64_t tokens_kept = 0;
  std::uint64_t io_errors = 0;
  std::map<std::string, std::uint64_t> drop_reasons;

  void add_drop(DropReason r);
  void merge(const CorpusStats& other);
  std::string to_json() const;
};

// Bounded window over recently seen line hashes; memory is O(window).
class DedupWindow {
 public:
  explicit DedupWindow(std::size_t capacity) : capacity_(capacity) {}

  // True if `key` was already in the window. Always records the sighting.
  bool seen_and_record(std::uint64_t key);

 private:
  std::size_t capacity_;
  std::deque<std::uint64_t> order_;
  std::unordered_map<std::uint64_t, std::uint32_t> counts_;
};

using CleanResult = std::variant<CleanSentence, DropReason>;

// Normalize -> tokenize -> lowercase -> length -> drop patterns -> ratios
// -> duplicate. Pass dedup=nullptr to skip the duplicate stage.
CleanResult clean_sentence(std::string_view line, const CleaningConfig& cfg,
                           DedupWindow* dedup = nullptr,
                           std::string_view source_id = {}, std::size_t line_no = 0);

// Cleans all shards (parallel per shard), then merges in shard order with a
// single dedup pass over the merged stream, so the output is byte-identical
// for any worker count. Unreadable shards are counted in stats.io_errors.
CorpusStats filter_corpus(const std::vector<std::string>& shard_paths,
                          const CleaningConfig& cfg, std::ostream& out,
                          unsigned workers = 1);

std::string lowercase_utf8(std::string_view text);

}  // namespace mlmkit

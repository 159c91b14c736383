#include "mlmkit/cleaning.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mlmkit/common.hpp"
#include "mlmkit/moses.hpp"

namespace mlmkit {

namespace {

bool is_ascii_digit_token(const std::string& tok) {
  if (tok.empty()) return false;
  return std::all_of(tok.begin(), tok.end(),
                     [](unsigned char c) { return c >= '0' && c <= '9'; });
}

// Email: single '@', non-empty local part, domain with a dot and a ≥2-letter tld.
bool looks_like_email(const std::string& tok) {
  auto at = tok.find('@');
  if (at == std::string::npos || at == 0 || at + 1 >= tok.size()) return false;
  if (tok.find('@', at + 1) != std::string::npos) return false;
  std::string domain = tok.substr(at + 1);
  auto dot = domain.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= domain.size()) return false;
  std::string tld = domain.substr(dot + 1);
  if (tld.size() < 2) return false;
  return std::all_of(tld.begin(), tld.end(), [](unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  });
}

bool looks_like_url(const std::string& tok) {
  std::string low;
  low.reserve(tok.size());
  for (unsigned char c : tok) low.push_back(static_cast<char>(std::tolower(c)));
  return low.rfind("http://", 0) == 0 || low.rfind("https://", 0) == 0 ||
         low.rfind("ftp://", 0) == 0 || low.rfind("www.", 0) == 0 ||
         low.find("://") != std::string::npos;
}

// Phone/fax shapes: either a run of short digit groups ("04 76 00 00 00") or a
// single separator-joined token ("+33-4-76-00-00-00"), totaling ≥ 8 digits.
bool looks_like_phone(const std::vector<std::string>& tokens) {
  std::size_t run_digits = 0;
  for (const auto& tok : tokens) {
    if (is_ascii_digit_token(tok) && tok.size() <= 4) {
      run_digits += tok.size();
      if (run_digits >= 8) return true;
    } else {
      run_digits = 0;
    }
  }
  for (const auto& tok : tokens) {
    std::size_t digits = 0;
    bool only_phone_chars = true;
    for (unsigned char c : tok) {
      if (c >= '0' && c <= '9') {
        ++digits;
      } else if (c != '+' && c != '-' && c != '.' && c != '(' && c != ')' &&
                 c != '/') {
        only_phone_chars = false;
        break;
      }
    }
    if (only_phone_chars && digits >= 8) return true;
  }
  return false;
}

}  // namespace

std::string_view drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::kTooShort: return "too_short";
    case DropReason::kTooLong: return "too_long";
    case DropReason::kNonAlphaRatio: return "nonalpha_ratio";
    case DropReason::kDigitRatio: return "digit_ratio";
    case DropReason::kEmail: return "email";
    case DropReason::kPhoneFax: return "phone_fax";
    case DropReason::kUrl: return "url";
    case DropReason::kDuplicate: return "duplicate";
  }
  return "unknown";
}

void CleaningConfig::validate() const {
  if (min_tokens > max_tokens)
    throw DataError("cleaning config: min_tokens exceeds max_tokens");
  if (max_nonalpha_ratio < 0.0 || max_nonalpha_ratio > 1.0)
    throw DataError("cleaning config: max_nonalpha_ratio outside [0,1]");
  if (max_digit_ratio < 0.0 || max_digit_ratio > 1.0)
    throw DataError("cleaning config: max_digit_ratio outside [0,1]");
  if (dedup_window == 0)
    throw DataError("cleaning config: dedup_window must be positive");
}

std::string CleanSentence::render() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

void CorpusStats::add_drop(DropReason r) {
  ++drop_reasons[std::string(drop_reason_name(r))];
}

void CorpusStats::merge(const CorpusStats& other) {
  lines_in += other.lines_in;
  lines_kept += other.lines_kept;
  tokens_kept += other.tokens_kept;
  io_errors += other.io_errors;
  for (const auto& [name, count] : other.drop_reasons) drop_reasons[name] += count;
}

std::string CorpusStats::to_json() const {
  nlohmann::json j;
  j["lines_in"] = lines_in;
  j["lines_kept"] = lines_kept;
  j["tokens_kept"] = tokens_kept;
  j["io_errors"] = io_errors;
  j["drop_reasons"] = drop_reasons;
  return j.dump(2);
}

bool DedupWindow::seen_and_record(std::uint64_t key) {
  auto it = counts_.find(key);
  bool seen = it != counts_.end() && it->second > 0;
  ++counts_[key];
  order_.push_back(key);
  if (order_.size() > capacity_) {
    std::uint64_t old = order_.front();
    order_.pop_front();
    auto old_it = counts_.find(old);
    if (--old_it->second == 0) counts_.erase(old_it);
  }
  return seen;
}

std::string lowercase_utf8(std::string_view text) { return uni::to_lower(text); }

CleanResult clean_sentence(std::string_view line, const CleaningConfig& cfg,
                           DedupWindow* dedup, std::string_view source_id,
                           std::size_t line_no) {
  std::string normalized = uni::normalize(line, cfg.unicode_form);
  std::vector<std::string> tokens = moses_tokenize(normalized);
  if (cfg.lowercase) {
    for (auto& tok : tokens)
      tok = uni::normalize(uni::to_lower(tok), cfg.unicode_form);
  }

  if (tokens.size() < cfg.min_tokens) return DropReason::kTooShort;
  if (tokens.size() > cfg.max_tokens) return DropReason::kTooLong;

  if (cfg.drop_email &&
      std::any_of(tokens.begin(), tokens.end(), looks_like_email))
    return DropReason::kEmail;
  // Scheme markers are checked on the raw line too: tokenization splits "://".
  if (cfg.drop_url &&
      (normalized.find("://") != std::string::npos ||
       std::any_of(tokens.begin(), tokens.end(), looks_like_url)))
    return DropReason::kUrl;
  if (cfg.drop_phone_fax && looks_like_phone(tokens)) return DropReason::kPhoneFax;

  std::size_t total_cps = 0, alpha_cps = 0, digit_cps = 0;
  for (const auto& tok : tokens) {
    for (char32_t cp : uni::decode_utf8(tok)) {
      ++total_cps;
      if (uni::is_alpha(cp)) ++alpha_cps;
      if (uni::is_digit(cp)) ++digit_cps;
    }
  }
  if (total_cps > 0) {
    double nonalpha = 1.0 - static_cast<double>(alpha_cps) / total_cps;
    if (nonalpha > cfg.max_nonalpha_ratio) return DropReason::kNonAlphaRatio;
    double digit = static_cast<double>(digit_cps) / total_cps;
    if (digit > cfg.max_digit_ratio) return DropReason::kDigitRatio;
  }

  CleanSentence sent;
  sent.tokens = std::move(tokens);
  sent.source_id = std::string(source_id);
  sent.line_no = line_no;

  if (dedup != nullptr && dedup->seen_and_record(fnv1a64(sent.render())))
    return DropReason::kDuplicate;
  return sent;
}

namespace {

struct ShardResult {
  CorpusStats stats;                // lines_in and non-duplicate drops only
  std::vector<std::string> kept;    // rendered sentences, pre-dedup
  std::vector<std::size_t> n_tokens;
  bool io_error = false;
};

ShardResult clean_shard(const std::string& path, const CleaningConfig& cfg) {
  ShardResult result;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    result.io_error = true;
    return result;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++result.stats.lines_in;
    CleanResult r = clean_sentence(line, cfg, nullptr, path, line_no);
    if (auto* sent = std::get_if<CleanSentence>(&r)) {
      result.kept.push_back(sent->render());
      result.n_tokens.push_back(sent->tokens.size());
    } else {
      result.stats.add_drop(std::get<DropReason>(r));
    }
  }
  return result;
}

}  // namespace

CorpusStats filter_corpus(const std::vector<std::string>& shard_paths,
                          const CleaningConfig& cfg, std::ostream& out,
                          unsigned workers) {
  cfg.validate();
  std::vector<ShardResult> results(shard_paths.size());
  if (workers <= 1 || shard_paths.size() <= 1) {
    for (std::size_t i = 0; i < shard_paths.size(); ++i)
      results[i] = clean_shard(shard_paths[i], cfg);
  } else {
    std::atomic<std::size_t> next{0};
    auto run = [&] {
      for (std::size_t i = next.fetch_add(1); i < shard_paths.size();
           i = next.fetch_add(1))
        results[i] = clean_shard(shard_paths[i], cfg);
    };
    std::vector<std::thread> pool;
    unsigned n = std::min<std::size_t>(workers, shard_paths.size());
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }

  // Deduplicate on the ordered merged stream so worker count cannot change
  // the output.
  CorpusStats stats;
  DedupWindow window(cfg.dedup_window);
  for (auto& shard : results) {
    if (shard.io_error) {
      ++stats.io_errors;
      continue;
    }
    stats.merge(shard.stats);
    for (std::size_t i = 0; i < shard.kept.size(); ++i) {
      if (window.seen_and_record(fnv1a64(shard.kept[i]))) {
        stats.add_drop(DropReason::kDuplicate);
        continue;
      }
      out << shard.kept[i] << '\n';
      ++stats.lines_kept;
      stats.tokens_kept += shard.n_tokens[i];
    }
  }
  return stats;
}

}  // namespace mlmkit

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlmkit::uni {

enum class NormForm { NFC, NFKC };

// Raised on malformed UTF-8; byte_offset points at the offending byte.
struct Utf8Error : std::runtime_error {
  std::size_t byte_offset;
  explicit Utf8Error(std::size_t off)
      : std::runtime_error("invalid UTF-8 at byte offset " + std::to_string(off)),
        byte_offset(off) {}
};

// Strict decode: rejects overlong forms, surrogates, and out-of-range values.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(const std::u32string& cps);
bool is_valid_utf8(std::string_view text);

// Canonical (NFC) or compatibility (NFKC) normalization per UAX #15.
std::string normalize(std::string_view text, NormForm form);
std::u32string normalize(const std::u32string& cps, NormForm form);

unsigned char combining_class(char32_t cp);
bool is_alpha(char32_t cp);
bool is_digit(char32_t cp);

// Full case mapping (1:N aware), not just simple toLower.
std::string to_lower(std::string_view text);

}  // namespace mlmkit::uni

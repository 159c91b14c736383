#include "mlmkit/moses.hpp"

#include "mlmkit/unicode.hpp"

namespace mlmkit {

namespace {

bool is_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

// Punctuation detached from word edges unconditionally.
bool is_detach(char32_t c) {
  switch (c) {
    case U'!': case U'?': case U';': case U':':
    case U'«': case U'»':  // « »
    case U'(': case U')': case U'[': case U']': case U'"':
      return true;
    default:
      return false;
  }
}

bool is_apostrophe(char32_t c) { return c == U'\'' || c == U'’'; }

bool is_alnum(char32_t c) { return uni::is_alpha(c) || uni::is_digit(c); }

}  // namespace

std::vector<std::string> moses_tokenize(std::string_view text) {
  const std::u32string cps = uni::decode_utf8(text);
  std::vector<std::string> tokens;
  std::u32string cur;

  auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(uni::encode_utf8(cur));
      cur.clear();
    }
  };
  auto emit = [&](const std::u32string& tok) {
    flush();
    tokens.push_back(uni::encode_utf8(tok));
  };

  const std::size_t n = cps.size();
  std::size_t i = 0;
  while (i < n) {
    const char32_t c = cps[i];
    if (is_space(c)) {
      flush();
      ++i;
    } else if (c == U'.') {
      std::size_t j = i;
      while (j < n && cps[j] == U'.') ++j;
      if (j - i >= 2) {
        emit(std::u32string(j - i, U'.'));  // ellipsis stays whole
        i = j;
      } else {
        const bool prev_alnum = !cur.empty() && is_alnum(cur.back());
        const bool next_alnum = i + 1 < n && is_alnum(cps[i + 1]);
        if (prev_alnum && next_alnum) {
          cur.push_back(c);  // interior dot: 2.0, a.b
        } else {
          emit(U".");
        }
        ++i;
      }
    } else if (c == U',') {
      const bool prev_digit = !cur.empty() && uni::is_digit(cur.back());
      const bool next_digit = i + 1 < n && uni::is_digit(cps[i + 1]);
      if (prev_digit && next_digit) {
        cur.push_back(c);  // decimal comma: 3,14
      } else {
        emit(U",");
      }
      ++i;
    } else if (is_detach(c)) {
      emit(std::u32string(1, c));
      ++i;
    } else if (is_apostrophe(c)) {
      // Elision: apostrophe after a letter closes the token on its left
      // side (l'avion -> l' avion); this also makes re-tokenization of
      // "l' avion" a no-op. A free-standing apostrophe is its own token.
      if (!cur.empty() && uni::is_alpha(cur.back())) {
        cur.push_back(c);
        flush();
      } else {
        emit(std::u32string(1, c));
      }
      ++i;
    } else {
      cur.push_back(c);
      ++i;
    }
  }
  flush();
  return tokens;
}

}  // namespace mlmkit

#include "mlmkit/unicode.hpp"

#include <algorithm>
#include <iterator>

namespace mlmkit::uni {

namespace {
#include "mlmkit/unicode_tables.inc"

constexpr char32_t kHangulSBase = 0xAC00;
constexpr char32_t kHangulLBase = 0x1100;
constexpr char32_t kHangulVBase = 0x1161;
constexpr char32_t kHangulTBase = 0x11A7;
constexpr int kHangulLCount = 19;
constexpr int kHangulVCount = 21;
constexpr int kHangulTCount = 28;
constexpr int kHangulNCount = kHangulVCount * kHangulTCount;
constexpr int kHangulSCount = kHangulLCount * kHangulNCount;

const DecompEntry* find_decomp(const DecompEntry* first, const DecompEntry* last,
                               char32_t cp) {
  auto it = std::lower_bound(first, last, cp, [](const DecompEntry& e, char32_t v) {
    return e.cp < v;
  });
  return (it != last && it->cp == cp) ? it : nullptr;
}

bool in_ranges(const CpRange* first, const CpRange* last, char32_t cp) {
  auto it = std::upper_bound(first, last, cp, [](char32_t v, const CpRange& r) {
    return v < r.lo;
  });
  return it != first && cp <= std::prev(it)->hi;
}

void decompose_cp(char32_t cp, bool compat, std::u32string& out) {
  if (cp >= kHangulSBase && cp < kHangulSBase + kHangulSCount) {
    char32_t s = cp - kHangulSBase;
    out.push_back(kHangulLBase + s / kHangulNCount);
    out.push_back(kHangulVBase + (s % kHangulNCount) / kHangulTCount);
    char32_t t = s % kHangulTCount;
    if (t != 0) out.push_back(kHangulTBase + t);
    return;
  }
  const DecompEntry* e = nullptr;
  if (compat) {
    e = find_decomp(std::begin(kCompatDecomp), std::end(kCompatDecomp), cp);
  } else {
    e = find_decomp(std::begin(kCanonicalDecomp), std::end(kCanonicalDecomp), cp);
  }
  if (!e) {
    out.push_back(cp);
    return;
  }
  // Table entries are pre-expanded, no recursion needed.
  for (unsigned i = 0; i < e->len; ++i) out.push_back(kSeqPool[e->offset + i]);
}

// Canonical ordering: stable sort of combining marks by combining class.
void canonical_order(std::u32string& cps) {
  std::size_t i = 1;
  while (i < cps.size()) {
    unsigned char cc = combining_class(cps[i]);
    if (cc != 0 && combining_class(cps[i - 1]) > cc) {
      std::swap(cps[i - 1], cps[i]);
      if (i > 1) --i;
    } else {
      ++i;
    }
  }
}

char32_t compose_pair(char32_t a, char32_t b) {
  // Hangul LV and LVT composition.
  if (a >= kHangulLBase && a < kHangulLBase + kHangulLCount && b >= kHangulVBase &&
      b < kHangulVBase + kHangulVCount) {
    return kHangulSBase + ((a - kHangulLBase) * kHangulVCount + (b - kHangulVBase)) *
                              kHangulTCount;
  }
  if (a >= kHangulSBase && a < kHangulSBase + kHangulSCount &&
      (a - kHangulSBase) % kHangulTCount == 0 && b > kHangulTBase &&
      b < kHangulTBase + kHangulTCount) {
    return a + (b - kHangulTBase);
  }
  auto it = std::lower_bound(std::begin(kComposition), std::end(kComposition),
                             std::pair<char32_t, char32_t>{a, b},
                             [](const CompEntry& e, const std::pair<char32_t, char32_t>& k) {
                               return e.first != k.first ? e.first < k.first
                                                         : e.second < k.second;
                             });
  if (it != std::end(kComposition) && it->first == a && it->second == b) {
    return it->composite;
  }
  return 0;
}

// UAX #15 canonical composition over a decomposed, canonically ordered string.
void compose(std::u32string& cps) {
  if (cps.empty()) return;
  std::u32string out;
  out.reserve(cps.size());
  std::size_t starter_pos = std::u32string::npos;
  int last_cc = -1;
  for (char32_t cp : cps) {
    unsigned char cc = combining_class(cp);
    if (starter_pos != std::u32string::npos && last_cc < static_cast<int>(cc)) {
      if (char32_t comp = compose_pair(out[starter_pos], cp)) {
        out[starter_pos] = comp;
        continue;
      }
    }
    if (cc == 0) {
      // A starter may also combine with an immediately preceding starter.
      if (starter_pos != std::u32string::npos && last_cc == 0 &&
          starter_pos + 1 == out.size()) {
        if (char32_t comp = compose_pair(out[starter_pos], cp)) {
          out[starter_pos] = comp;
          continue;
        }
      }
      starter_pos = out.size();
      last_cc = 0;
      out.push_back(cp);
    } else {
      last_cc = cc;
      out.push_back(cp);
    }
  }
  cps = std::move(out);
}

}  // namespace

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const auto* p = reinterpret_cast<const unsigned char*>(text.data());
  while (i < text.size()) {
    unsigned char b0 = p[i];
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    }
    int len;
    char32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      throw Utf8Error(i);
    }
    if (i + len > text.size()) throw Utf8Error(i);
    for (int k = 1; k < len; ++k) {
      unsigned char b = p[i + k];
      if ((b & 0xC0) != 0x80) throw Utf8Error(i + k);
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t kMinByLen[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinByLen[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      throw Utf8Error(i);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(const std::u32string& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

bool is_valid_utf8(std::string_view text) {
  try {
    decode_utf8(text);
    return true;
  } catch (const Utf8Error&) {
    return false;
  }
}

unsigned char combining_class(char32_t cp) {
  auto it = std::lower_bound(std::begin(kCombiningClass), std::end(kCombiningClass),
                             cp, [](const CccEntry& e, char32_t v) { return e.cp < v; });
  return (it != std::end(kCombiningClass) && it->cp == cp) ? it->ccc : 0;
}

bool is_alpha(char32_t cp) {
  return in_ranges(std::begin(kAlphaRanges), std::end(kAlphaRanges), cp);
}

bool is_digit(char32_t cp) {
  return in_ranges(std::begin(kDigitRanges), std::end(kDigitRanges), cp);
}

std::string to_lower(std::string_view text) {
  std::u32string cps = decode_utf8(text);
  std::u32string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) {
    const DecompEntry* e =
        find_decomp(std::begin(kLowercase), std::end(kLowercase), cp);
    if (e == nullptr) {
      out.push_back(cp);
    } else {
      for (unsigned i = 0; i < e->len; ++i) out.push_back(kSeqPool[e->offset + i]);
    }
  }
  return encode_utf8(out);
}

std::u32string normalize(const std::u32string& cps, NormForm form) {
  std::u32string decomposed;
  decomposed.reserve(cps.size());
  for (char32_t cp : cps) decompose_cp(cp, form == NormForm::NFKC, decomposed);
  canonical_order(decomposed);
  compose(decomposed);
  return decomposed;
}

std::string normalize(std::string_view text, NormForm form) {
  return encode_utf8(normalize(decode_utf8(text), form));
}

}  // namespace mlmkit::uni

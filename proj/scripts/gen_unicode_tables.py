#!/usr/bin/env python3
"""Generate include/mlmkit/unicode_tables.inc from Python's unicodedata.

The tables drive the NFC/NFKC normalizer and the character-class helpers:
  - canonical combining classes (nonzero entries only)
  - fully expanded canonical and compatibility decompositions
  - primary composite pairs (exclusions filtered by round-trip check)
  - alphabetic / decimal-digit codepoint ranges

Hangul syllables (AC00..D7A3) are intentionally absent: the C++ side
decomposes and composes them algorithmically.
"""

import sys
import unicodedata

MAX_CP = 0x110000
HANGUL_S_BASE = 0xAC00
HANGUL_S_COUNT = 11172


def is_hangul_syllable(cp):
    return HANGUL_S_BASE <= cp < HANGUL_S_BASE + HANGUL_S_COUNT


def raw_decomposition(cp):
    """Return (is_compat, [codepoints]) or None."""
    d = unicodedata.decomposition(chr(cp))
    if not d:
        return None
    parts = d.split()
    compat = parts[0].startswith("<")
    if compat:
        parts = parts[1:]
    return compat, [int(p, 16) for p in parts]


def expand(cp, compat, memo):
    """Fully expanded decomposition of cp under NFD (compat=False) or NFKD."""
    key = (cp, compat)
    if key in memo:
        return memo[key]
    if is_hangul_syllable(cp):
        memo[key] = [cp]  # handled algorithmically at runtime
        return memo[key]
    raw = raw_decomposition(cp)
    if raw is None or (raw[0] and not compat):
        memo[key] = [cp]
        return memo[key]
    out = []
    for c in raw[1]:
        out.extend(expand(c, compat, memo))
    memo[key] = out
    return out


def main(out_path):
    ccc = []
    for cp in range(MAX_CP):
        c = unicodedata.combining(chr(cp))
        if c:
            ccc.append((cp, c))

    memo = {}
    canon, compat_tbl = [], []
    for cp in range(MAX_CP):
        if is_hangul_syllable(cp):
            continue
        nfd = expand(cp, False, memo)
        if nfd != [cp]:
            canon.append((cp, nfd))
        nfkd = expand(cp, True, memo)
        if nfkd != [cp]:
            compat_tbl.append((cp, nfkd))

    # Primary composites: canonical pair decompositions that survive an
    # NFC round trip (this filters the composition-exclusion list without
    # needing the raw data file).
    comp = []
    for cp in range(MAX_CP):
        if is_hangul_syllable(cp):
            continue
        raw = raw_decomposition(cp)
        if raw is None or raw[0] or len(raw[1]) != 2:
            continue
        a, b = raw[1]
        if unicodedata.combining(chr(a)) != 0:
            continue
        if unicodedata.normalize("NFC", chr(a) + chr(b)) == chr(cp):
            comp.append((a, b, cp))
    comp.sort()

    def ranges_of(pred):
        out = []
        start = None
        for cp in range(MAX_CP):
            ok = pred(cp)
            if ok and start is None:
                start = cp
            elif not ok and start is not None:
                out.append((start, cp - 1))
                start = None
        if start is not None:
            out.append((start, MAX_CP - 1))
        return out

    alpha_ranges = ranges_of(lambda cp: chr(cp).isalpha())
    digit_ranges = ranges_of(lambda cp: chr(cp).isdigit())

    lower_map = []
    for cp in range(MAX_CP):
        lo = chr(cp).lower()
        if lo != chr(cp):
            lower_map.append((cp, [ord(c) for c in lo]))

    seq_pool = []
    pool_index = {}

    def intern(seq):
        t = tuple(seq)
        if t in pool_index:
            return pool_index[t]
        off = len(seq_pool)
        seq_pool.extend(seq)
        pool_index[t] = off
        return off

    canon_rows = [(cp, intern(seq), len(seq)) for cp, seq in canon]
    compat_rows = [(cp, intern(seq), len(seq)) for cp, seq in compat_tbl]
    lower_rows = [(cp, intern(seq), len(seq)) for cp, seq in lower_map]

    with open(out_path, "w") as f:
        w = f.write
        w("// Generated by scripts/gen_unicode_tables.py — do not edit.\n")
        w("// Unicode version: %s\n\n" % unicodedata.unidata_version)
        w("inline constexpr char32_t kSeqPool[] = {\n")
        for i in range(0, len(seq_pool), 12):
            w("  " + ",".join("0x%X" % c for c in seq_pool[i:i + 12]) + ",\n")
        w("};\n\n")

        w("struct CccEntry { char32_t cp; unsigned char ccc; };\n")
        w("inline constexpr CccEntry kCombiningClass[] = {\n")
        for i in range(0, len(ccc), 8):
            w("  " + "".join("{0x%X,%d}," % e for e in ccc[i:i + 8]) + "\n")
        w("};\n\n")

        w("struct DecompEntry { char32_t cp; unsigned int offset; unsigned char len; };\n")
        for name, rows in (("kCanonicalDecomp", canon_rows), ("kCompatDecomp", compat_rows),
                           ("kLowercase", lower_rows)):
            w("inline constexpr DecompEntry %s[] = {\n" % name)
            for i in range(0, len(rows), 6):
                w("  " + "".join("{0x%X,%d,%d}," % r for r in rows[i:i + 6]) + "\n")
            w("};\n\n")

        w("struct CompEntry { char32_t first; char32_t second; char32_t composite; };\n")
        w("inline constexpr CompEntry kComposition[] = {\n")
        for i in range(0, len(comp), 6):
            w("  " + "".join("{0x%X,0x%X,0x%X}," % e for e in comp[i:i + 6]) + "\n")
        w("};\n\n")

        w("struct CpRange { char32_t lo; char32_t hi; };\n")
        for name, rng in (("kAlphaRanges", alpha_ranges), ("kDigitRanges", digit_ranges)):
            w("inline constexpr CpRange %s[] = {\n" % name)
            for i in range(0, len(rng), 8):
                w("  " + "".join("{0x%X,0x%X}," % r for r in rng[i:i + 8]) + "\n")
            w("};\n\n")

    sys.stderr.write(
        "ccc=%d canon=%d compat=%d lower=%d comp=%d alpha_ranges=%d digit_ranges=%d pool=%d\n"
        % (len(ccc), len(canon_rows), len(compat_rows), len(lower_rows), len(comp),
           len(alpha_ranges), len(digit_ranges), len(seq_pool)))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "include/mlmkit/unicode_tables.inc")

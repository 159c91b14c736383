#!/usr/bin/env python3
"""Emit golden normalization/lowercase fixtures from Python's unicodedata.

Output format is hex-of-UTF-8 per field so the files survive any editor or
diff tool untouched:
  normalization_golden.tsv: input<TAB>nfc<TAB>nfkc
  lowercase_golden.tsv:     input<TAB>lowered (per-codepoint full mapping)
"""
import os
import random
import sys
import unicodedata

HERE = os.path.dirname(os.path.abspath(__file__))
OUT_DIR = os.path.join(HERE, "..", "tests", "data")

HANDPICKED = [
    "abc",
    "é",                      # e + combining acute -> é
    "é",                       # é already composed
    "Amélie et l'été",
    "ﬁnance",                  # fi ligature (compat)
    "①②",                 # circled digits (compat)
    "Ｋａｎ",           # fullwidth Kan
    "ẛ̣",                 # long s with dot above + dot below
    "İstanbul",                # dotted capital I (1:2 lowercase)
    "각",           # Hangul jamo -> syllable
    "각",                       # precomposed Hangul syllable
    "Å",                       # Angstrom sign -> Å
    "q̣̇",                # ccc reordering case from UAX #15
    "Å",                 # A + ring -> Å
    "Ω",                       # Ohm sign -> Ω
    "½",                       # vulgar fraction (compat)
    "क़",                       # Devanagari qa (composition exclusion)
    "གྷ",                       # Tibetan gha (exclusion)
    "ば゛",                 # kana + voiced sound mark
    "Ça va ?",
    "Ǆǅǆ",           # DŽ Dž dž (compat digraphs)
    "",
]

POOLS = [
    list(range(0x20, 0x7F)),
    list(range(0xA0, 0x180)),
    list(range(0x300, 0x370)),      # combining marks
    list(range(0x370, 0x400)),      # Greek
    list(range(0x400, 0x460)),      # Cyrillic
    list(range(0x1E00, 0x1F00)),    # Latin extended additional
    list(range(0x1F00, 0x2000)),    # Greek extended
    list(range(0x2000, 0x2070)),    # punctuation, compat spaces
    list(range(0x2150, 0x2190)),    # number forms
    list(range(0x3040, 0x3100)),    # kana
    list(range(0xAC00, 0xAC80)),    # Hangul syllables
    list(range(0x1100, 0x1113)) + list(range(0x1161, 0x1176)) + list(range(0x11A8, 0x11C3)),
    list(range(0xF900, 0xFA00)),    # CJK compatibility ideographs
    list(range(0xFB00, 0xFB07)),    # Latin ligatures
    list(range(0xFF00, 0xFFEF)),    # full/half width forms
    list(range(0x1D400, 0x1D480)),  # math alphanumerics
]


def assigned(cp):
    return unicodedata.category(chr(cp)) not in ("Cn", "Cs", "Co")


def hexenc(s):
    return s.encode("utf-8").hex()


def main():
    rng = random.Random(987654321)
    cases = list(HANDPICKED)
    for _ in range(1200):
        pool = rng.choice(POOLS)
        n = rng.randint(1, 12)
        cps = []
        while len(cps) < n:
            cp = rng.choice(pool)
            if assigned(cp):
                cps.append(cp)
        cases.append("".join(chr(c) for c in cps))

    os.makedirs(OUT_DIR, exist_ok=True)
    with open(os.path.join(OUT_DIR, "normalization_golden.tsv"), "w") as f:
        for s in cases:
            f.write("%s\t%s\t%s\n" % (
                hexenc(s),
                hexenc(unicodedata.normalize("NFC", s)),
                hexenc(unicodedata.normalize("NFKC", s)),
            ))

    with open(os.path.join(OUT_DIR, "lowercase_golden.tsv"), "w") as f:
        for s in cases:
            lowered = "".join(ch.lower() for ch in s)
            f.write("%s\t%s\n" % (hexenc(s), hexenc(lowered)))

    print("wrote %d cases" % len(cases))


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Build a 200-sentence French tokenization golden fixture.

Expected tokens come from a direct port of the reference Moses tokenizer.perl
regex sequence (French mode, non-aggressive, no-escape). Sentences are drawn
from constructs where that reference behavior is well defined and stable:
no abbreviations with trailing periods mid-sentence, no single-letter-dot
tokens, no percent/currency signs, apostrophes only in elision position.

Output: tests/data/moses_golden.tsv, lines of "sentence<TAB>tok tok tok".
"""
import os
import random
import re
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "tests", "data", "moses_golden.tsv")

LOWER = "a-zà-öø-ÿœ"
UPPER = "A-ZÀ-ÖØ-Þ"
ALPHA = LOWER + UPPER
ALNUM = ALPHA + "0-9"


def moses_tokenize_fr(text):
    text = " %s " % text
    text = re.sub(r"\s+", " ", text)

    # Detach everything that is not alnum/space/period/quote/comma/hyphen.
    text = re.sub(r"([^%s\s\.'\`,\-])" % ALNUM, r" \1 ", text)

    # Protect multi-dot runs.
    text = re.sub(r"\.([\.]+)", r" DOTMULTI\1", text)
    while re.search(r"DOTMULTI\.", text):
        text = re.sub(r"DOTMULTI\.([^\.])", r"DOTDOTMULTI \1", text)
        text = re.sub(r"DOTMULTI\.", "DOTDOTMULTI", text)

    # Comma: split unless flanked by digits on both sides.
    text = re.sub(r"([^0-9]),", r"\1 , ", text)
    text = re.sub(r",([^0-9])", r" , \1", text)

    # French apostrophe: keep with the left word only between letters.
    text = re.sub(r"([^%s])[']([^%s])" % (ALPHA, ALPHA), r"\1 ' \2", text)
    text = re.sub(r"([^%s])[']([%s])" % (ALPHA, ALPHA), r"\1 ' \2", text)
    text = re.sub(r"([%s])[']([^%s])" % (ALPHA, ALPHA), r"\1 ' \2", text)
    text = re.sub(r"([%s])[']([%s])" % (ALPHA, ALPHA), r"\1' \2", text)

    # Word-final period: detach at end of sentence for ordinary words.
    words = text.split()
    out_words = []
    for i, w in enumerate(words):
        m = re.match(r"^(\S+)\.$", w)
        if m:
            pre = m.group(1)
            if ("." in pre and re.search(r"[%s]" % ALPHA, pre)) or \
               (i < len(words) - 1 and re.match(r"^[%s]" % LOWER, words[i + 1])):
                pass  # treated as abbreviation, keep attached
            else:
                w = pre + " ."
        out_words.append(w)
    text = " ".join(out_words)

    text = re.sub(r"\s+", " ", text).strip()
    while "DOTDOTMULTI" in text:
        text = text.replace("DOTDOTMULTI", "DOTMULTI.")
    text = text.replace("DOTMULTI", ".")
    return text.split()


SUBJECTS = ["le chat", "la petite fille", "un vieil homme", "notre voisine",
            "le boulanger", "cette équipe", "mon grand-père", "la journaliste",
            "le professeur", "une passante"]
ELIDED = ["l'avion", "l'école", "l'été", "d'abord", "j'arrive", "n'importe",
          "c'était", "s'il", "qu'elle", "aujourd'hui", "jusqu'à", "l'œuvre"]
VERBS = ["regarde", "traverse", "prépare", "raconte", "oublie", "dessine",
         "construit", "observe", "remarque", "choisit"]
OBJECTS = ["la rue étroite", "un gâteau au chocolat", "le jardin public",
           "une histoire étrange", "les années soixante", "la porte-fenêtre",
           "un rendez-vous", "le porte-monnaie", "la grand-route",
           "un arc-en-ciel"]
TAILS = [".", "!", "?", "...", " ;", " :", " !", " ?"]
NUMBERY = ["3,14", "1,5", "2,718", "0,5", "12,75"]


def build_sentences():
    rng = random.Random(20200131)
    sents = []

    def add(s):
        if s not in sents:
            sents.append(s)

    for i in range(60):
        s = "%s %s %s%s" % (rng.choice(SUBJECTS).capitalize(),
                            rng.choice(VERBS), rng.choice(OBJECTS),
                            rng.choice(TAILS))
        add(s)
    for i in range(50):
        s = "%s %s %s %s%s" % (rng.choice(ELIDED).capitalize(),
                               rng.choice(VERBS), rng.choice(SUBJECTS),
                               rng.choice(OBJECTS), rng.choice(TAILS))
        add(s)
    for i in range(40):
        s = "« %s %s » , dit-elle%s" % (rng.choice(SUBJECTS),
                                        rng.choice(VERBS), rng.choice(TAILS))
        add(s)
    for i in range(30):
        s = "Le rapport ( version %s ) cite %s %s%s" % (
            rng.choice(NUMBERY), rng.choice(SUBJECTS), rng.choice(OBJECTS),
            rng.choice(TAILS))
        add(s)
    for i in range(30):
        s = "Il répète [ %s ] : « %s »%s" % (rng.choice(ELIDED),
                                             rng.choice(OBJECTS),
                                             rng.choice(TAILS))
        add(s)
    for i in range(30):
        s = '"Peut-être" , %s %s ; %s attend%s' % (
            rng.choice(ELIDED), rng.choice(VERBS), rng.choice(SUBJECTS),
            rng.choice(TAILS))
        add(s)
    while len(sents) < 200:
        s = "%s %s %s , %s %s%s" % (
            rng.choice(SUBJECTS).capitalize(), rng.choice(VERBS),
            rng.choice(OBJECTS), rng.choice(ELIDED), rng.choice(VERBS),
            rng.choice(TAILS))
        add(s)
    return sents[:200]


def main():
    sents = build_sentences()
    assert len(sents) == 200
    with open(OUT, "w") as f:
        for s in sents:
            toks = moses_tokenize_fr(s)
            assert toks, s
            f.write("%s\t%s\n" % (s, " ".join(toks)))
    print("wrote %d sentences" % len(sents))


if __name__ == "__main__":
    sys.exit(main())

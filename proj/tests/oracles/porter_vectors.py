#!/usr/bin/env python3
"""Freeze Porter stemmer vectors from NLTK's reference port (Martin's extensions)."""
import re
import sys
from nltk.stem.porter import PorterStemmer

text = open(sys.argv[1], encoding="utf-8").read().lower()
words = sorted(set(re.findall(r"[a-z']+", text)))
extra = ["caresses", "ponies", "ties", "caress", "cats", "feed", "agreed", "plastered", "bled",
         "motoring", "sing", "conflated", "troubled", "sized", "hopping", "tanned", "falling",
         "hissing", "fizzed", "failing", "filing", "happy", "sky", "relational", "conditional",
         "rational", "valenci", "hesitanci", "digitizer", "conformabli", "radicalli", "differentli",
         "vileli", "analogousli", "vietnamization", "predication", "operator", "feudalism",
         "decisiveness", "hopefulness", "callousness", "formaliti", "sensitiviti", "sensibiliti",
         "triplicate", "formative", "formalize", "electriciti", "electrical", "hopeful", "goodness",
         "revival", "allowance", "inference", "airliner", "gyroscopic", "adjustable", "defensible",
         "irritant", "replacement", "adjustment", "dependent", "adoption", "homologou", "communism",
         "activate", "angulariti", "homologous", "effective", "bowdlerize", "probate", "rate",
         "cease", "controll", "roll", "generalizations", "oscillators", "running", "dogs",
         "archaeology", "don't", "y", "by", "yes", "syzygy", "a", "is"]
s = PorterStemmer(mode=PorterStemmer.MARTIN_EXTENSIONS)
for w in sorted(set(words) | set(extra)):
    if w.strip("'") != w:
        continue
    print(f"{w}\t{s.stem(w, to_lowercase=False)}")

"""Freezes Porter stems (NLTK, ORIGINAL_ALGORITHM) for a vocabulary drawn
from caption-like English text. Output: tests/data/porter_vocab.tsv."""

import re
import sys

from nltk.stem.porter import PorterStemmer

stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
text = open(sys.argv[1], encoding="utf-8").read().lower()
vocab = sorted({w for w in re.findall(r"[a-z]+", text) if len(w) > 2})
extra = ["caresses", "ponies", "ties", "caress", "cats", "feed", "agreed",
         "plastered", "bled", "motoring", "sing", "conflated", "troubled",
         "sized", "hopping", "tanned", "falling", "hissing", "fizzed",
         "failing", "filing", "happy", "sky", "relational", "conditional",
         "rational", "valenci", "hesitanci", "digitizer", "conformabli",
         "radicalli", "differentli", "vileli", "analogousli", "vietnamization",
         "predication", "operator", "feudalism", "decisiveness", "hopefulness",
         "callousness", "formaliti", "sensitiviti", "sensibiliti", "triplicate",
         "formative", "formalize", "electriciti", "electrical", "hopeful",
         "goodness", "revival", "allowance", "inference", "airliner",
         "gyroscopic", "adjustable", "defensible", "irritant", "replacement",
         "adjustment", "dependent", "adoption", "homologou", "communism",
         "activate", "angulariti", "homologous", "effective", "bowdlerize",
         "probate", "rate", "cease", "controll", "roll", "generalizations",
         "oscillators"]
with open(sys.argv[2], "w", encoding="utf-8") as out:
    for w in sorted(set(vocab) | set(extra)):
        out.write(f"{w}\t{stemmer.stem(w, to_lowercase=False)}\n")

#!/usr/bin/env python3
"""Convert langdetect JSON n-gram profiles into ngram<TAB>frequency files.

Grams are NFC-normalized and lowercased; grams that differ only by case are
merged. Only grams made of letters and spaces are kept.

usage: convert_langdetect_profiles.py <langdetect/profiles dir> <out dir>
"""
import json
import pathlib
import sys
import unicodedata
from collections import Counter

LANGS = ["en", "fr", "es", "pt", "vi"]


def keep(gram: str) -> bool:
    return gram.strip() != "" and all(c == " " or c.isalpha() for c in gram)


def main() -> int:
    src, dst = map(pathlib.Path, sys.argv[1:3])
    dst.mkdir(parents=True, exist_ok=True)
    for lang in LANGS:
        profile = json.loads((src / lang).read_text(encoding="utf-8"))
        merged = Counter()
        for gram, freq in profile["freq"].items():
            gram = unicodedata.normalize("NFC", gram).lower()
            if keep(gram):
                merged[gram] += freq
        lines = [f"{g}\t{c}" for g, c in sorted(merged.items(), key=lambda kv: (-kv[1], kv[0]))]
        (dst / f"{lang}.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(lang, len(lines))
    return 0


if __name__ == "__main__":
    sys.exit(main())

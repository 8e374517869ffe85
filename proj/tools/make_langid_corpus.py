#!/usr/bin/env python3
"""Builds the language-identification fixture corpus from the sentence pools.

Pure paragraphs join same-language sentences (with the odd inline formula or
number mixed in) until they reach 200 characters. Mixed paragraphs interleave
two languages. Output is JSON lines: {id, kind, labels, text}.
"""
import argparse
import json
import random
from pathlib import Path

NO_SPACE = {"ja", "zh"}
FORMULAS = ["$x^2 + 3x = 10$", "$\\frac{a}{b} = 4$", "$2 \\times 7 = 14$", "\\(n - 1\\)", "= 42", "$y = 3x + 1$"]
PAIRS = [("en", "fr"), ("en", "es"), ("en", "pt"), ("en", "vi"), ("en", "zh"), ("en", "ja"), ("en", "ko"),
         ("en", "th"), ("en", "ar"), ("fr", "es"), ("es", "pt"), ("fr", "pt"), ("vi", "fr"), ("zh", "ko"),
         ("ja", "ko"), ("th", "zh"), ("ar", "fr"), ("pt", "ko"), ("vi", "ja"), ("es", "th")]


def joiner(lang):
    return "" if lang in NO_SPACE else " "


def pure_paragraph(rng, lang, pool, min_chars):
    sentences = pool[:]
    rng.shuffle(sentences)
    parts = []
    for s in sentences:
        parts.append(s)
        if rng.random() < 0.3:
            parts.append(rng.choice(FORMULAS))
        if sum(len(p) for p in parts) >= min_chars:
            break
    return joiner(lang).join(parts)


def mixed_paragraph(rng, a, b, pools):
    sa = rng.sample(pools[a], 2)
    sb = rng.sample(pools[b], 2)
    order = [sa[0], sb[0], sa[1], sb[1]] if rng.random() < 0.5 else [sb[0], sa[0], sb[1], sa[1]]
    return " ".join(order)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sentences", type=Path, default=Path(__file__).resolve().parent.parent / "tests/fixtures/langid/sentences.json")
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests/fixtures/langid/corpus.jsonl")
    parser.add_argument("--per-language", type=int, default=22)
    parser.add_argument("--min-chars", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    pools = json.loads(args.sentences.read_text(encoding="utf-8"))
    rng = random.Random(args.seed)
    rows = []
    for lang in sorted(pools):
        for i in range(args.per_language):
            rows.append({"id": f"pure-{lang}-{i:02d}", "kind": "pure", "labels": [lang],
                         "text": pure_paragraph(rng, lang, pools[lang], args.min_chars)})
    for i, (a, b) in enumerate(PAIRS * 2):
        rows.append({"id": f"mixed-{a}-{b}-{i:02d}", "kind": "mixed", "labels": [a, b],
                     "text": mixed_paragraph(rng, a, b, pools)})
    with args.out.open("w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {len(rows)} items to {args.out}")


if __name__ == "__main__":
    main()

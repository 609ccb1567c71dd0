"""Regenerate the language-ID training and held-out corpora from word lists.

Usage: python tools/make_corpora.py [fixtures_dir]

Sentences are built by sampling words uniformly with a fixed seed, so the
output is reproducible byte-for-byte.
"""

import random
import sys
from pathlib import Path

CONFIG = {
    # lang: (joiner, sentence end, capitalize)
    "en": (" ", ".", True),
    "es": (" ", ".", True),
    "ja": ("", "。", False),
}


def sentences(words, joiner, end, capitalize, rng):
    while True:
        picked = rng.choices(words, k=rng.randint(5, 12))
        s = joiner.join(picked) + end
        if capitalize:
            s = s[0].upper() + s[1:]
        yield s


def build(words, lang, seed, min_chars):
    joiner, end, cap = CONFIG[lang]
    rng = random.Random(seed)
    lines, total = [], 0
    gen = sentences(words, joiner, end, cap, rng)
    while total < min_chars:
        line = joiner.join(next(gen) for _ in range(3))
        lines.append(line)
        total += len(line)
    return "\n".join(lines) + "\n"


def main(root):
    root = Path(root)
    for lang in CONFIG:
        words = (root / "words" / f"{lang}.txt").read_text(encoding="utf-8").split()
        (root / f"{lang}.train.txt").write_text(build(words, lang, 1, 12000), encoding="utf-8")
        (root / f"{lang}.heldout.txt").write_text(build(words, lang, 2, 6000), encoding="utf-8")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent.parent / "tests" / "fixtures" / "corpora")

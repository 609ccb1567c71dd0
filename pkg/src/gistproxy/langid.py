"""Character n-gram language identification for short strings.

Each profile is an add-one smoothed conditional model P(c | previous n-1
characters) over the characters seen in training plus an end-of-string symbol
and one bucket for every unseen character.  The unseen bucket's mass is spread
over the rest of the Unicode code space, so a string made of characters a
profile never saw scores very low under it.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

BOS = "\x02"
EOS = "\x03"
UNK = "\x00"
UNICODE_SIZE = 0x110000
MIN_CORPUS = 100
DEFAULT_ORDER = 3
DEFAULT_THRESHOLD = 2.0
HEADER = "langid-profile v1"


class ProfileError(ValueError):
    pass


def _clean(text: str) -> str:
    text = "".join(" " if ch.isspace() else ch for ch in text)
    return " ".join(text.replace(BOS, "").replace(EOS, "").replace(UNK, "").split())


def _padded(text: str, n: int) -> str:
    return BOS * (n - 1) + text + EOS


@dataclass
class LanguageProfile:
    lang: str
    n: int
    counts: Counter  # full n-gram (history + char) -> count
    prior: float = 0.0
    log_probs: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ProfileError("n-gram order must be at least 1")
        self.vocab = frozenset(g[-1] for g in self.counts) | {EOS, UNK}
        history = defaultdict(int)
        for gram, c in self.counts.items():
            history[gram[:-1]] += c
        self.history_counts = dict(history)
        v = len(self.vocab)
        self.log_probs = {
            gram: math.log((c + 1) / (history[gram[:-1]] + v))
            for gram, c in self.counts.items()
        }
        # code points that can reach the UNK bucket: all but the seen ones and the 3 markers
        self._unseen_share = math.log(UNICODE_SIZE - 3 - (v - 2))

    def conditional(self, hist: str, ch: str) -> float:
        """log P(ch | hist); ``ch`` outside the vocabulary takes a share of UNK."""
        unseen = ch not in self.vocab
        sym = UNK if unseen else ch
        gram = hist + sym
        lp = self.log_probs.get(gram)
        if lp is None:
            lp = -math.log(self.history_counts.get(hist, 0) + len(self.vocab))
        if unseen:
            lp -= self._unseen_share
        return lp

    def log_likelihood(self, text: str) -> float:
        seq = _padded(_clean(text), self.n)
        k = self.n - 1
        return sum(self.conditional(seq[i - k : i], seq[i]) for i in range(k, len(seq)))

    def score(self, text: str) -> float:
        return self.prior + self.log_likelihood(text)

    # -- file format
    def dump(self) -> str:
        lines = [f"{HEADER} {self.lang} n={self.n}"]
        for gram in sorted(self.counts):
            hexed = "-".join(f"{ord(c):04x}" for c in gram)
            lines.append(f"{hexed}\t{self.counts[gram]}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.dump(), encoding="utf-8")


def train_profile(corpus, lang: str, n: int = DEFAULT_ORDER) -> LanguageProfile:
    """Count padded character n-grams over each non-blank line of ``corpus``."""
    corpus = str(corpus)
    if len(corpus) < MIN_CORPUS:
        raise ProfileError(f"corpus has {len(corpus)} characters; at least {MIN_CORPUS} required")
    if n < 1:
        raise ProfileError("n-gram order must be at least 1")
    counts = Counter()
    for line in corpus.splitlines():
        line = _clean(line)
        if not line:
            continue
        seq = _padded(line, n)
        for i in range(n - 1, len(seq)):
            counts[seq[i - n + 1 : i + 1]] += 1
    return LanguageProfile(lang, n, counts)


def parse_profile(text: str, prior: float = 0.0) -> LanguageProfile:
    lines = text.splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 4 or " ".join(head[:2]) != HEADER or not head[3].startswith("n="):
        raise ProfileError(f"bad profile header: {lines[0] if lines else ''!r}")
    lang, n = head[2], int(head[3][2:])
    counts = Counter()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            hexed, count = line.split("\t")
            gram = "".join(chr(int(h, 16)) for h in hexed.split("-"))
            counts[gram] = int(count)
        except ValueError as exc:
            raise ProfileError(f"line {lineno}: {exc}") from None
        if len(gram) != n:
            raise ProfileError(f"line {lineno}: n-gram of length {len(gram)} in an order-{n} profile")
    return LanguageProfile(lang, n, counts, prior)


def load_profile(path, prior: float = 0.0) -> LanguageProfile:
    return parse_profile(Path(path).read_text(encoding="utf-8"), prior)


@dataclass(frozen=True)
class Identification:
    lang: str
    score: float
    margin: float
    confident: bool


def identify(text, profiles, threshold: float = DEFAULT_THRESHOLD) -> Identification:
    """Pick the profile with the highest prior plus log-likelihood.

    Ties go to the alphabetically first language code.  ``margin`` is the gap
    to the runner-up (infinite with a single profile).
    """
    if not profiles:
        raise ProfileError("no language profiles loaded")
    text = str(text)
    if not text:
        raise ValueError("cannot identify empty text")
    ranked = sorted(((-p.score(text), p.lang) for p in profiles))
    best_score, best_lang = -ranked[0][0], ranked[0][1]
    margin = ranked[1][0] + best_score if len(ranked) > 1 else math.inf
    margin = max(margin, 0.0)
    return Identification(best_lang, best_score, margin, margin >= threshold)

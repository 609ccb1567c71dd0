"""Word identification and normalization.

Space-delimited languages are split on Unicode character classes and then
normalized with a per-language rule table (clitic splitting, root
candidates).  Unspaced scripts are segmented by greedy longest match against
the lexicon.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path

WORD = "word"
PUNCT = "punctuation"
NUMBER = "number"

DEFAULT_MAX_WORD_LEN = 8
_MAX_SPLIT_DEPTH = 8


@dataclass(frozen=True)
class Token:
    surface: str
    span: tuple = (0, 0)
    kind: str = WORD


@dataclass(frozen=True)
class NormalizationResult:
    parts: tuple
    lemma_candidates: tuple  # one tuple of candidates per part, surface first


def char_class(ch: str) -> str | None:
    if ch.isspace():
        return None
    cat = unicodedata.category(ch)
    if cat[0] in "LM":
        return WORD
    if cat[0] == "N":
        return NUMBER
    return PUNCT


def tokenize_spaced(segment) -> list:
    """Maximal runs of letters, of digits and of other non-space characters."""
    text = str(segment)
    tokens = []
    i = 0
    while i < len(text):
        kind = char_class(text[i])
        if kind is None:
            i += 1
            continue
        j = i + 1
        while j < len(text) and char_class(text[j]) == kind:
            j += 1
        tokens.append(Token(text[i:j], (i, j), kind))
        i = j
    return tokens


def segment_unspaced(segment, lexicon, max_word_len: int = DEFAULT_MAX_WORD_LEN) -> list:
    """Greedy left-to-right longest match against ``lexicon`` headwords.

    Where no headword matches, one character is emitted on its own.
    Whitespace is skipped.  Only the headword set matters, never the glosses.
    """
    text = str(segment)
    tokens = []
    i = 0
    while i < len(text):
        kind = char_class(text[i])
        if kind is None:
            i += 1
            continue
        n = lexicon.longest_prefix(text, i, max_word_len) if lexicon is not None else 0
        if n == 0:
            n = 1
        else:
            kind = WORD
        tokens.append(Token(text[i : i + n], (i, i + n), kind))
        i += n
    return tokens


def tokenize(segment, lexicon=None, unspaced: bool = False, max_word_len: int = DEFAULT_MAX_WORD_LEN):
    """Tokenize a segment the way its language requires.

    For unspaced languages, letter runs are segmented against the lexicon
    and everything else is handled as for spaced text.
    """
    tokens = tokenize_spaced(segment)
    if not unspaced:
        return tokens
    out = []
    for tok in tokens:
        if tok.kind != WORD:
            out.append(tok)
            continue
        start = tok.span[0]
        for sub in segment_unspaced(tok.surface, lexicon, max_word_len):
            out.append(Token(sub.surface, (sub.span[0] + start, sub.span[1] + start), sub.kind))
    return out


@dataclass(frozen=True)
class RuleTable:
    """Ordered split rules ``(regex, template parts)`` and root rules ``(suffix, replacement)``."""

    splits: tuple = ()
    roots: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "RuleTable":
        splits, roots = [], []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            kind, _, body = line.partition(":")
            lhs, arrow, rhs = body.partition("->")
            if not arrow or not lhs.strip():
                raise ValueError(f"rule line {lineno}: expected '<kind>:<lhs>-><rhs>', got {raw!r}")
            lhs, rhs = lhs.strip(), rhs.strip()
            if kind == "split":
                splits.append((re.compile(lhs, re.IGNORECASE), tuple(rhs.split("+"))))
            elif kind == "root":
                roots.append((lhs.lstrip("-"), rhs.lstrip("-")))
            else:
                raise ValueError(f"rule line {lineno}: unknown rule kind {kind!r}")
        return cls(tuple(splits), tuple(roots))

    @classmethod
    def load(cls, path) -> "RuleTable":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


EMPTY_RULES = RuleTable()


def _split_once(word, rules):
    for pattern, template in rules.splits:
        m = pattern.fullmatch(word)
        if m:
            parts = [m.expand(t) for t in template]
            parts = [p for p in parts if p]
            if len(parts) > 1:
                return parts
    return None


def _split(word, rules, depth=0):
    parts = _split_once(word, rules) if depth < _MAX_SPLIT_DEPTH else None
    if parts is None:
        return [word]
    return [q for p in parts for q in _split(p, rules, depth + 1)]


def root_candidates(word: str, rules: RuleTable) -> tuple:
    cands = [word]
    low = word.casefold()
    for suffix, repl in rules.roots:
        if low.endswith(suffix) and len(low) > len(suffix):
            cand = word[: len(word) - len(suffix)] + repl
            if cand not in cands:
                cands.append(cand)
    return tuple(cands)


def normalize(token: Token, lang: str = "", rules: RuleTable | None = None) -> NormalizationResult:
    """Split clitics off ``token`` and list lookup candidates for each part.

    Split rules are applied repeatedly until no part splits further, so the
    result is stable when its own parts are normalized again.
    """
    rules = rules or EMPTY_RULES
    parts = _split(token.surface, rules)
    return NormalizationResult(tuple(parts), tuple(root_candidates(p, rules) for p in parts))

"""Gloss presentation policy and segment rendering."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import regex

from .tokenizer import PUNCT, WORD

COMMON = "Common"
_SCRIPTS = (
    "Latin Greek Cyrillic Armenian Hebrew Arabic Devanagari Bengali Thai "
    "Hangul Hiragana Katakana Han Georgian Ethiopic Khmer Lao Tamil"
).split()
_SCRIPT_RES = [(name, regex.compile(rf"\p{{Script={name}}}")) for name in _SCRIPTS]


class Outcome(enum.Enum):
    SINGLE = "single-gloss"
    MULTI = "multi-gloss"
    COGNATE = "unknown-cognate"
    ELIDED = "unknown-elided"
    PASSTHROUGH = "passthrough"


@dataclass(frozen=True)
class GlossPolicy:
    max_glosses: int = 3
    user_scripts: frozenset = frozenset({"Latin"})
    ellipsis_marker: str = "…"

    def __post_init__(self):
        if self.max_glosses < 1:
            raise ValueError("max_glosses must be at least 1")
        object.__setattr__(self, "user_scripts", frozenset(self.user_scripts))


@dataclass(frozen=True)
class GlossedToken:
    outcome: Outcome
    rendered: str
    surface: str = ""
    glosses: tuple = ()
    kind: str = WORD


def char_script(ch: str) -> str:
    for name, rx in _SCRIPT_RES:
        if rx.match(ch):
            return name
    return COMMON


def token_script(text: str) -> str:
    """Script of the first character that belongs to a specific script."""
    for ch in text:
        script = char_script(ch)
        if script != COMMON:
            return script
    return COMMON


def gloss_token(entry, token, policy: GlossPolicy, script: str | None = None) -> GlossedToken:
    surface = token.surface
    if token.kind != WORD:
        return GlossedToken(Outcome.PASSTHROUGH, surface, surface, kind=token.kind)
    if entry is not None:
        glosses = tuple(entry.glosses)
        if len(glosses) == 1:
            return GlossedToken(Outcome.SINGLE, glosses[0], surface, glosses)
        shown = glosses[: policy.max_glosses]
        return GlossedToken(Outcome.MULTI, "(" + ", ".join(shown) + ")", surface, shown)
    script = script or token_script(surface)
    if script == COMMON or script in policy.user_scripts:
        return GlossedToken(Outcome.COGNATE, surface, surface)
    return GlossedToken(Outcome.ELIDED, policy.ellipsis_marker, surface)


def render_segment(glossed, wrap=None) -> str:
    """Join rendered tokens with single spaces in source order.

    Runs of elided tokens collapse into one marker and punctuation attaches
    to whatever precedes it.  ``wrap``, if given, maps each shown token to
    the string emitted for it (the proxy uses this to add markup).
    """
    out = []
    prev = None
    for g in glossed:
        if g.outcome is Outcome.ELIDED and prev is Outcome.ELIDED:
            continue
        is_punct = g.outcome is Outcome.PASSTHROUGH and g.kind == PUNCT
        if out and not is_punct:
            out.append(" ")
        out.append(wrap(g) if wrap else g.rendered)
        prev = g.outcome
    return "".join(out)

"""Bilingual dictionaries: loading, longest-prefix matching and lookup."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from .encoding import decode_document

log = logging.getLogger(__name__)

TSV = "tsv"
EDICT = "edict"

_EDICT_LINE = re.compile(r"^(?P<head>\S+)\s*(?:\[(?P<reading>[^\]]*)\])?\s*/(?P<glosses>.*)/\s*$")
# leading part-of-speech style markers such as "(n)", "(v5r,vt)", "(1)"
_EDICT_TAG = re.compile(r"^(?:\([A-Za-z0-9,\-]+\)\s*)+")


class LexiconError(Exception):
    pass


def fold(word: str) -> str:
    """Case-fold a headword; unicameral scripts pass through unchanged."""
    return word.casefold()


@dataclass(frozen=True)
class LexEntry:
    headword: str
    glosses: tuple

    def __post_init__(self):
        if not self.glosses or any(not g for g in self.glosses):
            raise ValueError(f"entry {self.headword!r} needs at least one non-empty gloss")


class PrefixIndex:
    """Character trie over headwords, for longest-match segmentation."""

    _END = object()

    def __init__(self, words=()):
        self.root = {}
        for w in words:
            self.add(w)

    def add(self, word):
        node = self.root
        for ch in word:
            node = node.setdefault(ch, {})
        node[self._END] = True

    def longest_prefix(self, text: str, start: int = 0, max_len: int | None = None) -> int:
        """Length of the longest headword that starts ``text`` at ``start`` (0 if none)."""
        node, best = self.root, 0
        stop = len(text) if max_len is None else min(len(text), start + max_len)
        for i in range(start, stop):
            node = node.get(text[i])
            if node is None:
                break
            if self._END in node:
                best = i - start + 1
        return best

    def __iter__(self):
        stack = [("", self.root)]
        while stack:
            prefix, node = stack.pop()
            for key, child in node.items():
                if key is self._END:
                    yield prefix
                else:
                    stack.append((prefix + key, child))


@dataclass
class Lexicon:
    source_lang: str
    target_lang: str
    entries: dict
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.headword_index = PrefixIndex(self.entries)
        self.max_headword = max((len(h) for h in self.entries), default=0)

    @classmethod
    def from_dict(cls, mapping, source_lang="xx", target_lang="en"):
        entries = {fold(h): LexEntry(fold(h), tuple(g)) for h, g in mapping.items()}
        return cls(source_lang, target_lang, entries)

    def __contains__(self, word):
        return fold(word) in self.entries

    def __len__(self):
        return len(self.entries)

    def get(self, word):
        return self.entries.get(fold(word))

    def longest_prefix(self, text, start=0, max_len=None):
        # the trie holds folded headwords; fold the window char by char so
        # offsets stay aligned (length-changing folds such as "ß" are skipped)
        stop = len(text) if max_len is None else min(len(text), start + max_len)
        window = "".join(_fold_char(c) for c in text[start:stop])
        return self.headword_index.longest_prefix(window, 0)


def _fold_char(ch):
    f = ch.casefold()
    return f if len(f) == 1 else ch


def _parse_tsv(line):
    if "\t" not in line:
        return None
    head, _, rest = line.partition("\t")
    glosses = [g.strip() for g in rest.split("|")]
    return head.strip(), [g for g in glosses if g]


def _parse_edict(line):
    m = _EDICT_LINE.match(line)
    if not m:
        return None
    glosses = []
    for g in m.group("glosses").split("/"):
        g = _EDICT_TAG.sub("", g.strip()).strip()
        if g and g not in ("(P)", "P"):
            glosses.append(g)
    return m.group("head"), glosses


def parse_lines(lines, fmt=TSV, source_lang="xx", target_lang="en") -> Lexicon:
    parse = {TSV: _parse_tsv, EDICT: _parse_edict}.get(fmt)
    if parse is None:
        raise LexiconError(f"unknown lexicon format {fmt!r}")
    merged_glosses, malformed, merged = {}, 0, 0
    for line in lines:
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parsed = parse(line)
        if parsed is None or not parsed[0] or not parsed[1]:
            malformed += 1
            continue
        head, glosses = fold(parsed[0]), parsed[1]
        if head in merged_glosses:
            merged += 1
            have = merged_glosses[head]
            have.extend(g for g in glosses if g not in have)
        else:
            merged_glosses[head] = list(dict.fromkeys(glosses))
    if not merged_glosses:
        raise LexiconError("lexicon has no valid entries")
    entries = {h: LexEntry(h, tuple(g)) for h, g in merged_glosses.items()}
    stats = {"entries": len(entries), "merged": merged, "malformed": malformed}
    return Lexicon(source_lang, target_lang, entries, stats)


def load(path, fmt=None, source_lang="xx", target_lang="en") -> Lexicon:
    """Load a TSV (``head<TAB>g1|g2``) or EDICT-style (``head [reading] /g1/g2/``) file.

    The format defaults from the file extension (``.edict`` or else TSV).
    File bytes go through charset detection, so EUC-JP dictionaries load too.
    Malformed lines are skipped and counted in ``lexicon.stats``.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise LexiconError(f"cannot read lexicon {path}: {exc}") from None
    if fmt is None:
        fmt = EDICT if path.suffix.lower() == ".edict" else TSV
    text = decode_document(data).text
    try:
        lex = parse_lines(text.splitlines(), fmt, source_lang, target_lang)
    except LexiconError as exc:
        raise LexiconError(f"{path}: {exc}") from None
    log.info("loaded lexicon %s (%s->%s): %s", path, source_lang, target_lang, lex.stats)
    return lex


def lookup(lex: Lexicon | None, result) -> list:
    """For each part of a normalization result, the entry of its first known candidate."""
    found = []
    for candidates in result.lemma_candidates:
        entry = None
        if lex is not None:
            for cand in candidates:
                entry = lex.get(cand)
                if entry is not None:
                    break
        found.append(entry)
    return found

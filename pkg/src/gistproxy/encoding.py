"""Charset detection and conversion to a single internal Unicode representation.

Five charsets are supported.  Labels are case-insensitive on input and
canonicalized to ``UTF-8``, ``EUC-JP``, ``Shift-JIS``, ``ISO-8859-1`` and
``US-ASCII``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

UTF8 = "UTF-8"
EUC_JP = "EUC-JP"
SHIFT_JIS = "Shift-JIS"
LATIN1 = "ISO-8859-1"
ASCII = "US-ASCII"

# canonical label -> python codec
CODECS = {
    UTF8: "utf-8",
    EUC_JP: "euc_jp",
    SHIFT_JIS: "shift_jis",
    LATIN1: "latin-1",
    ASCII: "ascii",
}

# tie-break order for the sniffer
PRIORITY = (UTF8, EUC_JP, SHIFT_JIS, LATIN1)

_ALIASES = {
    "utf-8": UTF8,
    "utf8": UTF8,
    "euc-jp": EUC_JP,
    "eucjp": EUC_JP,
    "euc_jp": EUC_JP,
    "x-euc-jp": EUC_JP,
    "shift_jis": SHIFT_JIS,
    "shift-jis": SHIFT_JIS,
    "shiftjis": SHIFT_JIS,
    "sjis": SHIFT_JIS,
    "x-sjis": SHIFT_JIS,
    "iso-8859-1": LATIN1,
    "iso8859-1": LATIN1,
    "iso_8859-1": LATIN1,
    "latin-1": LATIN1,
    "latin1": LATIN1,
    "us-ascii": ASCII,
    "ascii": ASCII,
}


class UnsupportedCharset(ValueError):
    """Raised for a charset label outside the supported set."""


def canonical_label(label: str | None) -> str | None:
    """Return the canonical spelling of ``label``, or None if unsupported."""
    if not label:
        return None
    return _ALIASES.get(label.strip().strip("\"'").lower())


@dataclass(frozen=True)
class CharsetEvidence:
    transport_hint: str | None = None
    document_hint: str | None = None
    sniffed: str | None = None
    confidence: float | None = None

    def __post_init__(self):
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class InternalText:
    text: str
    source_charset: str
    lossy: bool = False

    def __str__(self):
        return self.text


def _multibyte_score(data: bytes, charset: str) -> float | None:
    """Fraction of bytes consumed by multi-byte characters, or None if invalid."""
    codec = CODECS[charset]
    try:
        text = data.decode(codec)
    except UnicodeDecodeError:
        return None
    if charset == LATIN1:
        return 0.0
    multi = 0
    for ch in text:
        if ord(ch) >= 0x80:
            n = len(ch.encode(codec))
            if n > 1:
                multi += n
    return multi / len(data)


def sniff(data: bytes) -> tuple[str, float]:
    """Guess the charset of ``data`` from its bytes alone.

    Returns ``(label, confidence)``.  Pure 7-bit input is ``US-ASCII`` with
    confidence 1.  Otherwise every candidate under which the bytes decode is
    scored by the share of bytes that land in multi-byte characters; ties go
    to the earlier entry of ``PRIORITY``.  ISO-8859-1 accepts any byte string
    so it is always a valid answer of last resort.
    """
    if not data or max(data) < 0x80:
        return ASCII, 1.0
    best, best_score = LATIN1, -1.0
    for label in PRIORITY:
        score = _multibyte_score(data, label)
        if score is not None and score > best_score:
            best, best_score = label, score
    return best, max(best_score, 0.0)


_META_CHARSET = re.compile(
    rb"""<meta[^>]+charset\s*=\s*["']?\s*([A-Za-z0-9._:-]+)""", re.IGNORECASE
)


def document_charset(data: bytes, limit: int = 4096) -> str | None:
    """Charset declared by a ``<meta>`` tag near the top of the document."""
    m = _META_CHARSET.search(data[:limit])
    if m:
        return m.group(1).decode("ascii", "replace")
    return None


def gather_evidence(data: bytes, transport_hint: str | None = None) -> CharsetEvidence:
    label, conf = sniff(data)
    return CharsetEvidence(
        transport_hint=transport_hint,
        document_hint=document_charset(data),
        sniffed=label,
        confidence=conf,
    )


def detect_charset(data: bytes, evidence: CharsetEvidence | None = None) -> str:
    """Resolve the charset for ``data``.

    Precedence is the in-document declaration, then the transport header,
    then the byte sniffer, then ISO-8859-1.  Hints naming unsupported
    charsets are skipped.
    """
    if not data:
        raise ValueError("cannot detect the charset of empty input")
    evidence = evidence or CharsetEvidence()
    for hint in (evidence.document_hint, evidence.transport_hint):
        label = canonical_label(hint)
        if label:
            return label
    sniffed = canonical_label(evidence.sniffed) or sniff(data)[0]
    return sniffed or LATIN1


def to_internal(data: bytes, charset: str) -> InternalText:
    """Decode ``data`` as ``charset``; undecodable bytes become U+FFFD."""
    label = canonical_label(charset)
    if label is None:
        raise UnsupportedCharset(f"unsupported charset {charset!r}")
    codec = CODECS[label]
    try:
        return InternalText(data.decode(codec), label, False)
    except UnicodeDecodeError:
        return InternalText(data.decode(codec, errors="replace"), label, True)


def decode_document(data: bytes, transport_hint: str | None = None) -> InternalText:
    """Detect and decode in one step, as the proxy does for fetched pages."""
    if not data:
        return InternalText("", UTF8, False)
    return to_internal(data, detect_charset(data, gather_evidence(data, transport_hint)))

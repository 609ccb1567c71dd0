"""Split an HTML page into structurally distinct text segments and put it back together.

The page is parsed with the tolerant stdlib ``HTMLParser`` into a flat list of
slots: literal markup, start tags (kept structured so links can be rewritten)
and text runs.  Each text run belongs to one segment.  A segment may hold
several runs when inline markup such as ``<b>`` or ``<a>`` sits inside a
block; replacements can then be given either for the whole segment or per run.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field, replace
from html.parser import HTMLParser

HEADING = "heading"
PARAGRAPH = "paragraph"
LIST_ITEM = "list-item"
TABLE_CELL = "table-cell"
ANCHOR_TEXT = "anchor-text"
TITLE = "title"
OTHER = "other-block"

CONTEXT_OF = {
    "p": PARAGRAPH,
    "li": LIST_ITEM,
    "td": TABLE_CELL,
    "th": TABLE_CELL,
    "title": TITLE,
    **{f"h{i}": HEADING for i in range(1, 7)},
}

BLOCK_TAGS = frozenset(
    """p li td th h1 h2 h3 h4 h5 h6 div br title option
    html head body ul ol dl dt dd table thead tbody tfoot tr caption
    blockquote pre form fieldset legend select textarea hr address center
    section article aside header footer nav main figure figcaption noscript
    iframe frame frameset""".split()
)
SKIP_TAGS = frozenset({"script", "style"})
VOID_TAGS = frozenset(
    "area base br col embed hr img input link meta param source track wbr".split()
)
# start of one of these closes an open element of the same name within scope
_SELF_CLOSING_SIBLINGS = frozenset("p li td th tr option dt dd a h1 h2 h3 h4 h5 h6".split())
_SCOPE_TAGS = frozenset("html body ul ol dl table select div td th".split())
_CLOSES_P = BLOCK_TAGS - {"br", "title", "option", "html", "head", "body", "td", "th", "tr"}

_WS = re.compile(r"[ \t\n\r\f]+")
_LEAD = re.compile(r"^[ \t\n\r\f]*")
_TRAIL = re.compile(r"[ \t\n\r\f]*$")


class StructureError(ValueError):
    """Raised when a skeleton cannot be filled from the given replacements."""


class Markup(str):
    """Replacement text that is already valid markup and must not be escaped."""


@dataclass(frozen=True)
class Literal:
    text: str

    def render(self):
        return self.text


@dataclass(frozen=True)
class StartTag:
    name: str
    attrs: tuple
    raw: str | None = None
    self_closing: bool = False

    def get(self, key, default=None):
        for k, v in self.attrs:
            if k == key:
                return v
        return default

    def with_attr(self, key, value):
        attrs = tuple((k, value if k == key else v) for k, v in self.attrs)
        return replace(self, attrs=attrs, raw=None)

    def render(self):
        if self.raw is not None:
            return self.raw
        parts = [self.name]
        for k, v in self.attrs:
            parts.append(k if v is None else f'{k}="{html.escape(v, quote=True)}"')
        return "<" + " ".join(parts) + (" />" if self.self_closing else ">")


@dataclass(frozen=True)
class TextRun:
    segment: int
    run: int
    lead: str
    content: str
    trail: str


@dataclass(frozen=True)
class Segment:
    id: int
    text: str
    context: str
    run_spans: tuple  # per run, (start, end) of its content within ``text``

    def run_texts(self):
        return [self.text[a:b] for a, b in self.run_spans]


@dataclass(frozen=True)
class PageSkeleton:
    slots: tuple
    base_url: str = ""
    segment_ids: tuple = field(default=())


def collapse(text: str) -> str:
    return _WS.sub(" ", text).strip(" \t\n\r\f")


def _split_ws(raw: str):
    lead = _LEAD.match(raw).group()
    if len(lead) == len(raw):
        return raw, "", ""
    trail = _TRAIL.search(raw).group()
    core = raw[len(lead) : len(raw) - len(trail)]
    return lead, collapse(core), trail


class _Builder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.slots = []
        self.stack = []
        self.segments = []
        self._pending = []  # (slot index, raw text, block context, in anchor)
        self._skip = 0

    # -- segment bookkeeping
    def _flush(self):
        pending, self._pending = self._pending, []
        if not pending:
            return
        pieces = [_split_ws(raw) for _, raw, _, _ in pending]
        if not any(core for _, core, _ in pieces):
            for idx, raw, _, _ in pending:
                self.slots[idx] = Literal(raw)
            return
        seg_id = len(self.segments)
        spans, chunks = [], []
        pos, seen_core, gap = 0, False, False
        for lead, core, trail in pieces:
            if not core:
                gap = gap or bool(lead)
                spans.append(None)
                continue
            if seen_core and (gap or lead):
                chunks.append(" ")
                pos += 1
            spans.append((pos, pos + len(core)))
            chunks.append(core)
            pos += len(core)
            seen_core, gap = True, bool(trail)
        end = pos
        text = "".join(chunks)
        fixed = []
        for (a_b, (idx, _, _, _), (lead, core, trail)) in zip(spans, pending, pieces):
            if a_b is None:
                # whitespace-only run: keep it, anchor its span at the nearest core
                nxt = next((s for s in spans[len(fixed):] if s), None)
                a_b = (nxt[0], nxt[0]) if nxt else (end, end)
            fixed.append(a_b)
            self.slots[idx] = TextRun(seg_id, len(fixed) - 1, lead, core, trail)
        core_runs = [p for p, (_, c, _) in zip(pending, pieces) if c]
        if all(in_a for _, _, _, in_a in core_runs):
            context = ANCHOR_TEXT
        else:
            context = core_runs[0][2]
        self.segments.append(Segment(seg_id, text, context, tuple(fixed)))

    def _block_context(self):
        for tag in reversed(self.stack):
            if tag in CONTEXT_OF:
                return CONTEXT_OF[tag]
        return OTHER

    # -- element stack, with implicit closing
    def _pop_to(self, tag):
        if tag in self.stack:
            while self.stack:
                if self.stack.pop() == tag:
                    break

    def _open(self, tag):
        if tag in _SELF_CLOSING_SIBLINGS:
            for open_tag in reversed(self.stack):
                if open_tag == tag:
                    self._pop_to(tag)
                    break
                if open_tag in _SCOPE_TAGS:
                    break
        if tag in _CLOSES_P and "p" in self.stack:
            for open_tag in reversed(self.stack):
                if open_tag == "p":
                    self._pop_to("p")
                    break
                if open_tag in _SCOPE_TAGS:
                    break
        if tag not in VOID_TAGS:
            self.stack.append(tag)

    # -- parser callbacks
    def handle_starttag(self, tag, attrs):
        self._start(tag, attrs, False)

    def handle_startendtag(self, tag, attrs):
        self._start(tag, attrs, True)

    def _start(self, tag, attrs, self_closing):
        if tag in BLOCK_TAGS or tag in SKIP_TAGS:
            self._flush()
        if tag in SKIP_TAGS and not self_closing:
            self._skip += 1
        self._open(tag)
        if self_closing and tag not in VOID_TAGS and self.stack and self.stack[-1] == tag:
            self.stack.pop()
        self.slots.append(StartTag(tag, tuple(attrs), self.get_starttag_text(), self_closing))

    def handle_endtag(self, tag):
        if tag in BLOCK_TAGS:
            self._flush()
        if tag in SKIP_TAGS and self._skip:
            self._skip -= 1
        self._pop_to(tag)
        self.slots.append(Literal(f"</{tag}>"))

    def handle_data(self, data):
        if self._skip:
            self.slots.append(Literal(data))
            return
        # merge with a directly preceding text run of the same segment
        if self._pending and self._pending[-1][0] == len(self.slots) - 1:
            idx, raw, ctx, in_a = self._pending[-1]
            self._pending[-1] = (idx, raw + data, ctx, in_a)
            return
        self._pending.append((len(self.slots), data, self._block_context(), "a" in self.stack))
        self.slots.append(None)

    def handle_comment(self, data):
        self.slots.append(Literal(f"<!--{data}-->"))

    def handle_decl(self, decl):
        self.slots.append(Literal(f"<!{decl}>"))

    def handle_pi(self, data):
        self.slots.append(Literal(f"<?{data}>"))

    def unknown_decl(self, data):
        self.slots.append(Literal(f"<![{data}]>"))

    def finish(self):
        self.close()
        self._flush()


def segment(page, base_url: str = ""):
    """Parse ``page`` into a ``(PageSkeleton, [Segment, ...])`` pair.

    Text inside script, style and comments never becomes a segment.  Block
    level tags end the current segment; inline tags do not.
    """
    builder = _Builder()
    builder.feed(str(page))
    builder.finish()
    segments = builder.segments
    skeleton = PageSkeleton(tuple(builder.slots), base_url, tuple(s.id for s in segments))
    return skeleton, segments


def identity(segments):
    return {s.id: s.run_texts() for s in segments}


def _escape(text):
    if isinstance(text, Markup):
        return str(text)
    return html.escape(text, quote=False)


def reassemble(skeleton: PageSkeleton, replacements) -> str:
    """Re-emit the page with segment text swapped for ``replacements``.

    ``replacements`` maps segment id to either one string, placed in the
    segment's first text run (the remaining runs are emptied), or a list with
    one string per run.  Plain strings are escaped; ``Markup`` is not.
    """
    missing = [i for i in skeleton.segment_ids if i not in replacements]
    if missing:
        raise StructureError(f"no replacement for segment(s) {missing[:10]}")
    out = []
    placed = set()
    for slot in skeleton.slots:
        if not isinstance(slot, TextRun):
            out.append(slot.render())
            continue
        value = replacements[slot.segment]
        if isinstance(value, str):
            if slot.segment not in placed and slot.content:
                placed.add(slot.segment)
                text = value
            else:
                text = ""
        else:
            if len(value) <= slot.run:
                raise StructureError(f"segment {slot.segment} has no text for run {slot.run}")
            text = value[slot.run]
        out.append(slot.lead + _escape(text) + slot.trail)
    return "".join(out)

"""The gisting pipeline, link rewriting and the HTTP service around them."""

from __future__ import annotations

import html
import json
import logging
import threading
import time
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass, field, replace
from email.message import Message
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, quote, urldefrag, urljoin, urlsplit

from . import __version__
from .config import Config
from .encoding import UnsupportedCharset, decode_document
from .glosser import GlossPolicy, Outcome, gloss_token, render_segment
from .langid import identify, load_profile
from .lexicon import load as load_lexicon
from .lexicon import lookup
from .segmenter import TITLE, Literal, Markup, StartTag, TextRun, reassemble, segment
from .tokenizer import WORD, RuleTable, Token, normalize, tokenize

log = logging.getLogger(__name__)

NAVIGATION_ATTRS = {("a", "href"), ("area", "href")}
RESOURCE_ATTRS = {
    ("img", "src"),
    ("img", "lowsrc"),
    ("script", "src"),
    ("link", "href"),
    ("iframe", "src"),
    ("frame", "src"),
    ("embed", "src"),
    ("source", "src"),
    ("audio", "src"),
    ("video", "src"),
    ("video", "poster"),
    ("input", "src"),
    ("object", "data"),
    ("body", "background"),
    ("table", "background"),
    ("td", "background"),
    ("form", "action"),
}
WEB_SCHEMES = ("http", "https")
BANNER_ID = "gist-banner"


class GistError(Exception):
    def __init__(self, status, message):
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass
class Services:
    """Everything the pipeline needs, loaded once and shared read-only."""

    profiles: list = field(default_factory=list)
    lexicons: dict = field(default_factory=dict)  # (src, tgt) -> Lexicon
    rules: dict = field(default_factory=dict)  # lang -> RuleTable
    policy: GlossPolicy = field(default_factory=GlossPolicy)
    unspaced: frozenset = frozenset({"ja", "zh"})
    threshold: float = 2.0
    max_word_len: int = 8
    proxy_base: str = "http://127.0.0.1:8080"
    timeout_s: float = 15.0
    max_body_bytes: int = 5 * 1024 * 1024
    default_lang: str = "en"

    @classmethod
    def from_config(cls, cfg: Config) -> "Services":
        profiles = [load_profile(p, cfg.priors.get(lang, 0.0)) for lang, p in sorted(cfg.profiles.items())]
        lexicons = {
            pair: load_lexicon(path, source_lang=pair[0], target_lang=pair[1])
            for pair, path in cfg.lexicons.items()
        }
        rules = {lang: RuleTable.load(path) for lang, path in cfg.rules.items()}
        policy = GlossPolicy(cfg.max_glosses, frozenset(cfg.user_scripts), cfg.ellipsis_marker)
        return cls(
            profiles=profiles,
            lexicons=lexicons,
            rules=rules,
            policy=policy,
            unspaced=frozenset(cfg.unspaced_langs),
            threshold=cfg.confidence_threshold,
            max_word_len=cfg.max_word_len,
            proxy_base=cfg.base,
            timeout_s=cfg.timeout_s,
            max_body_bytes=cfg.max_body_bytes,
            default_lang=cfg.default_lang,
        )

    @property
    def target_langs(self):
        return sorted({tgt for _, tgt in self.lexicons})

    def summary(self):
        return {
            "profiles": [p.lang for p in self.profiles],
            "lexicons": {f"{s}-{t}": len(lex) for (s, t), lex in sorted(self.lexicons.items())},
            "rules": sorted(self.rules),
            "target_langs": self.target_langs,
            "max_glosses": self.policy.max_glosses,
        }


@dataclass(frozen=True)
class GistRequest:
    target_url: str
    user_lang: str = "en"
    policy: GlossPolicy | None = None


@dataclass
class GistResult:
    html: str
    stats: dict | None = None
    elapsed: float = 0.0
    status: int = 200
    error: str | None = None


# -- links


# characters left alone when cleaning up a link target; existing %XX escapes survive
_URL_SAFE = "!#$%&'()*+,/:;=?@[]~"


def proxied_url(target: str, proxy_base: str, user_lang: str) -> str:
    # spaces and non-ASCII are escaped first, as a browser would before requesting
    target, frag = urldefrag(quote(target, safe=_URL_SAFE))
    url = f"{proxy_base.rstrip('/')}/gist?url={quote(target, safe='')}&to={quote(user_lang, safe='')}"
    return url + (f"#{frag}" if frag else "")


def unwrap(url: str, proxy_base: str) -> str:
    """Strip any number of layers of our own ``/gist?url=`` wrapping."""
    prefix = proxy_base.rstrip("/") + "/gist?"
    for _ in range(16):
        if not url.startswith(prefix):
            break
        inner = parse_qs(urlsplit(url).query).get("url")
        if not inner:
            break
        url = inner[0]
    return url


def _document_base(skeleton):
    base = skeleton.base_url
    for slot in skeleton.slots:
        if isinstance(slot, StartTag) and slot.name == "base" and slot.get("href"):
            try:
                return urljoin(base, slot.get("href").strip())
            except ValueError:
                break
    return base


def rewrite_links(skeleton, proxy_base: str, user_lang: str, diagnostics: dict | None = None):
    """Route navigation links through the proxy; make resource URLs absolute.

    Fragment-only links and non-web schemes stay as they are.  Targets that
    cannot be parsed are left alone and counted in ``diagnostics``.
    """
    diagnostics = diagnostics if diagnostics is not None else {}
    diagnostics.setdefault("unparseable_links", 0)
    diagnostics.setdefault("rewritten_links", 0)
    base = _document_base(skeleton)
    slots = []
    for slot in skeleton.slots:
        if isinstance(slot, StartTag):
            slot = _rewrite_tag(slot, base, proxy_base, user_lang, diagnostics)
        slots.append(slot)
    return replace(skeleton, slots=tuple(slots))


def _rewrite_tag(tag, base, proxy_base, user_lang, diagnostics):
    for key, value in tag.attrs:
        pair = (tag.name, key)
        if value is None or (pair not in NAVIGATION_ATTRS and pair not in RESOURCE_ATTRS):
            continue
        target = value.strip()
        if target.startswith("#"):
            continue
        try:
            absolute = urljoin(base, target)
            scheme = urlsplit(absolute).scheme.lower()
        except ValueError:
            diagnostics["unparseable_links"] += 1
            continue
        if scheme not in WEB_SCHEMES:
            continue
        if pair in NAVIGATION_ATTRS:
            absolute = unwrap(absolute, proxy_base)
            new = proxied_url(absolute, proxy_base, user_lang)
            diagnostics["rewritten_links"] += 1
        else:
            new = absolute
        if new != value:
            tag = tag.with_attr(key, new)
    if tag.name == "meta":
        charset = tag.get("charset")
        if charset is not None and charset.lower() != "utf-8":
            tag = tag.with_attr("charset", "utf-8")
        elif charset is None and (tag.get("http-equiv") or "").lower() == "content-type":
            tag = tag.with_attr("content", "text/html; charset=utf-8")
    return tag


# -- pipeline


def _majority(langs):
    if not langs:
        return None
    counts = Counter(langs)
    return min(counts, key=lambda lang: (-counts[lang], lang))


def _wrap(g):
    text = html.escape(g.rendered, quote=False)
    if g.outcome is Outcome.PASSTHROUGH:
        return text
    return f'<span class="gist" title="{html.escape(g.surface, quote=True)}">{text}</span>'


def _gloss_segment(seg, lang, user_lang, services, policy, stats):
    lex = services.lexicons.get((lang, user_lang))
    rules = services.rules.get(lang)
    tokens = tokenize(seg.text, lex, lang in services.unspaced, services.max_word_len)
    glossed = []  # (start offset, GlossedToken)
    for tok in tokens:
        if tok.kind != WORD:
            glossed.append((tok.span[0], gloss_token(None, tok, policy)))
            continue
        norm = normalize(tok, lang, rules)
        entries = lookup(lex, norm)
        if len(norm.parts) > 1 and not any(entries):
            # nothing known about any piece: show the word whole
            glossed.append((tok.span[0], gloss_token(None, tok, policy)))
            continue
        for part, entry in zip(norm.parts, entries):
            glossed.append((tok.span[0], gloss_token(entry, Token(part, tok.span, WORD), policy)))
    for _, g in glossed:
        stats[g.outcome.value] += 1
    # each token goes to the run its first character sits in
    runs = [[] for _ in seg.run_spans]
    for start, g in glossed:
        idx = 0
        for i, (a, b) in enumerate(seg.run_spans):
            if a < b and a <= start:
                idx = i
        runs[idx].append(g)
    if seg.context == TITLE:
        # title text is not parsed as markup by browsers
        return [render_segment(run) for run in runs]
    return [Markup(render_segment(run, _wrap)) for run in runs]


def _count(n, noun):
    return f"{n} {noun}" if n == 1 else f"{n} {noun}s"


def _banner(stats, user_lang):
    langs = ", ".join(f"{k} {v}" for k, v in sorted(stats["languages"].items()))
    text = (
        f"Gisted to {user_lang}: {_count(stats['segments'], 'segment')} ({langs}); "
        f"{_count(stats['tokens'], 'token')}: {stats['glossed']} glossed, "
        f"{stats['unknown_cognate']} shown as-is, {stats['elided']} elided, "
        f"{stats['passthrough']} punctuation/numbers."
    )
    return Literal(
        f'<div id="{BANNER_ID}" style="border:1px solid #999;padding:4px;'
        f'font:small sans-serif;background:#ffd">{html.escape(text, quote=False)}</div>'
    )


def _insert_banner(slots, banner):
    for i, slot in enumerate(slots):
        if isinstance(slot, StartTag) and slot.name == "body":
            return slots[: i + 1] + (banner,) + slots[i + 1 :]
    # no <body>: go before the first element that belongs in one
    for i, slot in enumerate(slots):
        if isinstance(slot, StartTag) and slot.name not in _HEAD_TAGS:
            return slots[:i] + (banner,) + slots[i:]
    for i, slot in enumerate(slots):
        if isinstance(slot, TextRun) and slot.content:
            return slots[:i] + (banner,) + slots[i:]
    return slots + (banner,)


_HEAD_TAGS = {"html", "head", "meta", "title", "link", "style", "script", "base", "noscript", "template"}


def gist_document(page: str, base_url: str, user_lang: str, services: Services, policy=None, proxy_base=None):
    """Gist already-decoded HTML.  Returns ``(html, stats)``."""
    policy = policy or services.policy
    proxy_base = proxy_base or services.proxy_base
    skeleton, segments = segment(page, base_url)

    idents = {}
    if services.profiles:
        for seg in segments:
            idents[seg.id] = identify(seg.text, services.profiles, services.threshold)
    page_lang = _majority([i.lang for i in idents.values() if i.confident])

    counts = Counter()
    languages = Counter()
    replacements = {}
    for seg in segments:
        ident = idents.get(seg.id)
        if ident is None:
            lang = services.default_lang
        elif ident.confident or page_lang is None:
            lang = ident.lang
        else:
            lang = page_lang
        languages[lang] += 1
        if lang == user_lang:
            replacements[seg.id] = seg.run_texts()
        else:
            replacements[seg.id] = _gloss_segment(seg, lang, user_lang, services, policy, counts)

    stats = {
        "segments": len(segments),
        "glossed": counts[Outcome.SINGLE.value] + counts[Outcome.MULTI.value],
        "unknown_cognate": counts[Outcome.COGNATE.value],
        "elided": counts[Outcome.ELIDED.value],
        "passthrough": counts[Outcome.PASSTHROUGH.value],
        "languages": dict(languages),
    }
    stats["tokens"] = stats["glossed"] + stats["unknown_cognate"] + stats["elided"] + stats["passthrough"]

    diagnostics = {}
    skeleton = rewrite_links(skeleton, proxy_base, user_lang, diagnostics)
    stats.update(diagnostics)
    skeleton = replace(skeleton, slots=_insert_banner(skeleton.slots, _banner(stats, user_lang)))
    return reassemble(skeleton, replacements), stats


def gist_bytes(data: bytes, base_url: str, user_lang: str, services: Services, transport_hint=None, policy=None):
    text = decode_document(data, transport_hint)
    out, stats = gist_document(text.text, base_url, user_lang, services, policy)
    stats["charset"] = text.source_charset
    stats["lossy"] = text.lossy
    return out, stats


# -- fetching and request handling


def error_page(status, message, url=None):
    target = f"<p>While fetching <code>{html.escape(url)}</code></p>" if url else ""
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Gisting failed</title></head>"
        f"<body><h1>Gisting failed ({status})</h1>{target}"
        f"<p>{html.escape(message)}</p><p><a href=\"/\">Try another page</a></p></body></html>\n"
    )


def fetch(url: str, timeout: float, max_bytes: int):
    """GET ``url`` following redirects.  Returns ``(bytes, final_url, content_type_header)``."""
    req = urllib.request.Request(
        url,
        headers={"Accept-Encoding": "identity", "User-Agent": f"gistproxy/{__version__}"},
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            body = resp.read(max_bytes + 1)
            if len(body) > max_bytes:
                raise GistError(502, f"upstream body exceeds {max_bytes} bytes")
            return body, resp.geturl(), resp.headers.get("Content-Type", "")
    except urllib.error.HTTPError as exc:
        raise GistError(exc.code, f"upstream returned HTTP {exc.code} {exc.reason}") from None
    except urllib.error.URLError as exc:
        reason = exc.reason
        if isinstance(reason, TimeoutError) or "timed out" in str(reason):
            raise GistError(504, f"upstream timed out after {timeout:g} s") from None
        raise GistError(502, f"cannot reach upstream: {reason}") from None
    except TimeoutError:
        raise GistError(504, f"upstream timed out after {timeout:g} s") from None
    except (OSError, ValueError) as exc:
        raise GistError(502, f"fetch failed: {exc}") from None


def _content_type(header):
    msg = Message()
    msg["Content-Type"] = header or "text/html"
    return msg.get_content_type(), msg.get_param("charset")


def handle_gist(req: GistRequest, services: Services, fetcher=fetch, proxy_base=None) -> GistResult:
    """Fetch ``req.target_url`` and gist it; failures come back as error pages."""
    started = time.perf_counter()
    proxy_base = proxy_base or services.proxy_base
    url = quote(unwrap(req.target_url.strip(), proxy_base), safe=_URL_SAFE)
    try:
        if urlsplit(url).scheme.lower() not in WEB_SCHEMES:
            raise GistError(400, "only http and https URLs can be gisted")
        if req.user_lang not in services.target_langs:
            raise GistError(400, f"no dictionary translates into {req.user_lang!r}")
        body, final_url, ctype = fetcher(url, services.timeout_s, services.max_body_bytes)
        mime, charset = _content_type(ctype)
        if mime not in ("text/html", "application/xhtml+xml"):
            raise GistError(415, f"cannot gist content of type {mime}")
        text = decode_document(body, charset)
        page, stats = gist_document(text.text, final_url, req.user_lang, services, req.policy, proxy_base)
        stats["charset"] = text.source_charset
        stats["lossy"] = text.lossy
        return GistResult(page, stats, time.perf_counter() - started)
    except UnsupportedCharset as exc:
        err = GistError(502, str(exc))
    except GistError as exc:
        err = exc
    elapsed = time.perf_counter() - started
    log.warning("gist %s failed: %s", url, err.message)
    return GistResult(error_page(err.status, err.message, url), None, elapsed, err.status, err.message)


# -- HTTP service


class Counters:
    def __init__(self):
        self._lock = threading.Lock()
        self._c = Counter()

    def add(self, **kw):
        with self._lock:
            self._c.update(kw)

    def snapshot(self):
        with self._lock:
            return dict(self._c)


def entry_form(services: Services) -> str:
    options = "".join(
        f'<option value="{html.escape(t)}"{" selected" if t == services.default_lang else ""}>{html.escape(t)}</option>'
        for t in services.target_langs
    )
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Gisting proxy</title></head>\n"
        "<body><h1>Gisting proxy</h1>\n"
        "<p>Enter the address of a page in a language you do not read.</p>\n"
        '<form action="/gist" method="get">\n'
        '<input type="text" name="url" size="60" placeholder="http://">\n'
        f'<select name="to">{options}</select>\n'
        '<input type="submit" value="Gist">\n</form></body></html>\n'
    )


class GistHandler(BaseHTTPRequestHandler):
    services: Services = None
    counters: Counters = None
    server_version = f"gistproxy/{__version__}"

    def _send(self, status, body, ctype="text/html; charset=utf-8", extra=None):
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        for k, v in (extra or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(data)

    def _proxy_base(self):
        cfg_base = self.services.proxy_base
        host = self.headers.get("Host")
        if host and not self.server.fixed_base:
            return f"http://{host}"
        return cfg_base

    def do_GET(self):
        parts = urlsplit(self.path)
        self.counters.add(requests=1)
        if parts.path == "/":
            self._send(200, entry_form(self.services))
        elif parts.path == "/health":
            self._send(200, json.dumps({"status": "ok", **self.services.summary()}), "application/json")
        elif parts.path == "/stats":
            self._send(200, json.dumps(self.counters.snapshot()), "application/json")
        elif parts.path == "/gist":
            self._gist(parse_qs(parts.query))
        else:
            self._send(404, error_page(404, f"no such endpoint {parts.path}"))

    def _gist(self, query):
        url = (query.get("url") or [""])[0].strip()
        lang = (query.get("to") or [self.services.default_lang])[0]
        if not url:
            self.counters.add(errors=1)
            self._send(400, error_page(400, "missing url parameter"))
            return
        result = handle_gist(GistRequest(url, lang), self.services, proxy_base=self._proxy_base())
        extra = {"X-Gist-Elapsed": f"{result.elapsed:.3f}"}
        if result.stats is None:
            self.counters.add(errors=1)
        else:
            self.counters.add(
                gisted=1,
                segments=result.stats["segments"],
                tokens=result.stats["tokens"],
                glossed=result.stats["glossed"],
                unknown_cognate=result.stats["unknown_cognate"],
                elided=result.stats["elided"],
            )
        self._send(result.status, result.html, extra=extra)

    def log_message(self, fmt, *args):
        log.info("%s - %s", self.address_string(), fmt % args)


def make_server(services: Services, host="127.0.0.1", port=8080, fixed_base=False):
    """Bind the service; the caller runs ``serve_forever``."""
    handler = type("BoundGistHandler", (GistHandler,), {"services": services, "counters": Counters()})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    server.fixed_base = fixed_base
    return server


def serve(cfg: Config):
    services = Services.from_config(cfg)
    server = make_server(services, cfg.host, cfg.port, fixed_base=bool(cfg.proxy_base))
    log.info("serving on http://%s:%d/ with %s", cfg.host, server.server_address[1], services.summary())
    try:
        server.serve_forever()
    finally:
        server.server_close()

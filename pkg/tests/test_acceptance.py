"""The nine acceptance criteria, each at its stated tolerance and time limit.

Every test records a one-line PASS/FAIL verdict, printed in the terminal
summary at the end of the run (and immediately with ``-s``).
"""

import itertools
import random
import statistics
import time
from contextlib import contextmanager
from fractions import Fraction
from functools import lru_cache
from html.parser import HTMLParser
from urllib.parse import quote

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gistproxy.cli import main
from gistproxy.encoding import ASCII, EUC_JP, LATIN1, SHIFT_JIS, UTF8, CharsetEvidence, detect_charset, to_internal
from gistproxy.evalkit import (
    CONTROL,
    NONE,
    RANDOM,
    DataError,
    JudgmentSet,
    distance_matrix,
    mean_distance_to_control,
    pairwise_distance,
    random_baseline,
    read_judgments,
    report,
)
from gistproxy.glosser import GlossPolicy, Outcome, gloss_token, render_segment
from gistproxy.langid import identify, train_profile
from gistproxy.lexicon import LexEntry
from gistproxy.proxy import GistRequest, gist_bytes, handle_gist, proxied_url
from gistproxy.segmenter import identity, reassemble, segment
from gistproxy.tokenizer import Token

import htmlgen
from conftest import ACCEPTANCE, FIXTURES, TOY, corpus
from linkcheck import link_problems, links
from oracles import naive_pair
from synth import three_conditions

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(number, title, limit=None):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if limit is not None and elapsed >= limit:
            pytest.fail(f"took {elapsed:.2f} s, limit {limit} s")
    except BaseException as exc:
        msg = " ".join(str(exc).split())[:160]
        ACCEPTANCE[number] = f"criterion {number}: FAIL  {title} ({type(exc).__name__}: {msg})"
        print(ACCEPTANCE[number])
        raise
    timing = f" in {elapsed:.2f} s" + (f" (limit {limit} s)" if limit else "")
    ACCEPTANCE[number] = f"criterion {number}: PASS  {title}{timing}"
    print(ACCEPTANCE[number])


# -- 1. pairwise and mean-to-control distances against naive evaluation

LABELS = (1, 2, NONE)


def _item_patterns(s):
    """Each way ``s`` subjects can agree on one item, as canonical labels (at most 3 groups)."""
    out = []

    def grow(prefix, used):
        if len(prefix) == s:
            out.append(tuple(LABELS[v] for v in prefix))
            return
        for v in range(min(used + 1, len(LABELS))):
            grow(prefix + [v], max(used, v + 1))

    grow([], 0)
    return out


@lru_cache(maxsize=None)
def _oracle_pair(a, b):
    return naive_pair(a, b)


def _oracle_mean(k, controls, table):
    # the mean-to-control definition restated over cached pair values
    others = [j for j in controls if j != k]
    terms = [_oracle_pair(table[j], table[k]) for j in others]
    return sum(terms, Fraction(0)) / len(others)


def _check_set(table, tol=1e-12):
    """Compare every evalkit distance on ``table`` with the naive formulas; returns checks made."""
    names = list(table)
    items = [f"i{x}" for x in range(len(table[names[0]]))]
    js = JudgmentSet(items, [(s, CONTROL) for s in names],
                     {(s, items[x]): c for s, cats in table.items() for x, c in enumerate(cats)})
    checks = 0
    _, d = distance_matrix(js)
    for a, j in enumerate(names):
        for b, k in enumerate(names):
            want = _oracle_pair(table[j], table[k])
            assert abs(pairwise_distance(j, k, js) - want) <= tol
            assert abs(d[a, b] - want) <= tol
            checks += 2
    # controls are the first m subjects; every subject is scored against them
    for m in range(1, len(names) + 1):
        controls = names[:m]
        for k in names:
            if k in controls and m == 1:
                with pytest.raises(DataError):
                    mean_distance_to_control(k, controls, js)
            else:
                want = _oracle_mean(k, controls, table)
                got = mean_distance_to_control(k, controls, js)
                assert abs(got - want) <= tol, (table, controls, k, got, want)
            checks += 1
    return checks


def test_criterion_1_oracle_equivalence():
    with criterion(1, "distance formulas equal naive evaluation on every judgment set (<=4 subjects, <=5 items, <=3 categories), 1e-12", 10):
        checks = 0
        # (a) literally every set where subjects x items <= 7
        for s in range(1, 5):
            for n in range(1, 6):
                if s * n > 7:
                    continue
                for flat in itertools.product(LABELS, repeat=s * n):
                    table = {f"s{i}": flat[i * n : (i + 1) * n] for i in range(s)}
                    checks += _check_set(table)
        # (b) all shapes up to 4 x 5, one representative per equivalence class:
        # distances depend only on which subjects agree on each item, and not
        # on item order, so a multiset of agreement patterns covers every set
        for s in range(1, 5):
            patterns = _item_patterns(s)
            for n in range(1, 6):
                for cols in itertools.combinations_with_replacement(patterns, n):
                    table = {f"s{i}": tuple(c[i] for c in cols) for i in range(s)}
                    checks += _check_set(table)
        assert checks > 300_000


# -- 2. random baseline expectation and the three-condition ordering


def test_criterion_2_random_baseline():
    with criterion(2, "1000 uniform 7-category runs average 1.714 +/- 0.05; control < gisted < random", 5):
        js = read_judgments(FIXTURES / "judgments.csv")
        aug = random_baseline(js, categories=7, runs=1000, seed=20)
        rand = aug.in_condition(RANDOM)
        assert len(rand) == 1000
        expected = 2 * (1 - 1 / 7)
        for fixed in ["E1", "E4", "G3"]:
            mean = statistics.mean(pairwise_distance(fixed, r, aug) for r in rand)
            assert abs(mean - expected) <= 0.05, (fixed, mean)
        for seed in range(3):
            rep = report(three_conditions(seed=seed), runs=8, seed=seed, resamples=200)
            means = {c: statistics.mean(r.mean for r in rows) for c, rows in rep.by_condition().items()}
            assert means["control"] < means["experimental"] < means["random"], means


# -- 3. range and symmetry over 10k random sets


def test_criterion_3_range_and_symmetry():
    with criterion(3, "distances in [0, 2] and d_jk symmetric over 10,000 random judgment sets"):
        rng = random.Random(3)
        cats = [1, 2, 3, 4, 5, 6, NONE]
        for _ in range(10_000):
            s, n, c = rng.randint(2, 6), rng.randint(1, 10), rng.randint(1, 7)
            items = [f"i{x}" for x in range(n)]
            names = [f"s{i}" for i in range(s)]
            m = rng.randint(2, s)
            js = JudgmentSet(items, [(x, CONTROL if i < m else "experimental") for i, x in enumerate(names)],
                             {(x, it): rng.choice(cats[:c]) for x in names for it in items})
            _, d = distance_matrix(js)
            assert ((d >= 0) & (d <= 2)).all() and (d == d.T).all()
            j, k = rng.sample(names, 2)
            assert pairwise_distance(j, k, js) == pairwise_distance(k, j, js)
            assert 0 <= mean_distance_to_control(k, names[:m], js) <= 2


# -- 4. gloss policy


def test_criterion_4_gloss_policy():
    with criterion(4, "single, multi (n=3), cognate and ellipsis branches incl. (doctor's office, clinic, dispensary)"):
        policy = GlossPolicy()
        assert policy.max_glosses == 3
        single = gloss_token(LexEntry("dar", ("give",)), Token("da"), policy)
        assert (single.outcome, single.rendered) == (Outcome.SINGLE, "give")
        multi = gloss_token(LexEntry("consultorio", ("doctor's office", "clinic", "dispensary")),
                            Token("consultorio"), policy)
        assert (multi.outcome, multi.rendered) == (Outcome.MULTI, "(doctor's office, clinic, dispensary)")
        long = gloss_token(LexEntry("x", ("a", "b", "c", "d", "e")), Token("x"), policy)
        assert long.rendered == "(a, b, c)"
        cognate = gloss_token(None, Token("bonjour"), policy)
        assert (cognate.outcome, cognate.rendered) == (Outcome.COGNATE, "bonjour")
        elided = gloss_token(None, Token("診療所"), policy)
        assert (elided.outcome, elided.rendered) == (Outcome.ELIDED, "…")
        assert render_segment([elided, elided, gloss_token(LexEntry("c", ("clinic",)), Token("c"), policy)]) == "… clinic"
        # the same branches through the whole pipeline
        out = (TOY / "toy.golden.html").read_text(encoding="utf-8")
        for fragment in (">(doctor's office, clinic, dispensary)<", ">give<", ">zapatos<", ">…<"):
            assert fragment in out


# -- 5. segmenter round trip


class _Text(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.skip = 0
        self.parts = []

    def handle_starttag(self, tag, attrs):
        self.skip += tag in ("script", "style")

    def handle_endtag(self, tag):
        self.skip -= tag in ("script", "style") and self.skip > 0

    def handle_data(self, data):
        if not self.skip:
            self.parts.append(data)


def visible_text(page):
    p = _Text()
    p.feed(page)
    p.close()
    return " ".join("".join(p.parts).split())


def test_criterion_5_segmenter_round_trip():
    with criterion(5, "identity reassembly of 50 generated pages re-segments identically, no text lost"):
        pages = htmlgen.corpus(50, seed=0)
        assert len(set(pages)) == 50
        for page in pages:
            sk, segs = segment(page, "http://gen.example/")
            out = reassemble(sk, identity(segs))
            again = segment(out, "http://gen.example/")[1]
            assert [(s.text, s.context) for s in again] == [(s.text, s.context) for s in segs]
            assert visible_text(out) == visible_text(page)
            # every visible character lands in some segment, in order
            assert "".join("".join(s.text for s in segs).split()) == "".join(visible_text(page).split())


# -- 6. language identification


def test_criterion_6_language_id():
    with criterion(6, "trained en/es/ja profiles: >=95% of held-out 20-char strings, 100% on disjoint scripts", 10):
        profiles = {}
        for lang in ("en", "es", "ja"):
            text = corpus(lang, "train")
            assert len(text) >= 10_000
            profiles[lang] = train_profile(text, lang, 3)
        rng = random.Random(6)
        for lang in ("en", "es", "ja"):
            held = " ".join(corpus(lang, "heldout").split())
            samples = [held[i : i + 20] for i in (rng.randrange(len(held) - 20) for _ in range(300))]
            hits = sum(identify(t, list(profiles.values())).lang == lang for t in samples)
            assert hits / len(samples) >= 0.95, (lang, hits)
            for other in ("en", "es", "ja"):
                if {lang, other} & {"ja"} and lang != other:
                    pair = [profiles[lang], profiles[other]]
                    assert all(identify(t, pair).lang == lang for t in samples), (lang, other)


# -- 7. charsets

CODECS = {UTF8: "utf-8", EUC_JP: "euc_jp", SHIFT_JIS: "shift_jis", LATIN1: "latin-1", ASCII: "ascii"}

# From the published JIS X 0208 mapping tables: (character, EUC-JP bytes, Shift-JIS bytes)
SPOT = [
    ("亜", b"\xb0\xa1", b"\x88\x9f"),
    ("あ", b"\xa4\xa2", b"\x82\xa0"),
    ("ア", b"\xa5\xa2", b"\x83\x41"),
    ("日", b"\xc6\xfc", b"\x93\xfa"),
    ("本", b"\xcb\xdc", b"\x96\x7b"),
    ("漢", b"\xb4\xc1", b"\x8a\xbf"),
    ("。", b"\xa1\xa3", b"\x81\x42"),
    ("ｱ", b"\x8e\xb1", b"\xb1"),
]


def _jis_to_sjis(j1, j2):
    """JIS X 0208 row/cell bytes (0x21-0x7E each) to Shift-JIS, by the standard arithmetic."""
    s1 = (j1 + 1) // 2 + (0x70 if j1 <= 0x5E else 0xB0)
    if j1 % 2:
        s2 = j2 + (0x1F if j2 <= 0x5F else 0x20)
    else:
        s2 = j2 + 0x7E
    return bytes([s1, s2])


def _repertoire(codec):
    chars = []
    for cp in list(range(0x20, 0x3000)) + list(range(0x3000, 0x3100)) + list(range(0x4E00, 0x5200)) + list(range(0xFF61, 0xFFA0)):
        ch = chr(cp)
        if 0xD800 <= cp <= 0xDFFF:
            continue
        try:
            # a few characters are folded by the encoder (U+203E -> "~" in EUC-JP)
            # and so cannot round trip; keep the decoder's image only
            if ch.encode(codec).decode(codec) != ch:
                continue
        except UnicodeEncodeError:
            continue
        chars.append(ch)
    return chars


REPERTOIRES = {label: _repertoire(codec) for label, codec in CODECS.items()}


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(sorted(CODECS)), st.data())
def _round_trip(label, data):
    s = data.draw(st.text(alphabet=REPERTOIRES[label], min_size=1, max_size=40))
    raw = s.encode(CODECS[label])
    r = to_internal(raw, label)
    assert (r.text, r.lossy) == (s, False)
    assert detect_charset(raw, CharsetEvidence(document_hint=label)) == label


def test_criterion_7_charsets():
    with criterion(7, "round trip in UTF-8, EUC-JP, Shift-JIS, ISO-8859-1, US-ASCII; JIS spot values match"):
        _round_trip()
        for ch, euc, sjis in SPOT:
            assert to_internal(euc, EUC_JP).text == ch and ch.encode("euc_jp") == euc
            assert to_internal(sjis, SHIFT_JIS).text == ch and ch.encode("shift_jis") == sjis
        # every two-byte JIS X 0208 character: EUC-JP and Shift-JIS agree via the arithmetic mapping
        count = 0
        for j1 in range(0x21, 0x7F):
            for j2 in range(0x21, 0x7F):
                euc = bytes([j1 | 0x80, j2 | 0x80])
                try:
                    ch = euc.decode("euc_jp")
                except UnicodeDecodeError:
                    continue
                assert to_internal(_jis_to_sjis(j1, j2), SHIFT_JIS).text == ch, hex(j1 * 256 + j2)
                count += 1
        assert count > 6800


# -- 8. link rewriting closure

PROXY = "http://gist.test:8080"


def _fixture_pages():
    yield "toy.html", (TOY / "toy.html").read_bytes(), "http://toy.example/dir/"
    yield "links.html", (FIXTURES / "pages" / "links.html").read_bytes(), "http://ejemplo.es/dir/sub/"
    for i, page in enumerate(htmlgen.corpus(10, seed=8)):
        yield f"generated-{i}", page.encode("utf-8"), f"http://gen.example/{i}/"


def test_criterion_8_link_rewriting(toy_services):
    with criterion(8, "every http(s) anchor goes to /gist with an encoded absolute URL; fragments kept; no double wrap"):
        total = 0
        for name, data, base in _fixture_pages():
            out, stats = gist_bytes(data, base, "en", toy_services)
            assert link_problems(out, PROXY) == [], name
            before = links(data.decode(stats["charset"].replace("-", "_").lower() if stats["charset"] != UTF8 else "utf-8"))[0]
            after = links(out)[0]
            assert len(before) == len(after), name
            for b, a in zip(before, after):
                if b.startswith("#"):
                    assert a == b, name
            total += sum(a.startswith(PROXY + "/gist?url=") for a in after)
        assert total >= 15

        # gisting a page reached through the proxy keeps links single-wrapped
        page = (FIXTURES / "pages" / "links.html").read_bytes()

        def fetcher(url, timeout, max_bytes):
            assert url == "http://ejemplo.es/dir/sub/index.html"
            return page, url, "text/html; charset=iso-8859-1"

        wrapped = proxied_url("http://ejemplo.es/dir/sub/index.html", PROXY, "en")
        for target in (wrapped, proxied_url(wrapped, PROXY, "en")):
            r = handle_gist(GistRequest(target), toy_services, fetcher=fetcher)
            assert r.status == 200 and link_problems(r.html, PROXY) == []
        assert quote("http://ya.example/visto.html", safe="") in r.html


# -- 9. end-to-end golden


def test_criterion_9_golden(capfdbinary):
    with criterion(9, "gist toy.html --to en --config toy.conf matches the frozen golden bytes", 1):
        status = main(["gist", str(TOY / "toy.html"), "--to", "en", "--config", str(TOY / "toy.conf")])
        out = capfdbinary.readouterr().out
        assert status == 0
        assert out == (TOY / "toy.golden.html").read_bytes()

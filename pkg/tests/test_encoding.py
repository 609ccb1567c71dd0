import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gistproxy.encoding import (
    ASCII,
    EUC_JP,
    LATIN1,
    SHIFT_JIS,
    UTF8,
    CharsetEvidence,
    UnsupportedCharset,
    canonical_label,
    decode_document,
    detect_charset,
    document_charset,
    sniff,
    to_internal,
)

JAPANESE = "大阪の医療機器製造会社です。日本語のページ"


def _euc_not_sjis():
    """A Japanese string whose EUC-JP bytes fail to decode as Shift-JIS.

    Found by brute force: try characters from JIS rows 16-84 until the
    EUC-JP encoding is rejected by a strict Shift-JIS decoder.
    """
    for row in range(0xB0, 0xF5):
        for cell in range(0xA1, 0xFF):
            try:
                ch = bytes([row, cell]).decode("euc_jp")
            except UnicodeDecodeError:
                continue
            data = (JAPANESE + ch).encode("euc_jp")
            try:
                data.decode("shift_jis")
            except UnicodeDecodeError:
                return JAPANESE + ch, data
    raise AssertionError("no fixture found")


def test_ascii_is_us_ascii():
    assert detect_charset(b"hello world", CharsetEvidence()) == ASCII


def test_euc_jp_sniffed_over_shift_jis():
    text, data = _euc_not_sjis()
    with pytest.raises(UnicodeDecodeError):
        data.decode("shift_jis")
    assert detect_charset(data, CharsetEvidence()) == EUC_JP
    assert to_internal(data, EUC_JP).text == text


def test_plain_euc_jp_text_sniffs_as_euc_jp():
    # kana-only text decodes under both, but reads as double-byte runs only in EUC-JP
    data = "ひらがなのぺーじです".encode("euc_jp")
    data.decode("shift_jis")
    assert sniff(data)[0] == EUC_JP


def test_shift_jis_and_utf8_sniffing():
    assert sniff(JAPANESE.encode("shift_jis"))[0] == SHIFT_JIS
    assert sniff(JAPANESE.encode("utf-8"))[0] == UTF8
    assert sniff("café crème".encode("latin-1"))[0] == LATIN1


def test_document_hint_beats_sniffer():
    data = JAPANESE.encode("euc_jp")
    ev = CharsetEvidence(document_hint="Shift_JIS", sniffed=EUC_JP, confidence=0.9)
    assert detect_charset(data, ev) == SHIFT_JIS


def test_precedence_order():
    data = b"\xe9t\xe9"
    assert detect_charset(data, CharsetEvidence(transport_hint="utf-8", document_hint="latin-1")) == LATIN1
    assert detect_charset(data, CharsetEvidence(transport_hint="utf-8")) == UTF8
    assert detect_charset(data, CharsetEvidence(transport_hint="koi8-r")) == LATIN1  # unsupported hint skipped


def test_confidence_bounds():
    with pytest.raises(ValueError):
        CharsetEvidence(sniffed=UTF8, confidence=1.5)


def test_empty_input_refused():
    with pytest.raises(ValueError):
        detect_charset(b"")


def test_labels_and_aliases():
    assert canonical_label("SJIS") == SHIFT_JIS
    assert canonical_label("latin-1") == LATIN1
    assert canonical_label("UTF-8") == UTF8
    assert canonical_label("Us-Ascii") == ASCII
    assert canonical_label("koi8-r") is None


def test_to_internal_identity():
    r = to_internal(b"hello", "us-ascii")
    assert (r.text, r.lossy, r.source_charset) == ("hello", False, ASCII)


def test_euc_jp_first_kanji_of_row_16():
    # JIS X 0208 row 16 cell 1 is U+4E9C in the published mapping tables
    assert to_internal(b"\xb0\xa1", EUC_JP).text == "亜"
    assert "亜".encode("euc_jp") == b"\xb0\xa1"


def test_undecodable_byte_is_replaced():
    r = to_internal(b"\xff", UTF8)
    assert r.text == "�" and r.lossy


def test_unsupported_charset():
    with pytest.raises(UnsupportedCharset):
        to_internal(b"x", "koi8-r")


def test_meta_declaration():
    assert document_charset(b'<html><head><meta charset="euc-jp">') == "euc-jp"
    assert document_charset(b'<meta http-equiv="Content-Type" content="text/html; charset=Shift_JIS">') == "Shift_JIS"
    assert document_charset(b"<p>no meta</p>") is None


def test_misdeclared_page_still_decodes():
    data = '<meta charset="euc-jp"><p>大阪</p>'.encode("shift_jis")
    r = decode_document(data)
    assert r.source_charset == EUC_JP
    assert "<p>" in r.text


@given(st.binary(min_size=1, max_size=64))
def test_sniffer_picks_a_valid_label(data):
    label, conf = sniff(data)
    assert 0 <= conf <= 1
    codec = {UTF8: "utf-8", EUC_JP: "euc_jp", SHIFT_JIS: "shift_jis", LATIN1: "latin-1", ASCII: "ascii"}[label]
    data.decode(codec)  # must not raise
    assert detect_charset(data) == detect_charset(data)


@given(st.binary(min_size=1, max_size=64), st.sampled_from([UTF8, EUC_JP, SHIFT_JIS, LATIN1, ASCII]))
def test_lossless_decode_round_trips(data, charset):
    r = to_internal(data, charset)
    if not r.lossy:
        codec = {UTF8: "utf-8", EUC_JP: "euc_jp", SHIFT_JIS: "shift_jis", LATIN1: "latin-1", ASCII: "ascii"}[charset]
        assert r.text.encode(codec) == data
    assert not any(0xD800 <= ord(c) <= 0xDFFF for c in r.text)


@settings(max_examples=200)
@given(st.text(min_size=1, max_size=40))
def test_utf8_round_trip(s):
    assert to_internal(s.encode("utf-8"), UTF8).text == s

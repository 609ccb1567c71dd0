import http.server
import threading
from functools import lru_cache
from pathlib import Path

import pytest

from gistproxy.config import load_config
from gistproxy.langid import train_profile
from gistproxy.proxy import Services

FIXTURES = Path(__file__).parent / "fixtures"
CORPORA = FIXTURES / "corpora"
TOY = FIXTURES / "toy"


@lru_cache(maxsize=None)
def corpus(lang, part="train"):
    return (CORPORA / f"{lang}.{part}.txt").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def trained(lang, n=3):
    return train_profile(corpus(lang), lang, n)


@pytest.fixture(scope="session")
def profiles():
    return [trained("en"), trained("es"), trained("ja")]


@pytest.fixture(scope="session")
def toy_services():
    return Services.from_config(load_config(TOY / "toy.conf"))


@pytest.fixture(scope="session")
def demo_services():
    return Services.from_config(load_config())


class _Pages(http.server.BaseHTTPRequestHandler):
    """Serves a dict of path -> (status, content type, body bytes)."""

    pages = {}

    def do_GET(self):
        if self.path.startswith("/redirect"):
            self.send_response(302)
            self.send_header("Location", "/es.html")
            self.end_headers()
            return
        status, ctype, body = self.pages.get(self.path, (404, "text/plain", b"not found"))
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="session")
def upstream():
    """A local web server standing in for the sites being gisted."""
    toy = (TOY / "toy.html").read_bytes().replace(b'<base href="http://toy.example/dir/">', b"")
    euc = '<html><head><meta charset="euc-jp"></head><body><p>大阪の病院</p></body></html>'
    handler = type("Pages", (_Pages,), {"pages": {
        "/es.html": (200, "text/html; charset=utf-8", toy),
        "/en.html": (200, "text/html", b"<html><body><p>Plain English page.</p>"
                     b'<a href="other.html">next</a></body></html>'),
        "/euc.html": (200, "text/html", euc.encode("euc_jp")),
        "/sjis-mislabeled.html": (200, "text/html; charset=euc-jp", euc.replace("euc-jp", "shift_jis").encode("shift_jis")),
        "/pic.png": (200, "image/png", b"\x89PNG\r\n"),
        "/gone.html": (404, "text/html", b"gone"),
    }})
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


# -- acceptance summary: one line per criterion at the end of the run

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])

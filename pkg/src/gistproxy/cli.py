"""Command line: gist, serve, train-langid, eval."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config

log = logging.getLogger("gistproxy")


def build_parser():
    parser = argparse.ArgumentParser(prog="gistproxy", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics on stderr")
    sub = parser.add_subparsers(dest="verb", metavar="{gist,serve,train-langid,eval}")
    sub.required = True

    p = sub.add_parser("gist", help="gist one URL or local HTML file to stdout")
    p.add_argument("target", help="http(s) URL or path to an HTML file")
    p.add_argument("--to", default=None, help="user language (default from config)")
    p.add_argument("--config", help="config file (default: bundled demo config)")
    p.add_argument("--base-url", help="base URL for resolving links in a local file")
    p.add_argument("--stats", action="store_true", help="print page statistics to stderr")

    p = sub.add_parser("serve", help="run the gisting proxy")
    p.add_argument("--config", help="config file (default: bundled demo config)")
    p.add_argument("--host")
    p.add_argument("--port", type=int)

    p = sub.add_parser("train-langid", help="train a language profile from a text corpus")
    p.add_argument("corpus", help="UTF-8 text file")
    p.add_argument("--lang", required=True)
    p.add_argument("--n", type=int, default=3, help="character n-gram order (default 3)")
    p.add_argument("-o", "--output", required=True, help="profile file to write")

    p = sub.add_parser("eval", help="categorization-distance report from judgments CSV")
    p.add_argument("judgments", help="CSV with header subject,condition,item,category")
    p.add_argument("--runs", type=int, default=0, help="random-baseline subjects to add")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ci", type=float, default=95.0, metavar="LEVEL", help="confidence level in percent")
    p.add_argument("--resamples", type=int, default=2000)
    p.add_argument("--categories", type=int, default=7, help="category count including 'none' (default 7)")
    p.add_argument("--forced-choice", action="store_true", help="random subjects never pick 'none'")
    p.add_argument("--kappa", action="store_true", help="add mean Cohen's kappa to control")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.add_argument("--csv", metavar="PATH", help="also write the report as CSV")
    p.add_argument("--figure", metavar="PATH", help="also render the report as a figure (png, pdf, svg)")
    return parser


def _gist(args):
    from .proxy import GistRequest, Services, gist_bytes, handle_gist

    cfg = load_config(args.config)
    services = Services.from_config(cfg)
    lang = args.to or cfg.default_lang
    target = args.target
    path = Path(target)
    if path.is_file():
        base = args.base_url or path.resolve().as_uri()
        page, stats = gist_bytes(path.read_bytes(), base, lang, services)
    elif target.startswith(("http://", "https://")):
        result = handle_gist(GistRequest(target, lang), services)
        if result.stats is None:
            print(f"gistproxy: {result.error}", file=sys.stderr)
            return 1
        page, stats = result.html, result.stats
    else:
        print(f"gistproxy: {target}: no such file and not an http(s) URL", file=sys.stderr)
        return 1
    sys.stdout.buffer.write(page.encode("utf-8"))
    sys.stdout.flush()
    if args.stats:
        print(stats, file=sys.stderr)
    return 0


def _serve(args):
    from .proxy import serve

    cfg = load_config(args.config)
    if args.host:
        cfg.host = args.host
    if args.port is not None:
        cfg.port = args.port
    try:
        serve(cfg)
    except OSError as exc:
        print(f"gistproxy: cannot start server on {cfg.host}:{cfg.port}: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        pass
    return 0


def _train(args):
    from .langid import train_profile

    corpus = Path(args.corpus).read_text(encoding="utf-8")
    profile = train_profile(corpus, args.lang, args.n)
    profile.save(args.output)
    log.info("wrote %s: %d n-grams, %d symbols", args.output, len(profile.counts), len(profile.vocab))
    return 0


def _eval(args):
    from .evalkit import read_judgments, report

    js = read_judgments(args.judgments)
    rep = report(
        js,
        level=args.ci,
        resamples=args.resamples,
        seed=args.seed,
        runs=args.runs,
        categories=args.categories,
        forced_choice=args.forced_choice,
        with_kappa=args.kappa,
    )
    sys.stdout.write(rep.to_csv() if args.format == "csv" else rep.format_table())
    if args.csv:
        Path(args.csv).write_text(rep.to_csv(), encoding="utf-8")
    if args.figure:
        from .plotting import plot_report

        plot_report(rep, args.figure)
    return 0


COMMANDS = {"gist": _gist, "serve": _serve, "train-langid": _train, "eval": _eval}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.verb](args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"gistproxy: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # diagnostic rather than a traceback
        log.debug("unexpected failure", exc_info=True)
        print(f"gistproxy: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Line-oriented ``key = value`` configuration shared by the proxy and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path


class ConfigError(ValueError):
    pass


def _csv(value):
    return tuple(v.strip() for v in value.split(",") if v.strip())


_SCALARS = {
    "host": str,
    "port": int,
    "proxy_base": str,
    "timeout_s": float,
    "max_body_bytes": int,
    "max_glosses": int,
    "user_scripts": _csv,
    "ellipsis_marker": str,
    "confidence_threshold": float,
    "max_word_len": int,
    "unspaced_langs": _csv,
    "default_lang": str,
}


@dataclass
class Config:
    host: str = "127.0.0.1"
    port: int = 8080
    proxy_base: str = ""
    timeout_s: float = 15.0
    max_body_bytes: int = 5 * 1024 * 1024
    max_glosses: int = 3
    user_scripts: tuple = ("Latin",)
    ellipsis_marker: str = "…"
    confidence_threshold: float = 2.0
    max_word_len: int = 8
    unspaced_langs: tuple = ("ja", "zh")
    default_lang: str = "en"
    profiles: dict = field(default_factory=dict)  # lang -> path
    lexicons: dict = field(default_factory=dict)  # (src, tgt) -> path
    rules: dict = field(default_factory=dict)  # lang -> path
    priors: dict = field(default_factory=dict)  # lang -> log prior (default 0, i.e. uniform)
    source: Path | None = None

    @property
    def base(self):
        return self.proxy_base.rstrip("/") or f"http://{self.host}:{self.port}"


def parse_config(text: str, root: Path | None = None, source=None) -> Config:
    """Parse config text; relative paths resolve against ``root``."""
    cfg = Config(source=source)
    root = Path(root) if root else Path.cwd()

    def path(value):
        p = Path(value).expanduser()
        return p if p.is_absolute() else root / p

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        prefix, dot, name = key.partition(".")
        try:
            if key in _SCALARS:
                setattr(cfg, key, _SCALARS[key](value))
            elif dot and prefix == "profile":
                cfg.profiles[name] = path(value)
            elif dot and prefix == "prior":
                cfg.priors[name] = float(value)
            elif dot and prefix == "rules":
                cfg.rules[name] = path(value)
            elif dot and prefix == "lexicon":
                src, dash, tgt = name.partition("-")
                if not dash or not src or not tgt:
                    raise ConfigError(f"line {lineno}: lexicon key must be lexicon.<src>-<tgt>")
                cfg.lexicons[(src, tgt)] = path(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    unknown = set(cfg.priors) - set(cfg.profiles)
    if unknown:
        raise ConfigError(f"prior given for language(s) without a profile: {', '.join(sorted(unknown))}")
    if cfg.max_glosses < 1:
        raise ConfigError("max_glosses must be at least 1")
    if not 0 < cfg.port < 65536 and cfg.port != 0:
        raise ConfigError(f"port {cfg.port} out of range")
    return cfg


def load_config(path=None) -> Config:
    """Read a config file, or the bundled demo config when ``path`` is None."""
    if path is None:
        path = Path(str(resources.files("gistproxy") / "data" / "default.conf"))
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent, path)

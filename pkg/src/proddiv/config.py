"""Run configuration: INI-style ``key = value`` files plus command-line overrides."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import __version__
from .pvdm import PvdmParams

MODELS = ("boolean", "tfidf", "pvdm", "sic")
_PATH_KEYS = ("manifest", "out_dir", "lexicon", "stopwords", "sic_tree")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    manifest: Path | None = None
    out_dir: Path = Path("proddiv_out")
    lexicon: Path | None = None
    stopwords: Path | None = None
    sic_tree: Path | None = None
    models: tuple[str, ...] = MODELS
    q: tuple[float, ...] = (0.0, 2.0, 5.0)
    seed: int = 0
    years: tuple[int, int] | None = None
    max_df: float = 0.20
    pca_threshold: float = 0.90
    permutations: int = 100_000
    confidence: float = 0.90
    pvdm: PvdmParams = field(default_factory=PvdmParams)

    def validate(self) -> "RunConfig":
        unknown = [m for m in self.models if m not in MODELS]
        if unknown:
            raise ConfigError(f"unknown model tag(s) {unknown}; choose from {list(MODELS)}")
        if not self.models:
            raise ConfigError("no models selected")
        if any(q < 0 for q in self.q):
            raise ConfigError(f"q values must be >= 0, got {list(self.q)}")
        if self.years is not None and self.years[0] > self.years[1]:
            raise ConfigError(f"empty year range {self.years[0]}:{self.years[1]}")
        if not 0 < self.max_df <= 1:
            raise ConfigError(f"max_df must lie in (0, 1], got {self.max_df}")
        if not 0 < self.pca_threshold <= 1:
            raise ConfigError(f"pca_threshold must lie in (0, 1], got {self.pca_threshold}")
        if not 0 < self.confidence < 1:
            raise ConfigError(f"confidence must lie in (0, 1), got {self.confidence}")
        if self.permutations < 1:
            raise ConfigError("permutations must be positive")
        return self

    def in_years(self, year: int) -> bool:
        return self.years is None or self.years[0] <= year <= self.years[1]

    def stage_seed(self, stage: str) -> int:
        """Seed for one stage, derived from the global seed and the stage name."""
        h = hashlib.sha256(f"{self.seed}:{stage}".encode()).digest()
        return int.from_bytes(h[:4], "little")

    def digest(self) -> str:
        """Hash of every setting plus the contents of the input list files.

        Output locations are excluded so a rerun elsewhere reproduces the same
        files byte for byte.
        """
        payload = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "out_dir":
                continue
            if f.name in _PATH_KEYS:
                value = _file_hash(value) if value is not None else None
            elif f.name == "pvdm":
                value = asdict(value)
            payload[f.name] = value
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def header(self) -> str:
        return f"proddiv {__version__} seed={self.seed} config={self.digest()[:16]}"


def _file_hash(path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return f"missing:{Path(path).name}"


def parse_years(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in str(text).split(":"))
    except ValueError:
        raise ConfigError(f"years must look like A:B, got {text!r}") from None
    if a > b:
        raise ConfigError(f"empty year range {text!r}")
    return a, b


def _floats(text) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in str(text).replace(" ", "").split(",") if x)
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _names(text) -> tuple[str, ...]:
    return tuple(x.strip().lower() for x in str(text).split(",") if x.strip())


_PVDM_KEYS = {
    "pvdm_dim": ("dim", int),
    "pvdm_window": ("window", int),
    "pvdm_epochs": ("epochs", int),
    "pvdm_rate": ("rate", float),
    "pvdm_negative": ("negative", int),
}
_SCALARS = {
    "seed": int,
    "max_df": float,
    "pca_threshold": float,
    "permutations": int,
    "confidence": float,
}


def apply_settings(cfg: RunConfig, settings: dict, base: Path | None = None) -> RunConfig:
    """Return ``cfg`` updated from string settings; relative paths resolve against ``base``."""
    updates, pvdm = {}, {}
    for key, raw in settings.items():
        if raw is None:
            continue
        key = key.strip().lower().replace("-", "_")
        try:
            if key in _PATH_KEYS:
                p = Path(str(raw)).expanduser()
                updates[key] = p if p.is_absolute() or base is None else base / p
            elif key == "models":
                updates["models"] = _names(raw)
            elif key == "q":
                updates["q"] = _floats(raw)
            elif key == "years":
                updates["years"] = parse_years(raw)
            elif key in _SCALARS:
                updates[key] = _SCALARS[key](raw)
            elif key in _PVDM_KEYS:
                name, typ = _PVDM_KEYS[key]
                pvdm[name] = typ(raw)
            else:
                raise ConfigError(f"unknown configuration key {key!r}")
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from None
    cfg = replace(cfg, **updates)
    if pvdm:
        try:
            cfg = replace(cfg, pvdm=replace(cfg.pvdm, **pvdm))
        except ValueError as e:
            raise ConfigError(str(e)) from None
    return cfg


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        text = "[proddiv]\n" + text
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    settings = {}
    for section in parser.sections():
        settings.update(parser[section])
    return settings


def load_config(path=None, overrides=None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        cfg = apply_settings(cfg, read_config_file(path), Path(path).parent)
    if overrides:
        cfg = apply_settings(cfg, overrides, Path.cwd())
    return cfg.validate()

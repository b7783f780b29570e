"""Run configuration: defaults, ``key = value`` config files and tier maps."""

from __future__ import annotations

import configparser
import dataclasses
import fnmatch
import glob
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .conversation import DEFAULT_TEMPLATES

ENV_VAR = "TURNTAKE_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    inputs: list[str] = field(default_factory=list)
    out_dir: str = "turntake-out"
    layer: str = "both"
    ort_template: str = DEFAULT_TEMPLATES["ORT"]
    ipu_template: str = DEFAULT_TEMPLATES["IPU"]
    pcomp_template: str = DEFAULT_TEMPLATES["PCOMP"]
    tier_map: str = ""
    classifier: str = ""
    ipu_threshold_ms: float = 150.0
    tolerance_ms: float = 20.0
    lapse_s: float = 2.0
    orphan_breaths: str = "right"
    scheme: str = "turn-taking"
    keep_uncertain: bool = False
    mode: str = "all"
    formats: list[str] = field(default_factory=lambda: ["csv", "txt"])
    palette: str = ""
    from_s: float | None = None
    to_s: float | None = None
    width_px: int = 1000
    tick_s: float = 10.0
    form: str = "long"
    name: str = "corpus"

    @property
    def threshold(self) -> float:
        return self.ipu_threshold_ms / 1000.0

    @property
    def tolerance(self) -> float:
        return self.tolerance_ms / 1000.0

    @property
    def templates(self) -> dict[str, str]:
        return {"ORT": self.ort_template, "IPU": self.ipu_template, "PCOMP": self.pcomp_template}

    def layers(self) -> list[str]:
        return ["IPU", "PCOMP"] if self.layer == "both" else [self.layer]

    def header(self) -> dict[str, str]:
        """Every setting, defaults included, as printable strings."""
        return {f.name: _show(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def header_lines(self, prefix: str = "# ") -> str:
        return "".join(f"{prefix}{k} = {v}\n" for k, v in self.header().items())

    def validate(self) -> None:
        if self.ipu_threshold_ms <= 0:
            raise ConfigError("ipu_threshold_ms must be positive")
        if self.tolerance_ms < 0:
            raise ConfigError("tolerance_ms must not be negative")
        if self.lapse_s <= 0:
            raise ConfigError("lapse_s must be positive")
        if self.layer not in ("IPU", "PCOMP", "both"):
            raise ConfigError(f"layer must be IPU, PCOMP or both, got {self.layer!r}")
        if self.orphan_breaths not in ("right", "left", "keep"):
            raise ConfigError("orphan_breaths must be right, left or keep")
        if self.form not in ("long", "short"):
            raise ConfigError("form must be long or short")
        if self.from_s is not None and self.to_s is not None and self.to_s <= self.from_s:
            raise ConfigError("to_s must be greater than from_s")
        for fmt in self.formats:
            if fmt not in ("csv", "txt"):
                raise ConfigError(f"unknown format {fmt!r}")


def _show(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ", ".join(map(str, v))
    return str(v)


def _coerce(name: str, raw: str, ftype) -> Any:
    raw = raw.strip()
    t = str(ftype)
    try:
        if "list" in t:
            return [x.strip() for x in raw.split(",") if x.strip()]
        if "bool" in t:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if "None" in t and raw == "":
            return None
        if "int" in t:
            return int(raw)
        if "float" in t:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot interpret {raw!r}") from None
    return raw


def parse_config_lines(lines, source: str = "<config>") -> dict[str, Any]:
    """``key = value`` lines; ``#`` starts a comment line; dashes in keys
    are accepted for underscores."""
    fields = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    out: dict[str, Any] = {}
    for n, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"{source}:{n}: expected key = value")
        if key not in fields:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        out[key] = _coerce(key, value, fields[key])
    return out


def load_config_file(path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return parse_config_lines(fh, str(path))


def resolve(overrides: Mapping[str, Any], config_path: str | None = None,
            environ: Mapping[str, str] | None = None) -> RunConfig:
    """Defaults, then the config file (explicit path or ``TURNTAKE_CONFIG``),
    then ``overrides`` (CLI flags; ``None`` values mean not given)."""
    environ = os.environ if environ is None else environ
    values: dict[str, Any] = {}
    path = config_path or environ.get(ENV_VAR)
    if path:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update(load_config_file(path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def expand_inputs(patterns: list[str]) -> list[Path]:
    """Files named directly or matched by globs, sorted and de-duplicated.
    A literal path that does not exist is kept so the caller can report it."""
    seen: dict[str, Path] = {}
    for pat in patterns:
        if any(ch in pat for ch in "*?["):
            for p in sorted(glob.glob(pat, recursive=True)):
                seen.setdefault(os.path.normpath(p), Path(p))
        elif Path(pat).is_dir():
            for p in sorted(Path(pat).glob("*.TextGrid")):
                seen.setdefault(os.path.normpath(p), p)
        else:
            seen.setdefault(os.path.normpath(pat), Path(pat))
    return sorted(seen.values(), key=lambda p: (p.stem, str(p)))


class TierMap:
    """Per-conversation tier overrides in INI form::

        [001M002M]
        IPU-001M = IPU annotator 2

    Section names are globs over conversation names; later matching
    sections override earlier ones.
    """

    def __init__(self, sections: Mapping[str, Mapping[str, str]] | None = None):
        self.sections = {k: dict(v) for k, v in (sections or {}).items()}

    @classmethod
    def read(cls, path) -> "TierMap":
        cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
        cp.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls({s: dict(cp[s]) for s in cp.sections()})

    def for_conversation(self, name: str) -> dict[str, str]:
        out: dict[str, str] = {}
        for pattern, mapping in self.sections.items():
            if fnmatch.fnmatchcase(name, pattern):
                out.update(mapping)
        return out

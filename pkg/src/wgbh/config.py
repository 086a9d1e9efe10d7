"""Run configuration: TOML file sections mirrored by CLI flags (flags win)."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .problems import PROBLEMS
from .space import SUPPORTED_ORDERS

# TOML section -> keys it may contain
SECTIONS = {
    "problem": ("name",),
    "discretization": ("j", "levels", "n0", "jitter", "seed"),
    "solver": ("method",),
    "output": ("format", "out", "projection_errors"),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    name: str = "u1"
    j: int = 0
    levels: int = 5
    n0: int = 14
    jitter: float = 0.2
    seed: int = 7
    method: str = "direct"
    format: str = "csv"
    out: str | None = None
    projection_errors: bool = False

    def validate(self) -> "RunConfig":
        if self.name not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.name!r}")
        if self.j not in SUPPORTED_ORDERS:
            raise ConfigError(f"j must be one of {SUPPORTED_ORDERS}")
        if self.levels < 1 or self.n0 < 1:
            raise ConfigError("levels and n0 must be positive")
        if not 0.0 <= self.jitter <= 0.3:
            raise ConfigError("jitter must lie in [0, 0.3]")
        if self.method not in ("direct", "minres"):
            raise ConfigError(f"unknown solver method {self.method!r}")
        if self.format not in ("csv", "markdown"):
            raise ConfigError(f"unknown format {self.format!r}")
        return self


def parse_toml(text: str) -> dict:
    """Flatten a config document into RunConfig keyword arguments."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    flat = {}
    for section, body in doc.items():
        if section not in SECTIONS or not isinstance(body, dict):
            raise ConfigError(f"unknown section [{section}]")
        for key, value in body.items():
            if key not in SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            flat[key] = value
    types = {f.name: f.type for f in fields(RunConfig)}
    for key, value in flat.items():
        want = types[key]
        ok = {
            "int": isinstance(value, int) and not isinstance(value, bool),
            "float": isinstance(value, (int, float)) and not isinstance(value, bool),
            "bool": isinstance(value, bool),
        }.get(want, isinstance(value, str))
        if not ok:
            raise ConfigError(f"{key!r} has the wrong type ({type(value).__name__})")
    return flat


def load_config(text: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the TOML document, then non-None ``overrides``."""
    values = asdict(RunConfig())
    if text is not None:
        values.update(parse_toml(text))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    values["jitter"] = float(values["jitter"])
    return RunConfig(**values).validate()

"""Scenario configuration: strict TOML parsing and lossless round-trip."""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import tomli
import tomli_w

from .diagnostics import Thresholds
from .modelspace import ConfigError, EnergyGridSpec, ModelConfig

__all__ = [
    "ScenarioConfig",
    "OutputSpec",
    "TwoBodySpec",
    "CouplingScanSpec",
    "ConfigParseError",
    "load_config",
    "parse_config",
    "dump_config",
]


class ConfigParseError(ConfigError):
    """Config text could not be parsed or validated; ``line``/``column`` when known."""

    def __init__(self, msg: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{msg}{where}")


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    csv: bool = True
    json: bool = True
    plots: bool = True


@dataclass(frozen=True)
class CouplingScanSpec:
    scales: tuple = ()

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        if any(not (s > 0) for s in scales):
            raise ConfigError("coupling scales must be positive")
        object.__setattr__(self, "scales", scales)


@dataclass(frozen=True)
class TwoBodySpec:
    beta: float = 1.0
    lam: float = -2.0
    nodes: int = 200
    cutoff: float = 1e4
    k_on: float = 0.7
    convergence_base: int = 16
    tolerance: float = 1e-6
    convergence_ratio_max: float = 0.25
    binding_tolerance: float = 1e-8

    def __post_init__(self):
        if not (self.beta > 0):
            raise ConfigError("twobody.beta must be positive")
        if not isinstance(self.nodes, int) or self.nodes < 16:
            raise ConfigError("twobody.nodes must be an integer >= 16")
        if not isinstance(self.convergence_base, int) or self.convergence_base < 16:
            raise ConfigError("twobody.convergence_base must be an integer >= 16")
        if not (self.cutoff > self.beta):
            raise ConfigError("twobody.cutoff must exceed beta")
        if not (0 < self.k_on < self.cutoff):
            raise ConfigError("twobody.k_on must lie in (0, cutoff)")


@dataclass(frozen=True)
class ScenarioConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    grid: EnergyGridSpec = field(default_factory=EnergyGridSpec)
    coupling_scan: Optional[CouplingScanSpec] = None
    thresholds: Thresholds = field(default_factory=Thresholds)
    outputs: OutputSpec = field(default_factory=OutputSpec)
    twobody: Optional[TwoBodySpec] = None

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            sec = {}
            for sf in dataclasses.fields(val):
                v = getattr(val, sf.name)
                if v is None:
                    continue
                if isinstance(v, tuple):
                    v = [list(x) if isinstance(x, tuple) else x for x in v]
                sec[sf.name] = v
            out[f.name] = sec
        return out


_SECTIONS = {
    "model": ModelConfig,
    "grid": EnergyGridSpec,
    "coupling_scan": CouplingScanSpec,
    "thresholds": Thresholds,
    "outputs": OutputSpec,
    "twobody": TwoBodySpec,
}

_FLOAT_FIELDS = {
    (name, f.name)
    for name, cls in _SECTIONS.items()
    for f in dataclasses.fields(cls)
    if f.type in ("float", "Optional[float]")
}


def _locate(text: str, section: str, key: str | None) -> tuple[int | None, int | None]:
    """Best-effort line/column of ``[section]`` or ``key`` inside it."""
    lines = text.splitlines()
    in_sec = False
    for i, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_sec = stripped.strip("[] ") == section
            if in_sec and key is None:
                return i, line.index("[") + 1
            continue
        if in_sec and key is not None:
            m = re.match(rf"\s*{re.escape(key)}\s*=", line)
            if m:
                return i, line.index(key) + 1
    return None, None


def _build(name: str, cls, raw: Any, text: str):
    if not isinstance(raw, dict):
        line, col = _locate(text, name, None)
        raise ConfigParseError(f"[{name}] must be a table", line, col)
    known = {f.name for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in known:
            line, col = _locate(text, name, key)
            raise ConfigParseError(f"unknown key {name}.{key}", line, col)
    kwargs = {}
    for key, val in raw.items():
        if (name, key) in _FLOAT_FIELDS and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        if isinstance(val, list):
            val = tuple(tuple(x) if isinstance(x, list) else x for x in val)
        kwargs[key] = val
    try:
        return cls(**kwargs)
    except (ConfigError, TypeError, ValueError) as exc:
        line, col = _locate(text, name, None)
        raise ConfigParseError(f"invalid [{name}]: {exc}", line, col) from None


def parse_config(text: str) -> ScenarioConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigParseError(f"malformed config: {exc.msg}", exc.lineno, exc.colno) from None
    for key in raw:
        if key not in _SECTIONS:
            line, col = _locate(text, key, None)
            raise ConfigParseError(f"unknown section [{key}]", line, col)
    kwargs = {name: _build(name, _SECTIONS[name], raw[name], text) for name in raw}
    return ScenarioConfig(**kwargs)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def dump_config(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())

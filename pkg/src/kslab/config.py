"""Experiment configuration: the flat ``key = value`` format and presets.

Example document::

    grid.nx = 128
    grid.ny = 128
    grid.lx = 2.0
    grid.ly = 2.0
    t_end = 1.0
    source.kind = none
    init.kind = constant
    init.base = 1.0
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

from .elliptic import EllipticSolveParams
from .grid import GridSpec, ScalarField, integrate, read_snapshot
from .sources import SourceSpec
from .stepper import CflParams

log = logging.getLogger(__name__)

INIT_KINDS = ("gaussian_bump", "constant_plus_cosine", "snapshot")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitSpec:
    kind: str = "constant_plus_cosine"
    x0: Optional[float] = None  # bump center, defaults to the box center
    y0: Optional[float] = None
    sigma: float = 0.1
    mass: float = 1.0
    base: float = 1.0
    amp: float = 0.0
    kx: int = 0
    ky: int = 0
    path: str = ""

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ConfigError(f"init.kind must be one of {INIT_KINDS + ('constant',)}, got {self.kind!r}")
        if self.kind == "gaussian_bump":
            if not self.mass > 0:
                raise ConfigError(f"init.mass must be > 0 for gaussian_bump, got {self.mass}")
            if not self.sigma > 0:
                raise ConfigError(f"init.sigma must be > 0, got {self.sigma}")
        elif self.kind == "constant_plus_cosine":
            if self.base < abs(self.amp):
                raise ConfigError(f"init.base ({self.base}) must be >= |init.amp| ({self.amp}) to keep u0 >= 0")
            if self.base == 0 and self.amp == 0:
                raise ConfigError("initial density must not vanish identically")
        elif not self.path:
            raise ConfigError("init.path is required for snapshot initial data")

    def build(self, grid: GridSpec) -> tuple[ScalarField, float]:
        """Return (u0, t0)."""
        if self.kind == "gaussian_bump":
            x0 = grid.lx / 2 if self.x0 is None else self.x0
            y0 = grid.ly / 2 if self.y0 is None else self.y0
            x, y = grid.centers()
            bump = np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / self.sigma**2)
            shape = ScalarField(grid, bump)
            total = integrate(shape)
            if total <= 0:
                raise ConfigError("gaussian bump underflows on this grid")
            return ScalarField(grid, bump * (self.mass / total)), 0.0
        if self.kind == "constant_plus_cosine":
            x, y = grid.centers()
            wave = np.cos(self.kx * np.pi * x / grid.lx) * np.cos(self.ky * np.pi * y / grid.ly)
            return ScalarField(grid, self.base + self.amp * wave), 0.0
        u, t = read_snapshot(self.path)
        if u.spec != grid:
            raise ConfigError(f"snapshot grid {u.spec} does not match configured grid {grid}")
        if u.min() < 0 or u.max() == 0:
            raise ConfigError("snapshot density must be nonnegative and not identically zero")
        return u, t


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec
    t_end: float
    source: SourceSpec = SourceSpec()
    init: InitSpec = InitSpec()
    cfl: CflParams = CflParams()
    ell: EllipticSolveParams = EllipticSolveParams()
    record_every: int = 100
    snapshot_every: int = 0
    linf_blowup_factor: float = 1e6
    out_dir: str = "out"
    chemotaxis: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ConfigError(f"t_end must be > 0, got {self.t_end}")
        if self.record_every < 1:
            raise ConfigError(f"record_every must be >= 1, got {self.record_every}")
        if self.snapshot_every < 0:
            raise ConfigError(f"snapshot_every must be >= 0, got {self.snapshot_every}")
        if not self.linf_blowup_factor > 1:
            raise ConfigError(f"linf_blowup_factor must be > 1, got {self.linf_blowup_factor}")

    def initial_field(self) -> tuple[ScalarField, float]:
        u0, t0 = self.init.build(self.grid)
        if t0 >= self.t_end:
            raise ConfigError(f"snapshot time {t0} is not before t_end {self.t_end}")
        return u0, t0

    def with_grid(self, nx: int, ny: int) -> "SimConfig":
        return replace(self, grid=GridSpec(nx, ny, self.grid.lx, self.grid.ly))


# key -> (section, attribute, parser). Sections: None = top level.
def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _parse_opt_int(text: str) -> Optional[int]:
    return None if text.lower() in ("none", "auto") else _parse_int(text)


def _parse_opt_float(text: str) -> Optional[float]:
    return None if text.lower() in ("none", "auto") else float(text)


def _parse_str(text: str) -> str:
    return text


KEYS: dict[str, tuple[Optional[str], str, Any]] = {
    "grid.nx": ("grid", "nx", _parse_int),
    "grid.ny": ("grid", "ny", _parse_int),
    "grid.lx": ("grid", "lx", float),
    "grid.ly": ("grid", "ly", float),
    "t_end": (None, "t_end", float),
    "source.kind": ("source", "kind", _parse_str),
    "source.r": ("source", "r", float),
    "source.mu": ("source", "mu", float),
    "source.p": ("source", "p", float),
    "init.kind": ("init", "kind", _parse_str),
    "init.x0": ("init", "x0", _parse_opt_float),
    "init.y0": ("init", "y0", _parse_opt_float),
    "init.sigma": ("init", "sigma", float),
    "init.mass": ("init", "mass", float),
    "init.base": ("init", "base", float),
    "init.amp": ("init", "amp", float),
    "init.kx": ("init", "kx", _parse_int),
    "init.ky": ("init", "ky", _parse_int),
    "init.path": ("init", "path", _parse_str),
    "cfl.c_diff": ("cfl", "c_diff", float),
    "cfl.c_adv": ("cfl", "c_adv", float),
    "cfl.c_src": ("cfl", "c_src", float),
    "cfl.dt_min": ("cfl", "dt_min", float),
    "cfl.dt_max": ("cfl", "dt_max", float),
    "ell.tol": ("ell", "tol", float),
    "ell.max_iter": ("ell", "max_iter", _parse_opt_int),
    "record_every": (None, "record_every", _parse_int),
    "snapshot_every": (None, "snapshot_every", _parse_int),
    "linf_blowup_factor": (None, "linf_blowup_factor", float),
    "out_dir": (None, "out_dir", _parse_str),
    "chemotaxis": (None, "chemotaxis", _parse_bool),
}
REQUIRED = ("grid.nx", "grid.ny", "grid.lx", "grid.ly", "t_end", "source.kind", "init.kind")
IGNORED = ("v0",)


def parse_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def config_from_pairs(pairs: Mapping[str, str]) -> SimConfig:
    sections: dict[Optional[str], dict[str, Any]] = {None: {}, "grid": {}, "source": {}, "init": {}, "cfl": {}, "ell": {}}
    for key, text in pairs.items():
        if key in IGNORED:
            log.warning("config key %r is accepted but ignored: the signal is slaved to u by the elliptic equation", key)
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        section, attr, parse = KEYS[key]
        try:
            sections[section][attr] = parse(text)
        except ValueError as exc:
            raise ConfigError(f"malformed value for {key!r}: {text!r} ({exc})") from None
    missing = [k for k in REQUIRED if KEYS[k][1] not in sections[KEYS[k][0]]]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    init = sections["init"]
    if init.get("kind") == "constant":
        init["kind"] = "constant_plus_cosine"
        init.setdefault("amp", 0.0)
    try:
        return SimConfig(
            grid=GridSpec(**sections["grid"]),
            source=SourceSpec(**sections["source"]),
            init=InitSpec(**init),
            cfl=CflParams(**sections["cfl"]),
            ell=EllipticSolveParams(**sections["ell"]),
            **sections[None],
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str) -> SimConfig:
    return config_from_pairs(parse_pairs(text))


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text())


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_pairs(config: SimConfig) -> dict[str, str]:
    out = {}
    for key, (section, attr, _) in KEYS.items():
        owner = config if section is None else getattr(config, section)
        out[key] = _format(getattr(owner, attr))
    return out


def serialize_config(config: SimConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config_to_pairs(config).items())


def apply_overrides(config: SimConfig, overrides: Mapping[str, str]) -> SimConfig:
    pairs = config_to_pairs(config)
    for key, value in overrides.items():
        if key not in KEYS and key not in IGNORED:
            raise ConfigError(f"unknown config key {key!r}")
        pairs[key] = str(value)
    return config_from_pairs(pairs)


# Presets. Masses are chosen well away from the disk/radial thresholds
# (4*pi, 8*pi) because the domain is a square; the blow-up factor is set
# to what a 128^2 grid can actually resolve (see README).
_SUPERCRITICAL_MASS = 1.5 * 8 * math.pi
_PRESET_COMMON = {
    "grid.nx": "256",
    "grid.ny": "256",
    "grid.lx": "2.0",
    "grid.ly": "2.0",
    "init.kind": "gaussian_bump",
    "init.x0": "1.0",
    "init.y0": "1.0",
    "cfl.c_diff": "0.9",
    "linf_blowup_factor": "8.0",
    "record_every": "200",
    "snapshot_every": "5000",
}
_SUPERCRITICAL_DATA = {"init.mass": repr(_SUPERCRITICAL_MASS), "init.sigma": "0.1"}

PRESETS: dict[str, dict[str, str]] = {
    "subcritical": {
        **_PRESET_COMMON,
        "init.mass": repr(2 * math.pi),
        "init.sigma": "0.25",
        "source.kind": "none",
        "t_end": "5.0",
    },
    "supercritical_blowup": {
        **_PRESET_COMMON,
        **_SUPERCRITICAL_DATA,
        "source.kind": "none",
        "t_end": "1.0",
        "record_every": "20",
        "snapshot_every": "0",
    },
    "sublogistic_p1": {
        **_PRESET_COMMON,
        **_SUPERCRITICAL_DATA,
        "source.kind": "sublogistic",
        "source.r": "0.0",
        "source.mu": "0.2",
        "source.p": "1.0",
        "t_end": "5.0",
    },
    "logistic_control": {
        **_PRESET_COMMON,
        **_SUPERCRITICAL_DATA,
        "source.kind": "logistic",
        "source.r": "0.0",
        "source.mu": "1.0",
        "t_end": "5.0",
    },
}


def preset_config(name: str, overrides: Optional[Mapping[str, str]] = None) -> SimConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    pairs = dict(PRESETS[name])
    pairs["out_dir"] = f"out/{name}"
    for key, value in (overrides or {}).items():
        if key not in KEYS and key not in IGNORED:
            raise ConfigError(f"unknown config key {key!r}")
        pairs[key] = str(value)
    return config_from_pairs(pairs)

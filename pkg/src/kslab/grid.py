"""Cell-centered rectangular grid, scalar fields and discrete operators.

Homogeneous Neumann conditions are imposed with mirror ghost cells: the
ghost value equals the adjacent interior value, so boundary faces carry
no diffusive or chemotactic flux.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

from . import _kernels

SNAPSHOT_MAGIC = "KSFIELD"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError(f"cell counts must be integers, got nx={self.nx}, ny={self.ny}")
        if self.nx < 8 or self.ny < 8:
            raise ValueError(f"need nx, ny >= 8, got nx={self.nx}, ny={self.ny}")
        if not (math.isfinite(self.lx) and math.isfinite(self.ly)) or self.lx <= 0 or self.ly <= 0:
            raise ValueError(f"domain lengths must be finite and positive, got lx={self.lx}, ly={self.ly}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid of cell centers, each of shape (ny, nx)."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.nx * factor, self.ny * factor, self.lx, self.ly)


class ScalarField:
    """Immutable real field on a :class:`GridSpec`.

    ``values`` has shape ``(ny, nx)``; flattening it gives the row-major,
    y-outer ordering used by the snapshot format.
    """

    __slots__ = ("spec", "values", "_lo", "_hi")

    def __init__(self, spec: GridSpec, values):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim == 1 and arr.size == spec.nx * spec.ny:
            arr = arr.reshape(spec.shape)
        if arr.shape != spec.shape:
            raise ValueError(f"expected {spec.nx * spec.ny} values shaped {spec.shape}, got {arr.shape}")
        arr = np.ascontiguousarray(arr)
        lo, hi, finite = _kernels.min_max(arr)
        if not finite:
            raise ValueError("field contains NaN or Inf")
        arr.setflags(write=False)
        self._init(spec, arr, lo, hi)

    def _init(self, spec, arr, lo, hi):
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "_lo", float(lo))
        object.__setattr__(self, "_hi", float(hi))

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    @classmethod
    def _wrap(cls, spec: GridSpec, arr: np.ndarray) -> "ScalarField":
        # Trusted constructor for freshly allocated kernel output.
        lo, hi, finite = _kernels.min_max(arr)
        if not finite:
            raise FloatingPointError("operator produced NaN or Inf")
        arr.setflags(write=False)
        obj = cls.__new__(cls)
        obj._init(spec, arr, lo, hi)
        return obj

    @classmethod
    def constant(cls, spec: GridSpec, value: float) -> "ScalarField":
        return cls(spec, np.full(spec.shape, float(value)))

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ScalarField":
        x, y = spec.centers()
        return cls(spec, np.broadcast_to(fn(x, y), spec.shape))

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        return ScalarField(self.spec, fn(self.values))

    def _other(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.spec, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.spec, self.values - self._other(other))

    def __mul__(self, other):
        return ScalarField(self.spec, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.spec, -self.values)

    def min(self) -> float:
        return self._lo

    def max(self) -> float:
        return self._hi

    def __repr__(self):
        return f"ScalarField(nx={self.spec.nx}, ny={self.spec.ny}, min={self.min():.6g}, max={self.max():.6g})"


def _check_same_grid(a: ScalarField, b: ScalarField) -> None:
    if a.spec != b.spec:
        raise ValueError(f"grid mismatch: {a.spec} vs {b.spec}")


def laplacian(u: ScalarField) -> ScalarField:
    """Five-point Laplacian with mirror ghost cells."""
    out = np.empty(u.spec.shape)
    _kernels.laplacian(u.values, u.spec.hx, u.spec.hy, out)
    return ScalarField._wrap(u.spec, out)


def chemotactic_divergence(u: ScalarField, v: ScalarField) -> ScalarField:
    """Upwind, conservative approximation of div(u grad v).

    Each interior face carries ``(dv/h) * u_up`` where ``u_up`` is taken
    from the cell the flow leaves (cells drift up the gradient of ``v``).
    """
    _check_same_grid(u, v)
    out = np.empty(u.spec.shape)
    _kernels.chemotactic_divergence(u.values, v.values, u.spec.hx, u.spec.hy, out)
    return ScalarField._wrap(u.spec, out)


def sum_values(values: np.ndarray) -> float:
    """Deterministic compensated sum of an array of any shape."""
    return float(_kernels.neumaier_sum(np.ascontiguousarray(values, dtype=np.float64).ravel()))


def integrate(u: ScalarField) -> float:
    """Midpoint rule over the domain."""
    return sum_values(u.values) * u.spec.cell_area


def norm(u: ScalarField, q: Union[float, int] = 2) -> float:
    """L^q norm, ``q = math.inf`` for the max norm."""
    if q == math.inf:
        return float(np.max(np.abs(u.values)))
    if not q >= 1:
        raise ValueError(f"norm exponent must be >= 1 or inf, got {q}")
    a = np.abs(u.values)
    if q == 1:
        return sum_values(a) * u.spec.cell_area
    if q == 2:
        return math.sqrt(sum_values(a * a) * u.spec.cell_area)
    return (sum_values(a**q) * u.spec.cell_area) ** (1.0 / q)


def gradient(u: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Centered-difference gradient, one-sided at the boundary rows/columns."""
    gy, gx = np.gradient(u.values, u.spec.hy, u.spec.hx)
    return gx, gy


def gradient_magnitude(u: ScalarField) -> np.ndarray:
    gx, gy = gradient(u)
    return np.hypot(gx, gy)


def mirror_x(u: ScalarField) -> ScalarField:
    return ScalarField(u.spec, u.values[:, ::-1])


def mirror_y(u: ScalarField) -> ScalarField:
    return ScalarField(u.spec, u.values[::-1, :])


def max_asymmetry(u: ScalarField) -> float:
    """Largest deviation from the x- and y-reflection symmetry of the box."""
    a = u.values
    return float(max(np.max(np.abs(a - a[:, ::-1])), np.max(np.abs(a - a[::-1, :]))))


def restrict(u: ScalarField, factor: int = 2) -> ScalarField:
    """Average ``factor x factor`` blocks onto the coarser grid."""
    s = u.spec
    if s.nx % factor or s.ny % factor:
        raise ValueError(f"grid {s.nx}x{s.ny} not divisible by {factor}")
    coarse = GridSpec(s.nx // factor, s.ny // factor, s.lx, s.ly)
    a = u.values.reshape(coarse.ny, factor, coarse.nx, factor).mean(axis=(1, 3))
    return ScalarField(coarse, a)


def write_snapshot(path: Union[str, Path], u: ScalarField, t: float) -> None:
    s = u.spec
    header = f"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION} {s.nx} {s.ny} {s.lx!r} {s.ly!r} {float(t)!r}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(u.values.astype("<f8").tobytes(order="C"))


def read_snapshot(path: Union[str, Path]) -> tuple[ScalarField, float]:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii")
        payload = fh.read()
    parts = header.split()
    if len(parts) != 7 or parts[0] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a {SNAPSHOT_MAGIC} snapshot")
    if int(parts[1]) != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {parts[1]}")
    nx, ny = int(parts[2]), int(parts[3])
    spec = GridSpec(nx, ny, float(parts[4]), float(parts[5]))
    expected = nx * ny * struct.calcsize("<d")
    if len(payload) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    values = np.frombuffer(payload, dtype="<f8").reshape(ny, nx)
    return ScalarField(spec, values), float(parts[6])

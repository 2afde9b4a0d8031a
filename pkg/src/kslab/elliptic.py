"""Screened Poisson solve for the chemical signal: (-Lap_h + I) v = u.

The Neumann five-point Laplacian on a cell-centered grid is diagonalized
exactly by the type-II cosine transform, so one forward/backward transform
pair solves the system to round-off. The residual is still measured with
the stencil operator and corrected iteratively if needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.fft

from . import _kernels
from .grid import GridSpec, ScalarField


class EllipticSolveError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class EllipticSolveParams:
    tol: float = 1e-10
    max_iter: Optional[int] = None  # None -> 10 * (nx + ny)

    def __post_init__(self):
        if not (0 < self.tol <= 1e-4):
            raise ValueError(f"elliptic tol must lie in (0, 1e-4], got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"elliptic max_iter must be >= 1, got {self.max_iter}")

    def iteration_cap(self, spec: GridSpec) -> int:
        return self.max_iter if self.max_iter is not None else 10 * (spec.nx + spec.ny)


@lru_cache(maxsize=16)
def _inverse_symbol(spec: GridSpec) -> np.ndarray:
    kx = np.arange(spec.nx)
    ky = np.arange(spec.ny)
    lam_x = (2.0 - 2.0 * np.cos(np.pi * kx / spec.nx)) / spec.hx**2
    lam_y = (2.0 - 2.0 * np.cos(np.pi * ky / spec.ny)) / spec.hy**2
    inv = 1.0 / (1.0 + lam_y[:, None] + lam_x[None, :])
    inv.setflags(write=False)
    return inv


def _apply_inverse(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    coeffs = scipy.fft.dctn(values, type=2, norm="ortho")
    coeffs *= _inverse_symbol(spec)
    return scipy.fft.idctn(coeffs, type=2, norm="ortho", overwrite_x=True)


def _l2(values: np.ndarray, spec: GridSpec) -> float:
    return math.sqrt(float(_kernels.sum_squares(values)) * spec.cell_area)


def residual(u: ScalarField, v: ScalarField) -> np.ndarray:
    """Pointwise ``(-Lap_h + I) v - u``."""
    lap = np.empty(v.spec.shape)
    _kernels.laplacian(v.values, v.spec.hx, v.spec.hy, lap)
    return (v.values - lap) - u.values


def solve_signal(u: ScalarField, params: EllipticSolveParams = EllipticSolveParams()) -> ScalarField:
    """Return v with ||(-Lap_h + I) v - u||_2 <= tol * ||u||_2."""
    spec = u.spec
    target = params.tol * _l2(u.values, spec)
    v = _apply_inverse(u.values, spec)
    r = np.empty(spec.shape)
    res_norm = math.inf
    for _ in range(params.iteration_cap(spec)):
        res_norm = math.sqrt(_kernels.helmholtz_residual(u.values, v, spec.hx, spec.hy, r) * spec.cell_area)
        if res_norm <= target:
            return ScalarField._wrap(spec, v)
        v = v + _apply_inverse(r, spec)
    raise EllipticSolveError(
        f"signal solve did not reach tol {params.tol:g} within {params.iteration_cap(spec)} iterations "
        f"(residual {res_norm:.3e}, target {target:.3e})",
        res_norm,
    )

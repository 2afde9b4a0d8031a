"""Source terms f(u) and the scalar functions used by the a-priori estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import _kernels

ArrayLike = Union[float, np.ndarray]

SOURCE_KINDS = ("none", "logistic", "sublogistic")
_KIND_CODES = {
    "none": _kernels.SOURCE_NONE,
    "logistic": _kernels.SOURCE_LOGISTIC,
    "sublogistic": _kernels.SOURCE_SUBLOGISTIC,
}

OVERFLOW_LIMIT = 1e300


@dataclass(frozen=True)
class SourceSpec:
    """f(u) = r u - mu u^2 / ln^p(u + e); ``logistic`` drops the log factor.

    ``p = 0`` is accepted for ``sublogistic`` and behaves as logistic.
    """

    kind: str = "none"
    r: float = 0.0
    mu: float = 0.0
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"source kind must be one of {SOURCE_KINDS}, got {self.kind!r}")
        for name in ("r", "mu", "p"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"source {name} must be finite")
        if self.kind != "none" and not self.mu > 0:
            raise ValueError(f"source mu must be > 0 for kind {self.kind!r}, got mu={self.mu}")
        if self.kind == "sublogistic" and self.p < 0:
            raise ValueError(f"source p must be >= 0 for sublogistic, got p={self.p}")

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    def kernel_args(self) -> tuple[int, float, float, float]:
        return (self.code, float(self.r), float(self.mu), float(self.p))


def _log_shift(u):
    # ln(u + e) written to stay accurate for small u.
    return 1.0 + np.log1p(u / math.e)


def source_eval(spec: SourceSpec, u: ArrayLike) -> ArrayLike:
    """Evaluate f(u) for u >= 0 (scalar or array)."""
    arr = np.asarray(u, dtype=np.float64)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("source_eval requires u >= 0")
    if np.any(arr > OVERFLOW_LIMIT):
        raise OverflowError(f"source_eval argument exceeds {OVERFLOW_LIMIT:g}")
    if spec.kind == "none":
        out = np.zeros_like(arr)
    elif spec.kind == "logistic" or spec.p == 0:
        out = spec.r * arr - spec.mu * arr * arr
    else:
        out = spec.r * arr - spec.mu * arr * arr / _log_shift(arr) ** spec.p
    return float(out) if np.ndim(u) == 0 else out


def g_lnln(s: ArrayLike) -> ArrayLike:
    """G(s) = s ln(ln(s + e)); G(0) = 0 and G(s)/s grows without bound."""
    arr = np.asarray(s, dtype=np.float64)
    out = arr * np.log1p(np.log1p(arr / math.e))
    return float(out) if np.ndim(s) == 0 else out


def xi_truncate(s: ArrayLike, n_cut: float) -> ArrayLike:
    """Piecewise-linear cut-off: 0 up to N, 2(|s|-N) up to 2N, |s| beyond."""
    if not n_cut > 0:
        raise ValueError(f"n_cut must be > 0, got {n_cut}")
    a = np.abs(np.asarray(s, dtype=np.float64))
    out = np.where(a <= n_cut, 0.0, np.where(a <= 2.0 * n_cut, 2.0 * (a - n_cut), a))
    return float(out) if np.ndim(s) == 0 else out


def _phi_integrand(s):
    ln = _log_shift(s)
    return (s * s * (ln - 1.0) + 2.0 * math.e * ln) / ((s + math.e) ** 2 * ln * ln)


def _inv_log_integrand(s):
    return 1.0 / _log_shift(s)


def _log_simpson(integrand: Callable[[np.ndarray], np.ndarray], u: float, cells: int) -> float:
    # Composite Simpson in t with s = expm1(t), so ds = e^t dt.
    t_end = math.log1p(u)
    t = np.linspace(0.0, t_end, cells + 1)
    y = integrand(np.expm1(t)) * np.exp(t)
    h = t_end / cells
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def log_quadrature(
    integrand: Callable[[np.ndarray], np.ndarray],
    u: float,
    quad_cells: int = 64,
    rel_tol: float = 1e-10,
    max_cells: int = 1 << 22,
) -> float:
    """Integral of ``integrand`` over [0, u], doubling resolution until two
    successive Simpson estimates agree to ``rel_tol``."""
    if not u >= 0:
        raise ValueError(f"upper limit must be >= 0, got {u}")
    if quad_cells < 64:
        raise ValueError(f"quad_cells must be >= 64, got {quad_cells}")
    if u == 0:
        return 0.0
    cells = quad_cells + (quad_cells % 2)
    coarse = _log_simpson(integrand, u, cells)
    while cells < max_cells:
        cells *= 2
        fine = _log_simpson(integrand, u, cells)
        if abs(fine - coarse) <= rel_tol * abs(fine):
            return fine
        coarse = fine
    raise ArithmeticError(f"quadrature did not settle for u={u:g}")


def phi_eval(u: float, quad_cells: int = 64) -> float:
    """phi(u), the antiderivative that turns the cross-diffusion term into grad phi(u) . grad v."""
    return log_quadrature(_phi_integrand, u, quad_cells)


def inv_log_antiderivative(u: float, quad_cells: int = 64) -> float:
    """Integral of 1/ln(s + e) over [0, u]."""
    return log_quadrature(_inv_log_integrand, u, quad_cells)


def lhopital_ratio(u: float, quad_cells: int = 64) -> float:
    """inv_log_antiderivative(u) / (u ln(ln(u+e)) / ln(u+e)); tends to 0 as u grows."""
    if not u > 0:
        raise ValueError(f"lhopital_ratio requires u > 0, got {u}")
    ln = float(_log_shift(u))
    return inv_log_antiderivative(u, quad_cells) / (u * math.log(ln) / ln)

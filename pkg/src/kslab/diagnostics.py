"""Monitored functionals per recorded step and boundedness assessment."""
from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .grid import ScalarField, integrate, norm, sum_values
from .sources import g_lnln

CSV_COLUMNS = ("step", "t", "dt", "mass", "linf", "l2", "y_lnln", "dissip", "g_integral")


@dataclass(frozen=True)
class DiagnosticsRecord:
    step: int
    t: float
    dt: float
    mass: float
    linf: float
    l2: float
    y_lnln: float
    dissip: float
    g_integral: float


@dataclass(frozen=True)
class BoundednessReport:
    key: str
    sup: float
    t_sup: float
    tail_slope: float
    tail_change: float
    bounded: bool


def lnln_integrand(u: np.ndarray) -> np.ndarray:
    return u * np.log1p(np.log1p(u / math.e))


def dissipation_integrand(u: np.ndarray) -> np.ndarray:
    ln = 1.0 + np.log1p(u / math.e)
    return u * u * np.log(ln) / ln


def record(
    state,
    g: Callable[[np.ndarray], np.ndarray] = g_lnln,
    dt: float = 0.0,
) -> DiagnosticsRecord:
    """Snapshot of the monitored integrals for ``state`` (a SimState)."""
    u: ScalarField = state.u
    a = u.values
    area = u.spec.cell_area
    return DiagnosticsRecord(
        step=int(state.step_index),
        t=float(state.t),
        dt=float(dt),
        mass=integrate(u),
        linf=norm(u, math.inf),
        l2=norm(u, 2),
        y_lnln=sum_values(lnln_integrand(a)) * area,
        dissip=sum_values(dissipation_integrand(a)) * area,
        g_integral=sum_values(g(a)) * area,
    )


def column(history: Sequence[DiagnosticsRecord], key: str) -> np.ndarray:
    if key not in CSV_COLUMNS:
        raise KeyError(f"unknown diagnostics column {key!r}")
    return np.array([getattr(r, key) for r in history], dtype=np.float64)


def assess_boundedness(
    history: Sequence[DiagnosticsRecord],
    key: str = "y_lnln",
    tail_fraction: float = 0.5,
    noise_band: float = 0.01,
) -> BoundednessReport:
    """Running sup plus least-squares slope over the trailing records.

    The verdict is "bounded" when the fitted change across the tail window
    does not exceed ``noise_band * sup``.
    """
    if len(history) < 10:
        raise ValueError(f"need at least 10 records, got {len(history)}")
    if not 0 < tail_fraction < 1:
        raise ValueError(f"tail_fraction must lie in (0, 1), got {tail_fraction}")
    values = column(history, key)
    times = column(history, "t")
    i_sup = int(np.argmax(values))
    sup = float(values[i_sup])
    n_tail = max(2, int(math.ceil(tail_fraction * len(history))))
    t_tail, y_tail = times[-n_tail:], values[-n_tail:]
    span = float(t_tail[-1] - t_tail[0])
    if span > 0:
        slope = float(np.polyfit(t_tail - t_tail[0], y_tail, 1)[0])
    else:
        slope = 0.0
    change = slope * span
    bounded = change <= noise_band * abs(sup)
    return BoundednessReport(key, sup, float(times[i_sup]), slope, change, bool(bounded))


@dataclass(frozen=True)
class InequalityMonitor:
    """Descriptive check of the discrete y' + y against -(mu/2) dissip + c_fit."""

    c_fit: float
    residuals: np.ndarray
    violations: int


def differential_inequality_monitor(
    history: Sequence[DiagnosticsRecord], mu: float, fit_fraction: float = 0.5
) -> Optional[InequalityMonitor]:
    """Fit c on the leading ``fit_fraction`` of records, count violations on the rest.

    Returns None when fewer than four records are available.
    """
    if len(history) < 4:
        return None
    t = column(history, "t")
    y = column(history, "y_lnln")
    d = column(history, "dissip")
    dy = np.diff(y) / np.diff(t)
    lhs = dy + 0.5 * (y[1:] + y[:-1])
    bound = -0.5 * mu * 0.5 * (d[1:] + d[:-1])
    excess = lhs - bound
    n_fit = max(1, int(len(excess) * fit_fraction))
    c_fit = float(max(0.0, excess[:n_fit].max()))
    residual = excess - c_fit
    tol = 1e-9 * max(1.0, float(np.abs(lhs).max()))
    violations = int(np.count_nonzero(residual[n_fit:] > tol))
    return InequalityMonitor(c_fit, residual, violations)


def format_value(x: Union[int, float]) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Union[str, Path], history: Iterable[DiagnosticsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in history:
            fh.write(",".join(format_value(x) for x in astuple(rec)) + "\n")


def read_csv(path: Union[str, Path]) -> list[DiagnosticsRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        out = []
        for row in reader:
            out.append(DiagnosticsRecord(int(row[0]), *(float(x) for x in row[1:])))
    return out

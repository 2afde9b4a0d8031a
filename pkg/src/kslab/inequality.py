"""Numerical checks of interpolation, truncation and equi-integrability estimates.

All estimates are posed on a 2D box (n = 2). Integrals are cell sums times the
cell area; gradients are centered differences with one-sided boundary stencils.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

import numpy as np
import scipy.fft
from scipy.optimize import brentq

from .grid import GridSpec, ScalarField, gradient_magnitude, sum_values
from .sources import g_lnln, xi_truncate

KINDS = ("bump", "noise", "plateau", "spike")
SPIKE_CAP = 1e6
HOLDS_TOL = 1e-12
N_OVERFLOW = 1e300
# Truncation levels, as fractions of max(w), sampled during calibration.
CALIBRATION_FRACTIONS = tuple(round(0.05 * k, 2) for k in range(1, 20))
LAB_COLUMNS = ("field_id", "q", "eps", "N", "c_cal", "C_cal", "lhs", "rhs", "margin", "holds")

ScalarFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CorpusSpec:
    """Deterministic family of nonnegative test fields.

    Field ``i`` has kind ``kinds[i % len(kinds)]`` and draws from its own
    child of ``SeedSequence(seed)``, so a corpus prefix does not depend on
    ``count``.
    """

    count: int
    kinds: tuple[str, ...] = KINDS
    seed: int = 0
    amp_min: float = 0.1
    amp_max: float = 100.0
    n: int = 128
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"corpus count must be >= 1, got {self.count}")
        if not self.kinds:
            raise ValueError("corpus needs at least one kind")
        bad = [k for k in self.kinds if k not in KINDS]
        if bad:
            raise ValueError(f"unknown corpus kinds {bad}; expected a subset of {KINDS}")
        if not 0 < self.amp_min <= self.amp_max <= SPIKE_CAP:
            raise ValueError(f"amplitude range must satisfy 0 < amp_min <= amp_max <= {SPIKE_CAP:g}")

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.n, self.lx, self.ly)


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _make_field(kind: str, rng: np.random.Generator, spec: CorpusSpec) -> np.ndarray:
    grid = spec.grid
    x, y = grid.centers()
    h = min(grid.hx, grid.hy)
    if kind == "bump":
        out = np.zeros(grid.shape)
        for _ in range(int(rng.integers(1, 4))):
            x0, y0 = rng.uniform(0.1, 0.9, 2) * (spec.lx, spec.ly)
            sigma = rng.uniform(0.05, 0.3) * min(spec.lx, spec.ly)
            amp = _log_uniform(rng, spec.amp_min, spec.amp_max)
            out += amp * np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / sigma**2)
        return out
    if kind == "noise":
        coeffs = scipy.fft.dctn(rng.standard_normal(grid.shape), norm="ortho")
        k0 = rng.uniform(3.0, 12.0)
        ky, kx = np.meshgrid(np.arange(grid.ny), np.arange(grid.nx), indexing="ij")
        coeffs *= np.exp(-(kx**2 + ky**2) / k0**2)
        z = scipy.fft.idctn(coeffs, norm="ortho")
        span = z.max() - z.min()
        amp = _log_uniform(rng, spec.amp_min, spec.amp_max)
        return amp * (z - z.min()) / span if span > 0 else np.full(grid.shape, amp)
    if kind == "plateau":
        x0, y0 = rng.uniform(0.3, 0.7, 2) * (spec.lx, spec.ly)
        radius = rng.uniform(0.1, 0.3) * min(spec.lx, spec.ly)
        width = rng.uniform(2.0, 6.0) * h
        amp = _log_uniform(rng, spec.amp_min, spec.amp_max)
        base = rng.uniform(0.0, 0.1) * amp
        r = np.hypot(x - x0, y - y0)
        return base + amp * 0.5 * (1.0 - np.tanh((r - radius) / width))
    # spike: narrow, tall; sigma >= 2h keeps it resolved on the grid.
    x0, y0 = rng.uniform(0.2, 0.8, 2) * (spec.lx, spec.ly)
    sigma = rng.uniform(2.0, 6.0) * h
    amp = min(_log_uniform(rng, max(spec.amp_max, 1e3), SPIKE_CAP), SPIKE_CAP)
    return amp * np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / sigma**2)


def generate_corpus(spec: CorpusSpec) -> list[ScalarField]:
    grid = spec.grid
    children = np.random.SeedSequence(spec.seed).spawn(spec.count)
    fields = []
    for i, child in enumerate(children):
        kind = spec.kinds[i % len(spec.kinds)]
        values = _make_field(kind, np.random.default_rng(child), spec)
        fields.append(ScalarField(grid, np.maximum(values, 0.0)))
    return fields


def _fields(corpus: Union[CorpusSpec, Sequence[ScalarField]]) -> list[ScalarField]:
    return generate_corpus(corpus) if isinstance(corpus, CorpusSpec) else list(corpus)


def _integral(values: np.ndarray, grid: GridSpec) -> float:
    return sum_values(values) * grid.cell_area


def _lp(values: np.ndarray, grid: GridSpec, p: float) -> float:
    return _integral(np.abs(values) ** p, grid) ** (1.0 / p)


def gn_exponent(p: float, q: float, r: float, s: float) -> float:
    """Interpolation exponent a for n = 2, after checking the admissible range."""
    if not r >= 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if not 0 < q <= p < math.inf:
        raise ValueError(f"need 0 < q <= p < inf, got q={q}, p={p}")
    if not s > 0:
        raise ValueError(f"s must be > 0, got {s}")
    denom = 1.0 / q + 0.5 - 1.0 / r
    if denom == 0:
        raise ValueError("exponent denominator 1/q + 1/2 - 1/r vanishes")
    a = (1.0 / q - 1.0 / p) / denom
    if not 0 <= a <= 1:
        raise ValueError(f"interpolation exponent a={a:.6g} outside [0, 1]")
    return a


def gn_ratio(f: ScalarField, p: float, q: float, r: float, s: float) -> float:
    """||f||_p^p / (||grad f||_r^{pa} ||f||_q^{p(1-a)} + ||f||_s^p); 0 for f = 0."""
    a = gn_exponent(p, q, r, s)
    grid = f.spec
    vals = f.values
    lhs = _lp(vals, grid, p) ** p
    if lhs == 0:
        return 0.0
    grad_r = _lp(gradient_magnitude(f), grid, r)
    denom = grad_r ** (p * a) * _lp(vals, grid, q) ** (p * (1.0 - a)) + _lp(vals, grid, s) ** p
    return lhs / denom


def estimate_gn_constant(
    corpus: Union[CorpusSpec, Sequence[ScalarField]], p: float, q: float, r: float, s: float
) -> float:
    """Largest interpolation ratio over the corpus; an empirical lower bound on the sharp constant."""
    gn_exponent(p, q, r, s)
    fields = _fields(corpus)
    ratios = [gn_ratio(f, p, q, r, s) for f in fields]
    best = max(ratios)
    if not math.isfinite(best):
        raise FloatingPointError("interpolation ratio is not finite")
    return best


@dataclass(frozen=True)
class TruncationParams:
    q: float
    eps: float
    N: float
    c_cal: float
    C_cal: float
    c_eps: float


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    margin: float
    params: TruncationParams
    holds: bool

    def __post_init__(self):
        if self.holds and not self.margin >= -HOLDS_TOL * max(1.0, abs(self.rhs)):
            raise AssertionError("report marked as holding with a negative margin")


def power_dirichlet(w: np.ndarray, grid: GridSpec, q: float) -> float:
    """Discrete integral of |grad w^{q/2}|^2."""
    f = ScalarField(grid, np.abs(w) ** (q / 2.0))
    return _integral(gradient_magnitude(f) ** 2, grid)


def select_cutoff(c_cal: float, eps: float, g: ScalarFn = g_lnln) -> float:
    """Smallest N with c_cal * N / g(N) <= eps.

    Assumes g(s)/s is nondecreasing and unbounded. Raises OverflowError when
    no N below 1e300 qualifies.
    """
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if c_cal < 0:
        raise ValueError(f"c_cal must be >= 0, got {c_cal}")
    if c_cal == 0:
        return 0.0

    def excess(log_n: float) -> float:
        n = math.exp(log_n)
        return c_cal * n / float(g(n)) - eps

    lo = math.log(1e-12)
    if excess(lo) <= 0:
        return math.exp(lo)
    hi = lo
    while excess(hi) > 0:
        hi += 1.0 + abs(hi)
        if hi > math.log(N_OVERFLOW):
            raise OverflowError(
                f"no cutoff N below {N_OVERFLOW:g} achieves c_cal*N/g(N) <= {eps:g}; g grows too slowly"
            )
    log_n = brentq(excess, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    n = math.exp(log_n)
    while c_cal * n / float(g(n)) > eps:
        n = math.nextafter(n, math.inf)
    return n


def truncation_constant(n_cut: float, q: float) -> float:
    c_eps = (2.0 * n_cut) ** q
    if not math.isfinite(c_eps):
        raise OverflowError(f"(2N)^q overflows for N={n_cut:g}, q={q:g}")
    return c_eps


def check_truncation_inequality(
    w: ScalarField,
    q: float,
    eps: float,
    g: ScalarFn = g_lnln,
    c_cal: float = 0.0,
    c_eps_cal: float = 1.0,
) -> InequalityReport:
    """Evaluate int w^{q+1} <= eps*int|grad w^{q/2}|^2 * int g(w) + C (int w)^{q+1} + c(eps) int w.

    ``c_eps_cal`` is the calibrated constant C; N and c(eps) = (2N)^q follow
    from ``c_cal`` and ``eps``.
    """
    if not q > 1:
        raise ValueError(f"q must be > 1, got {q}")
    grid = w.spec
    a = np.abs(w.values)
    n_cut = select_cutoff(c_cal, eps, g)
    c_eps = truncation_constant(n_cut, q)
    mass = _integral(a, grid)
    lhs = _integral(a ** (q + 1.0), grid)
    rhs = eps * power_dirichlet(a, grid, q) * _integral(g(a), grid) + c_eps_cal * mass ** (q + 1.0) + c_eps * mass
    margin = rhs - lhs
    holds = margin >= -HOLDS_TOL * max(1.0, abs(rhs))
    params = TruncationParams(q, eps, n_cut, c_cal, c_eps_cal, c_eps)
    return InequalityReport(lhs, rhs, margin, params, bool(holds))


def calibrate_truncation(
    corpus: Union[CorpusSpec, Sequence[ScalarField]],
    q: float,
    fractions: Sequence[float] = CALIBRATION_FRACTIONS,
) -> tuple[float, float]:
    """Fit (c_cal, C_cal) on a calibration corpus.

    With xi = xi_truncate(w, N), pointwise w^{q+1} <= xi^{q+1} + (2N)^q w, and
    int xi <= (N / g(N)) int g(w). What remains is

        int xi^{q+1} <= c_cal * D(w) * int xi + C_cal * (int xi)^{q+1},

    D(w) = int |grad w^{q/2}|^2. C_cal is pinned at twice the Jensen floor
    |Omega|^{-q}; c_cal is the smallest value covering every (w, N) pair, with
    N ranging over ``fractions`` of max(w) and N -> 0 (xi = w).
    """
    if not q > 1:
        raise ValueError(f"q must be > 1, got {q}")
    fields = _fields(corpus)
    if all(f.max() == 0 for f in fields):
        raise ValueError("calibration corpus is degenerate: every field is zero")
    area = fields[0].spec.area
    big_c = 2.0 * area ** (-q)
    c_cal = 0.0
    for f in fields:
        grid = f.spec
        w = np.abs(f.values)
        top = float(w.max())
        if top == 0:
            continue
        d_w = power_dirichlet(w, grid, q)
        for xi in [w] + [xi_truncate(w, frac * top) for frac in fractions]:
            mass_xi = _integral(xi, grid)
            excess = _integral(xi ** (q + 1.0), grid) - big_c * mass_xi ** (q + 1.0)
            if excess <= 0:
                continue
            if d_w == 0:
                # 0/0 gradient ratio of a constant field: contributes nothing.
                continue
            c_cal = max(c_cal, excess / (d_w * mass_xi))
    return c_cal, big_c


@dataclass(frozen=True)
class TruncationLabRow:
    field_id: int
    report: InequalityReport


def truncation_lab(
    calibration: CorpusSpec,
    verification: CorpusSpec,
    qs: Sequence[float] = (2.0, 3.0),
    epss: Sequence[float] = (0.1, 1.0),
    g: ScalarFn = g_lnln,
) -> list[TruncationLabRow]:
    """Calibrate on one corpus, then check every verification field at each (q, eps)."""
    cal_fields = generate_corpus(calibration)
    ver_fields = generate_corpus(verification)
    rows = []
    for q in qs:
        c_cal, big_c = calibrate_truncation(cal_fields, q)
        for eps in epss:
            for i, w in enumerate(ver_fields):
                rows.append(TruncationLabRow(i, check_truncation_inequality(w, q, eps, g, c_cal, big_c)))
    return rows


def write_lab_csv(path: Union[str, Path], rows: Iterable[TruncationLabRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(LAB_COLUMNS) + "\n")
        for row in rows:
            rep, prm = row.report, row.report.params
            values = (prm.q, prm.eps, prm.N, prm.c_cal, prm.C_cal, rep.lhs, rep.rhs, rep.margin)
            fh.write(f"{row.field_id}," + ",".join(format(float(v), ".17g") for v in values) + f",{int(rep.holds)}\n")


@dataclass(frozen=True)
class EquiRow:
    cutoff: float
    tail_sup: float
    bound: float


@dataclass(frozen=True)
class EquiReport:
    g_sup: float
    rows: tuple[EquiRow, ...]

    @property
    def tails(self) -> np.ndarray:
        return np.array([r.tail_sup for r in self.rows])


def _inf_ratio_above(g: ScalarFn, k: float) -> float:
    # inf_{s > K} g(s)/s; equals g(K)/K when the ratio is nondecreasing.
    s = k * np.logspace(0.0, 12.0, 241)
    ratio = np.asarray(g(s), dtype=np.float64) / s
    return float(ratio.min())


def equi_integrability_probe(
    fields: Sequence[ScalarField],
    g: ScalarFn = g_lnln,
    cutoffs: Sequence[float] = (10.0, 100.0, 1000.0, 10000.0),
) -> EquiReport:
    """Per cutoff K: sup over the family of int_{u>K} u, with the bound sup int g(u) / inf_{s>K} g(s)/s."""
    if not fields:
        raise ValueError("need at least one field")
    g_sup = 0.0
    tails = np.zeros(len(cutoffs))
    for f in fields:
        u = f.values
        if f.min() < 0:
            raise ValueError("equi-integrability probe needs nonnegative fields")
        g_sup = max(g_sup, _integral(np.asarray(g(u), dtype=np.float64), f.spec))
        for i, k in enumerate(cutoffs):
            tails[i] = max(tails[i], _integral(np.where(u > k, u, 0.0), f.spec))
    rows = []
    for k, tail in zip(cutoffs, tails):
        inf_ratio = _inf_ratio_above(g, float(k))
        bound = g_sup / inf_ratio if inf_ratio > 0 else math.inf
        rows.append(EquiRow(float(k), float(tail), bound))
    return EquiReport(g_sup, tuple(rows))

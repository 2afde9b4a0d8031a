"""Explicit time stepping for u_t = Lap u - div(u grad v) + f(u), 0 = Lap v + u - v."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Optional

import numpy as np

from . import _kernels
from .diagnostics import DiagnosticsRecord, record, write_csv
from .elliptic import EllipticSolveParams, solve_signal
from .grid import ScalarField, write_snapshot
from .sources import SourceSpec, g_lnln

if TYPE_CHECKING:
    from .config import SimConfig

log = logging.getLogger(__name__)

NEGATIVE_REPAIR = 1e-13


class SchemeFailure(RuntimeError):
    """The explicit update produced a value the CFL bound should have excluded."""


class DtCollapse(Exception):
    """compute_dt fell below dt_min; treated as numerical blow-up."""

    def __init__(self, dt: float, dt_min: float):
        super().__init__(f"time step {dt:.3e} fell below dt_min {dt_min:.3e}")
        self.dt = dt


@dataclass(frozen=True)
class CflParams:
    c_diff: float = 0.2
    c_adv: float = 0.4
    c_src: float = 0.1
    dt_min: float = 1e-12
    dt_max: float = 1e-2

    def __post_init__(self):
        for name in ("c_diff", "c_adv", "c_src", "dt_min", "dt_max"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"cfl.{name} must be finite and > 0, got {value}")
        if not self.dt_min < self.dt_max:
            raise ValueError(f"cfl.dt_min ({self.dt_min}) must be < cfl.dt_max ({self.dt_max})")


@dataclass(frozen=True)
class SimState:
    """``v`` is always the signal solved from the current ``u``."""

    t: float
    u: ScalarField
    v: ScalarField
    step_index: int = 0
    _source_cache: dict = field(default_factory=dict, init=False, compare=False, repr=False)

    def source_values(self, source: SourceSpec) -> np.ndarray:
        """f(u) on the grid, computed once per state and source."""
        cached = self._source_cache.get(source)
        if cached is None:
            if source.kind == "none":
                cached = np.zeros(self.u.spec.shape)
            else:
                cached = np.empty(self.u.spec.shape)
                _kernels.source_field(self.u.values, *source.kernel_args(), cached)
            cached.setflags(write=False)
            self._source_cache[source] = cached
        return cached

    @classmethod
    def initial(cls, u: ScalarField, ell: EllipticSolveParams = EllipticSolveParams(), t: float = 0.0) -> "SimState":
        if u.min() < 0:
            raise ValueError("initial density must be nonnegative")
        return cls(t, u, solve_signal(u, ell), 0)


@dataclass(frozen=True)
class BlowUpVerdict:
    kind: str = "none"  # none | linf_threshold | dt_collapse
    t_detect: float = math.nan
    linf_at_detect: float = math.nan

    @property
    def blew_up(self) -> bool:
        return self.kind != "none"


@dataclass
class RunResult:
    records: list[DiagnosticsRecord]
    verdict: BlowUpVerdict
    final_state: SimState
    snapshots: list[tuple[float, ScalarField]] = field(default_factory=list)
    steps: int = 0
    wall_time: float = 0.0
    linf0: float = 0.0
    min_u_seen: float = math.inf
    max_u_seen: float = 0.0


def compute_dt(
    state: SimState,
    cfl: CflParams,
    source: SourceSpec = SourceSpec(),
    chemotaxis: bool = True,
) -> float:
    """Stable explicit step: diffusive, advective and source limits plus a
    positivity guard (dt times the largest per-cell outflow rate <= 1)."""
    spec = state.u.spec
    h = min(spec.hx, spec.hy)
    max_grad, max_rel_src, max_rate = _kernels.step_limits(
        state.u.values, state.v.values, state.source_values(source), spec.hx, spec.hy, chemotaxis
    )
    dt = min(cfl.c_diff * h * h / 4.0, cfl.dt_max)
    if max_grad > 0:
        dt = min(dt, cfl.c_adv * h / max_grad)
    if max_rel_src > 0:
        dt = min(dt, cfl.c_src / max_rel_src)
    if max_rate > 0:
        dt = min(dt, 1.0 / max_rate)
    if not dt >= cfl.dt_min:
        raise DtCollapse(dt, cfl.dt_min)
    return dt


def step(
    state: SimState,
    dt: float,
    spec: SourceSpec = SourceSpec(),
    ell: EllipticSolveParams = EllipticSolveParams(),
    chemotaxis: bool = True,
) -> SimState:
    """One forward-Euler step; returns the new state with its signal solved."""
    u = state.u
    grid = u.spec
    out = np.empty(grid.shape)
    _kernels.euler_update(
        u.values, state.v.values, state.source_values(spec), float(dt), grid.hx, grid.hy, chemotaxis, out
    )
    lo, hi, finite = _kernels.min_max(out)
    if not finite:
        raise SchemeFailure(f"non-finite density after step {state.step_index + 1}")
    if lo < 0:
        floor = -NEGATIVE_REPAIR * max(hi, -lo)
        if lo <= floor:
            raise SchemeFailure(
                f"negative density {lo:.3e} after step {state.step_index + 1} (dt={dt:.3e}); CFL bound violated"
            )
        np.maximum(out, 0.0, out=out)
    u_new = ScalarField._wrap(grid, out)
    return SimState(state.t + dt, u_new, solve_signal(u_new, ell), state.step_index + 1)


def run(
    config: "SimConfig",
    out_dir: Optional[Path] = None,
    g: Callable[[np.ndarray], np.ndarray] = g_lnln,
    keep_snapshots: bool = False,
) -> RunResult:
    """Integrate ``config`` to ``t_end`` or until blow-up is detected.

    Files (diagnostics.csv, snapshots) are written only when ``out_dir`` is
    given. Snapshots are also kept in memory when ``keep_snapshots`` is set.
    """
    started = time.perf_counter()
    u0, t0 = config.initial_field()
    state = SimState.initial(u0, config.ell, t=t0)
    linf0 = state.u.max()
    threshold = config.linf_blowup_factor * linf0
    cfl, source, chemo = config.cfl, config.source, config.chemotaxis

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    records = [record(state, g)]
    snapshots: list[tuple[float, ScalarField]] = []

    def snap(s: SimState):
        if keep_snapshots:
            snapshots.append((s.t, s.u))
        if out_dir is not None:
            write_snapshot(out_dir / f"snap_{s.step_index:08d}.ksfield", s.u, s.t)

    if config.snapshot_every > 0:
        snap(state)

    verdict = BlowUpVerdict()
    min_seen = state.u.min()
    max_seen = linf0
    dt = 0.0
    while state.t < config.t_end:
        try:
            dt = compute_dt(state, cfl, source, chemo)
        except DtCollapse as exc:
            verdict = BlowUpVerdict("dt_collapse", state.t, state.u.max())
            log.info("blow-up detected: %s", exc)
            break
        dt = min(dt, config.t_end - state.t)
        state = step(state, dt, source, config.ell, chemo)
        if state.t >= config.t_end * (1 - 1e-15):
            state = SimState(config.t_end, state.u, state.v, state.step_index)
        linf = state.u.max()
        min_seen = min(min_seen, state.u.min())
        max_seen = max(max_seen, linf)
        blown = linf > threshold
        done = blown or state.t >= config.t_end
        if state.step_index % config.record_every == 0 or done:
            records.append(record(state, g, dt))
        if config.snapshot_every > 0 and (state.step_index % config.snapshot_every == 0 or done):
            snap(state)
        if blown:
            verdict = BlowUpVerdict("linf_threshold", state.t, linf)
            log.info("blow-up detected: L-inf %.6g exceeds %.6g at t=%.6g", linf, threshold, state.t)
            break

    if verdict.kind == "dt_collapse" and records[-1].step != state.step_index:
        records.append(record(state, g, dt))

    if out_dir is not None:
        write_csv(out_dir / "diagnostics.csv", records)

    return RunResult(
        records=records,
        verdict=verdict,
        final_state=state,
        snapshots=snapshots,
        steps=state.step_index,
        wall_time=time.perf_counter() - started,
        linf0=linf0,
        min_u_seen=min_seen,
        max_u_seen=max_seen,
    )

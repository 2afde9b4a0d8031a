"""Run orchestration: presets, on-disk artifacts, refinement studies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .config import SimConfig, preset_config, serialize_config
from .diagnostics import CSV_COLUMNS, column, format_value
from .grid import ScalarField, norm, restrict
from .stepper import RunResult, run

SUMMARY_COLUMNS = tuple(c for c in CSV_COLUMNS if c not in ("step", "t", "dt"))
# Excluded when comparing two runs for bit-identity.
TIMING_KEYS = ("wall_time",)


@dataclass
class RunOutcome:
    config: SimConfig
    result: RunResult
    out_dir: Optional[Path]


def summary_pairs(result: RunResult, name: str = "") -> dict[str, str]:
    v = result.verdict
    pairs = {
        "preset": name or "custom",
        "verdict": v.kind,
        "t_detect": format_value(v.t_detect),
        "linf_at_detect": format_value(v.linf_at_detect),
        "t_final": format_value(result.final_state.t),
        "steps": str(result.steps),
        "records": str(len(result.records)),
        "linf0": format_value(result.linf0),
        "min_u": format_value(result.min_u_seen),
        "max_u": format_value(result.max_u_seen),
    }
    for key in SUMMARY_COLUMNS:
        pairs[f"sup_{key}"] = format_value(column(result.records, key).max())
    pairs["wall_time"] = format(result.wall_time, ".3f")
    return pairs


def write_summary(path: Union[str, Path], pairs: Mapping[str, str]) -> None:
    Path(path).write_text("".join(f"{k} = {v}\n" for k, v in pairs.items()))


def read_summary(path: Union[str, Path]) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            key, value = (p.strip() for p in line.split("=", 1))
            out[key] = value
    return out


def run_config(
    config: SimConfig,
    out_dir: Optional[Union[str, Path]] = None,
    name: str = "",
    keep_snapshots: bool = False,
) -> RunOutcome:
    """Run ``config``; with ``out_dir`` write config.txt, diagnostics.csv, snapshots and summary.txt."""
    target = Path(out_dir) if out_dir is not None else None
    if target is not None:
        target.mkdir(parents=True, exist_ok=True)
        (target / "config.txt").write_text(serialize_config(config))
    result = run(config, out_dir=target, keep_snapshots=keep_snapshots)
    if target is not None:
        write_summary(target / "summary.txt", summary_pairs(result, name))
    return RunOutcome(config, result, target)


def run_preset(
    name: str,
    overrides: Optional[Mapping[str, str]] = None,
    out_dir: Optional[Union[str, Path]] = None,
    write: bool = True,
    keep_snapshots: bool = False,
) -> RunOutcome:
    """Materialize a preset, apply overrides and run it.

    Artifacts go to ``out_dir`` or, when that is None, the config's out_dir.
    ``write=False`` keeps everything in memory.
    """
    config = preset_config(name, overrides)
    target = None
    if write:
        target = Path(out_dir) if out_dir is not None else Path(config.out_dir)
    return run_config(config, target, name=name, keep_snapshots=keep_snapshots)


@dataclass(frozen=True)
class RefinementLevel:
    nx: int
    ny: int
    verdict: str
    t_final: float
    steps: int
    sup_y_lnln: float
    sup_linf: float
    error: float  # L2 distance to the finest level, restricted onto this grid
    order: float  # log2(error / error of the next finer level)


def refinement_study(
    config: SimConfig,
    levels: int,
    out_dir: Optional[Union[str, Path]] = None,
) -> list[RefinementLevel]:
    """Rerun ``config`` at nx, ny times 1, 2, 4, ... and compare final densities.

    Errors compare each level with the finest one, block-averaged onto the
    coarse grid; ``order`` is nan where no finer nonzero error exists.
    """
    if levels < 2:
        raise ValueError(f"refinement needs at least 2 levels, got {levels}")
    results: list[RunResult] = []
    for k in range(levels):
        cfg = config.with_grid(config.grid.nx * 2**k, config.grid.ny * 2**k)
        target = Path(out_dir) / f"level_{k}_{cfg.grid.nx}x{cfg.grid.ny}" if out_dir is not None else None
        results.append(run_config(cfg, target).result)

    finest: ScalarField = results[-1].final_state.u
    errors = []
    for k, res in enumerate(results):
        if k == levels - 1:
            errors.append(0.0)
            continue
        ref = restrict(finest, 2 ** (levels - 1 - k))
        errors.append(norm(res.final_state.u - ref, 2))

    table = []
    for k, res in enumerate(results):
        nxt = errors[k + 1] if k + 1 < levels - 1 else math.nan
        order = math.log2(errors[k] / nxt) if nxt > 0 and errors[k] > 0 else math.nan
        table.append(
            RefinementLevel(
                nx=res.final_state.u.spec.nx,
                ny=res.final_state.u.spec.ny,
                verdict=res.verdict.kind,
                t_final=res.final_state.t,
                steps=res.steps,
                sup_y_lnln=float(column(res.records, "y_lnln").max()),
                sup_linf=float(column(res.records, "linf").max()),
                error=errors[k],
                order=order,
            )
        )
    return table


def format_refinement(table: Sequence[RefinementLevel]) -> str:
    head = f"{'grid':>11} {'verdict':>15} {'t_final':>10} {'steps':>8} {'sup_y_lnln':>12} {'sup_linf':>12} {'error':>11} {'order':>6}"
    lines = [head]
    for r in table:
        lines.append(
            f"{r.nx:>5}x{r.ny:<5} {r.verdict:>15} {r.t_final:>10.4g} {r.steps:>8d} "
            f"{r.sup_y_lnln:>12.6g} {r.sup_linf:>12.6g} {r.error:>11.3e} {r.order:>6.2f}"
        )
    return "\n".join(lines)


"""Command-line front end.

Exit codes: 0 success (a detected blow-up is a result, not a failure),
2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import PRESETS, ConfigError, load_config
from .elliptic import EllipticSolveError
from .experiments import format_refinement, refinement_study, run_config, run_preset
from .grid import read_snapshot
from .inequality import (
    CorpusSpec,
    equi_integrability_probe,
    estimate_gn_constant,
    truncation_lab,
    write_lab_csv,
)
from .stepper import SchemeFailure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (SchemeFailure, EllipticSolveError, FloatingPointError, OverflowError)

# (p, q, r, s) with admissible interpolation exponents for n = 2.
GN_EXPONENTS = ((4.0, 2.0, 2.0, 2.0), (3.0, 1.0, 2.0, 1.0), (6.0, 2.0, 2.0, 1.0))


def _parse_set(items: Sequence[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (p.strip() for p in item.split("=", 1))
        out[key] = value
    return out


def _report_run(outcome) -> None:
    res = outcome.result
    v = res.verdict
    print(f"verdict: {v.kind}")
    if v.blew_up:
        print(f"t_detect: {v.t_detect:.6g}  linf_at_detect: {v.linf_at_detect:.6g}")
    print(f"t_final: {res.final_state.t:.6g}  steps: {res.steps}  wall_time: {res.wall_time:.2f}s")
    if outcome.out_dir is not None:
        print(f"artifacts: {outcome.out_dir}")


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    out = args.out if args.out is not None else config.out_dir
    _report_run(run_config(config, out))
    return EXIT_OK


def cmd_preset(args) -> int:
    _report_run(run_preset(args.name, _parse_set(args.set), args.out))
    return EXIT_OK


def cmd_refine(args) -> int:
    config = load_config(args.config)
    table = refinement_study(config, args.levels, args.out)
    print(format_refinement(table))
    return EXIT_OK


def cmd_lab(args) -> int:
    seed = args.corpus_seed
    if args.which == "gn":
        corpus = CorpusSpec(args.count, seed=seed, n=args.n)
        print(f"{'p':>5} {'q':>5} {'r':>5} {'s':>5} {'C_GN lower bound':>18}")
        for p, q, r, s in GN_EXPONENTS:
            print(f"{p:>5g} {q:>5g} {r:>5g} {s:>5g} {estimate_gn_constant(corpus, p, q, r, s):>18.6g}")
        return EXIT_OK
    if args.which == "trunc":
        calibration = CorpusSpec(args.count, seed=seed, n=args.n)
        verification = CorpusSpec(args.count, seed=seed + args.holdout_offset, n=args.n)
        rows = truncation_lab(calibration, verification)
        out = Path(args.out) if args.out is not None else Path("out/lab/truncation.csv")
        out.parent.mkdir(parents=True, exist_ok=True)
        write_lab_csv(out, rows)
        seen = {}
        for row in rows:
            prm = row.report.params
            key = (prm.q, prm.eps)
            total, bad, c_cal = seen.get(key, (0, 0, prm.c_cal))
            seen[key] = (total + 1, bad + (not row.report.holds), c_cal)
        for (q, eps), (total, bad, c_cal) in seen.items():
            print(f"q={q:g} eps={eps:g} c_cal={c_cal:.6g}: {bad}/{total} violations")
        print(f"report: {out}")
        return EXIT_OK
    # equi
    if args.snapshots is None:
        raise ConfigError("lab equi needs --snapshots DIR (KSFIELD files from a run)")
    paths = sorted(Path(args.snapshots).glob("*.ksfield"))
    if not paths:
        raise ConfigError(f"no .ksfield snapshots found in {args.snapshots}")
    fields = [read_snapshot(p)[0] for p in paths]
    report = equi_integrability_probe(fields)
    print(f"snapshots: {len(fields)}  sup int g(u): {report.g_sup:.6g}")
    print(f"{'K':>10} {'tail sup':>14} {'bound':>14}")
    for row in report.rows:
        print(f"{row.cutoff:>10g} {row.tail_sup:>14.6g} {row.bound:>14.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kslab", description="Keller-Segel chemotaxis numerical lab")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configuration file")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, help="output directory (default: out_dir from the config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preset", help="run a named preset scenario")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("lab", help="inequality laboratory")
    p.add_argument("which", choices=("gn", "trunc", "equi"))
    p.add_argument("--corpus-seed", type=int, default=1)
    p.add_argument("--count", type=int, default=100, help="fields per corpus")
    p.add_argument("--n", type=int, default=128, help="corpus grid size")
    p.add_argument("--holdout-offset", type=int, default=100, help="verification seed = corpus seed + offset")
    p.add_argument("--snapshots", type=Path, help="snapshot directory for the equi probe")
    p.add_argument("--out", type=Path, help="lab CSV path (trunc)")
    p.set_defaults(func=cmd_lab)

    p = sub.add_parser("refine", help="refinement study of a configuration")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_refine)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        # Bad paths or arguments that are not part of a config document.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

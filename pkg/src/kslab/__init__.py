"""Numerical lab for the 2D parabolic-elliptic Keller-Segel system with sub-logistic sources."""
from .config import ConfigError, SimConfig, load_config, parse_config, preset_config, serialize_config
from .elliptic import EllipticSolveError, EllipticSolveParams, solve_signal
from .grid import GridSpec, ScalarField, chemotactic_divergence, integrate, laplacian, norm
from .sources import SourceSpec, g_lnln, inv_log_antiderivative, lhopital_ratio, phi_eval, source_eval, xi_truncate
from .stepper import BlowUpVerdict, CflParams, SimState, compute_dt, run, step

__all__ = [
    "BlowUpVerdict",
    "CflParams",
    "ConfigError",
    "EllipticSolveError",
    "EllipticSolveParams",
    "GridSpec",
    "ScalarField",
    "SimConfig",
    "SimState",
    "SourceSpec",
    "chemotactic_divergence",
    "compute_dt",
    "g_lnln",
    "integrate",
    "inv_log_antiderivative",
    "laplacian",
    "lhopital_ratio",
    "load_config",
    "norm",
    "parse_config",
    "phi_eval",
    "preset_config",
    "run",
    "serialize_config",
    "solve_signal",
    "source_eval",
    "step",
    "xi_truncate",
]

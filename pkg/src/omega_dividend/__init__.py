"""Optimal dividends with default triggered by an occupation-time clock."""

from ._roots import BracketError
from .critical import CriticalSolution, InconsistentSolution, critical_boundaries, critical_solve
from .model import REFERENCE_PARAMS, InvalidParameters, ModelParams, classical_barrier, classical_solve
from .regimes import Regime, RegimeSeparators, classify, separators
from .simulate import McEstimate, PathConfig, mc_value, simulate_path
from .strategy import DoubleBarrier, SingleBarrier, strategy_from_solution, strategy_value
from .subcritical import DegenerateSolution, SubcriticalSolution, subcritical_barrier, subcritical_coeffs
from .value import RegimeSolution, candidate, deriv_at, dumps, loads, solve, sweep, value_at
from .verify import VerifyReport, verify

__all__ = [
    "BracketError",
    "CriticalSolution",
    "DegenerateSolution",
    "DoubleBarrier",
    "REFERENCE_PARAMS",
    "InconsistentSolution",
    "InvalidParameters",
    "McEstimate",
    "ModelParams",
    "PathConfig",
    "Regime",
    "RegimeSeparators",
    "RegimeSolution",
    "SingleBarrier",
    "SubcriticalSolution",
    "VerifyReport",
    "candidate",
    "classical_barrier",
    "classical_solve",
    "classify",
    "critical_boundaries",
    "critical_solve",
    "deriv_at",
    "dumps",
    "loads",
    "mc_value",
    "separators",
    "simulate_path",
    "solve",
    "strategy_from_solution",
    "strategy_value",
    "subcritical_barrier",
    "subcritical_coeffs",
    "sweep",
    "value_at",
    "verify",
]

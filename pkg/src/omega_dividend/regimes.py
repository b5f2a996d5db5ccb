"""Regime separators y_l, y_u and classification of a distress threshold."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

from ._roots import bracketed_root
from .model import ModelParams, classical_barrier, delta_fn, exponents

# keeps f away from the bracket ends, where sub-expressions degenerate
BRACKET_PAD = 1e-9


class Regime(str, enum.Enum):
    CLASSICAL = "classical"
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RegimeSeparators:
    y_lower: float
    y_upper: float
    b_classical_penalized: float  # b*_{r+q}
    b_classical_base: float  # b*_r

    def as_dict(self) -> dict:
        return {
            "y_lower": self.y_lower,
            "y_upper": self.y_upper,
            "b_classical_penalized": self.b_classical_penalized,
            "b_classical_base": self.b_classical_base,
        }


def y_upper(params: ModelParams) -> float:
    b_rq = classical_barrier(params, params.rq)
    return b_rq + params.mu / params.r - params.mu / params.rq


def f_of_y(params: ModelParams, y: float) -> float:
    """Residual whose unique zero on (b*_{r+q}, y_u) is y_l.

    Equals 1/K1(y) - delta'(b*_{r+q}); negative while the single-barrier
    solution still has slope above one at b*_{r+q}.
    """
    yu = y_upper(params)
    if not 0.0 < y < yu:
        raise ValueError(f"f is defined on (0, y_u) = (0, {yu!r}); got y={y!r}")
    ex = exponents(params, params.r)
    g1, g2 = ex.gamma1, ex.gamma2
    d, d1, _ = delta_fn(params, y)
    _, d1_b, _ = delta_fn(params, classical_barrier(params, params.rq))
    base = (g2**2 / g1**2) * (d1 - g1 * d) / (d1 - g2 * d)
    lead = -g1 / g2 * d1 + g1 * d
    return float(lead * base ** (g1 / (g1 - g2)) - d1_b)


def y_lower(params: ModelParams) -> float:
    b_rq = classical_barrier(params, params.rq)
    yu = y_upper(params)
    return bracketed_root(
        lambda y: f_of_y(params, y),
        b_rq + BRACKET_PAD,
        yu - BRACKET_PAD,
        what="y_l",
    )


@lru_cache(maxsize=256)
def separators(params: ModelParams) -> RegimeSeparators:
    return RegimeSeparators(
        y_lower=y_lower(params),
        y_upper=y_upper(params),
        b_classical_penalized=classical_barrier(params, params.rq),
        b_classical_base=classical_barrier(params, params.r),
    )


def classify(params: ModelParams, y: float, seps: RegimeSeparators | None = None) -> Regime:
    if not math.isfinite(y) or y < 0:
        raise ValueError(f"distress threshold must be finite and >= 0, got {y!r}")
    if y == 0:
        return Regime.CLASSICAL
    seps = seps or separators(params)
    if y <= seps.y_lower:
        return Regime.SUBCRITICAL
    if y < seps.y_upper:
        return Regime.CRITICAL
    return Regime.SUPERCRITICAL

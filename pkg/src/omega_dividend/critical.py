"""Two-interval action region for distress thresholds strictly between y_l and y_u.

Below the lower free boundary the value coincides with the classical solution at
the penalised rate r+q. Between that boundary and y the penalised ODE holds, above
y the base-rate ODE holds up to the upper reflection barrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._roots import bracketed_root
from .model import (
    ModelParams,
    _below,
    _nonneg,
    basis,
    classical_deriv,
    classical_second,
    classical_solve,
    classical_value,
    exponents,
)
from .regimes import separators


# log H is a sum of O(1) logarithms, so its absolute rounding error is a few ulps
LOG_H_ROUNDING = 64 * 2.220446049250313e-16


class InconsistentSolution(ArithmeticError):
    """A property guaranteed by theory was violated numerically."""


@dataclass(frozen=True)
class CoeffQuad:
    e1: float
    e2: float
    e3: float
    e4: float


def e_coeffs(params: ModelParams, b: float, y: float) -> CoeffQuad:
    """Coefficients of the waiting-region exponentials for a lower boundary ``b``.

    (e1, e2) paste the penalised exponentials to V_{r+q} with unit slope at ``b``;
    (e3, e4) continue that curve C^1 across ``y`` with base-rate exponentials.
    """
    if not (math.isfinite(b) and math.isfinite(y)) or not 0.0 < b <= y:
        raise ValueError(f"e_coeffs requires 0 < b <= y, got b={b!r}, y={y!r}")
    v_rq = float(classical_value(classical_solve(params, params.rq), b))
    psi_b, phi_b, dpsi_b, dphi_b, _, _ = basis(params, params.rq, b)
    wr_b = dpsi_b * phi_b - psi_b * dphi_b
    e1 = (phi_b - dphi_b * v_rq) / wr_b
    e2 = (dpsi_b * v_rq - psi_b) / wr_b

    psq, phq, dpsq, dphq, _, _ = basis(params, params.rq, y)
    ps, ph, dps, dph, _, _ = basis(params, params.r, y)
    wr_y = dps * ph - ps * dph
    if not (wr_b > 0 and wr_y > 0):
        raise InconsistentSolution("non-positive Wronskian")
    e3 = (e1 * (ph * dpsq - dph * psq) + e2 * (ph * dphq - dph * phq)) / wr_y
    e4 = (e1 * (dps * psq - ps * dpsq) + e2 * (dps * phq - ps * dphq)) / wr_y
    return CoeffQuad(float(e1), float(e2), float(e3), float(e4))


def log_H(params: ModelParams, b: float, y: float) -> float:
    """log H(b, y), summed factor by factor using e3 > 0 and e4 < 0."""
    ex = exponents(params, params.r)
    g1, g2, s = ex.gamma1, ex.gamma2, ex.spread
    c = e_coeffs(params, b, y)
    if not (c.e3 > 0 and c.e4 < 0):
        raise InconsistentSolution(f"expected e3 > 0 > e4 at b={b!r}, y={y!r}; got {c}")
    return (
        math.log(s)
        + (g1 + g2) / s * math.log(-g2 / g1)
        - g2 / s * math.log(c.e3)
        + g1 / s * math.log(-c.e4)
    )


def H_fn(params: ModelParams, b: float, y: float) -> float:
    return math.exp(log_H(params, b, y))


def upper_barrier(params: ModelParams, b: float, y: float) -> float:
    """Inflection point of the base-rate piece; the upper reflection barrier when H(b,y)=1."""
    ex = exponents(params, params.r)
    c = e_coeffs(params, b, y)
    return math.log(-(ex.gamma2**2) * c.e4 / (ex.gamma1**2 * c.e3)) / ex.spread


def critical_boundaries(params: ModelParams, y: float) -> tuple[float, float]:
    """Return (lower free boundary, upper reflection barrier) for y in (y_l, y_u).

    Both boundaries are clamped into [b*_{r+q}, y] and [y, inf) when rounding
    alone puts them outside.
    """
    seps = separators(params)
    if not seps.y_lower < y < seps.y_upper:
        raise ValueError(
            f"critical regime needs y in ({seps.y_lower!r}, {seps.y_upper!r}), got {y!r}"
        )
    # H is continuous on the closed triangle and the root approaches either end
    # quadratically fast near y_l and y_u, so the bracket is not padded inward.
    # Within about 1e-8 of y_u, 1 - H(y, y) drops below rounding and the root is
    # y itself to machine precision; the snap accepts that end.
    b_low = bracketed_root(
        lambda b: log_H(params, b, y),
        seps.b_classical_penalized,
        y,
        xtol=1e-15,
        what="lower free boundary",
        snap=LOG_H_ROUNDING,
    )
    b_up = upper_barrier(params, b_low, y)
    if y - 64 * math.ulp(y) <= b_up <= y:
        # b_up - y shrinks like y_u - y and is lost to rounding in the last few ulps
        b_up = y
    if not b_up >= y:
        raise InconsistentSolution(f"upper barrier {b_up!r} not above y={y!r}")
    return b_low, b_up


@dataclass(frozen=True)
class CriticalSolution:
    params: ModelParams
    y: float
    b_low_fixed: float  # b*_{r+q}
    b_low_free: float
    b_up_free: float
    ee1: float
    ee2: float
    ee3: float
    ee4: float


def critical_solve(params: ModelParams, y: float) -> CriticalSolution:
    b_low, b_up = critical_boundaries(params, y)
    c = e_coeffs(params, b_low, y)
    return CriticalSolution(
        params=params,
        y=float(y),
        b_low_fixed=separators(params).b_classical_penalized,
        b_low_free=b_low,
        b_up_free=b_up,
        ee1=c.e1,
        ee2=c.e2,
        ee3=c.e3,
        ee4=c.e4,
    )


def _pieces(sol: CriticalSolution, x: np.ndarray, order: int, side: str):
    p = sol.params
    classic = classical_solve(p, p.rq)
    lo = exponents(p, p.rq)
    hi = exponents(p, p.r)
    xa = np.minimum(x, sol.b_low_free)
    xb = np.clip(x, sol.b_low_free, sol.y)
    xc = np.clip(x, sol.y, sol.b_up_free)
    first = (classical_value, classical_deriv, classical_second)[order](classic, xa, side)
    second = sol.ee1 * lo.gamma1**order * np.exp(lo.gamma1 * xb) + sol.ee2 * lo.gamma2**order * np.exp(
        lo.gamma2 * xb
    )
    third = sol.ee3 * hi.gamma1**order * np.exp(hi.gamma1 * xc) + sol.ee4 * hi.gamma2**order * np.exp(
        hi.gamma2 * xc
    )
    if order == 0:
        w_top = sol.ee3 * math.exp(hi.gamma1 * sol.b_up_free) + sol.ee4 * math.exp(hi.gamma2 * sol.b_up_free)
        top = w_top + (x - sol.b_up_free)
    elif order == 1:
        top = np.ones_like(x)
    else:
        top = np.zeros_like(x)
    out = np.where(
        _below(x, sol.b_low_free, side),
        first,
        np.where(_below(x, sol.y, side), second, np.where(_below(x, sol.b_up_free, side), third, top)),
    )
    return out[()] if out.ndim == 0 else out


def critical_value(sol: CriticalSolution, x, side: str = "right"):
    return _pieces(sol, _nonneg(x), 0, side)


def critical_deriv(sol: CriticalSolution, x, side: str = "right"):
    return _pieces(sol, _nonneg(x), 1, side)


def critical_second(sol: CriticalSolution, x, side: str = "right"):
    return _pieces(sol, _nonneg(x), 2, side)

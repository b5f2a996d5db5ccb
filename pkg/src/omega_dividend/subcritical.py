"""Single-barrier solution for a distress threshold below y_l.

The value is built from three pieces: penalised exponentials on [0, y),
base-rate exponentials on [y, b*(y)) and a slope-one line beyond b*(y).
The construction is valid for every y > 0; it is optimal only up to y_l.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, _below, _nonneg, basis, delta_fn, eta_fn, exponents


class DegenerateSolution(ArithmeticError):
    """A denominator that is provably non-zero evaluated to (near) zero."""


@dataclass(frozen=True)
class SubcriticalSolution:
    params: ModelParams
    y: float
    barrier: float  # b*(y)
    gap: float  # b*(y) - y
    k1: float
    k2: float
    k3: float
    k4: float


def _check_y(y: float) -> float:
    if not math.isfinite(y) or y <= 0:
        raise ValueError(f"distress threshold must be > 0, got {y!r}")
    return float(y)


def subcritical_barrier(params: ModelParams, y: float) -> tuple[float, float]:
    """Return (b*(y), Delta(y))."""
    y = _check_y(y)
    ex = exponents(params, params.r)
    g1, g2 = ex.gamma1, ex.gamma2
    d, d1, _ = delta_fn(params, y)
    ratio = (d1 - g1 * d) * g2**2 / ((d1 - g2 * d) * g1**2)
    gap = math.log(ratio) / (g1 - g2)
    return y + gap, gap


def subcritical_gap_slope(params: ModelParams, y: float) -> float:
    """Delta'(y) in closed form.

    Differentiating the log-quotient leaves delta*delta'' - delta'^2 in the
    numerator, which equals -(G1-G2)^2 exp((G1+G2) y) for the penalised exponents
    G1, G2. Writing it that way keeps the sign exact where a finite difference
    would round to zero.
    """
    y = _check_y(y)
    ex = exponents(params, params.r)
    pen = exponents(params, params.rq)
    d, d1, _ = delta_fn(params, y)
    num = -(pen.spread**2) * math.exp((pen.gamma1 + pen.gamma2) * y)
    return float(num / ((d1 - ex.gamma1 * d) * (d1 - ex.gamma2 * d)))


def subcritical_coeffs(params: ModelParams, y: float) -> SubcriticalSolution:
    y = _check_y(y)
    b, gap = subcritical_barrier(params, y)
    d, d1, _ = delta_fn(params, y)
    eta, deta = eta_fn(params, y, b)
    psi_y, _, dpsi_y, _, _, _ = basis(params, params.r, y)
    _, _, dpsi_b, dphi_b, _, _ = basis(params, params.r, b)

    den = d * deta - d1 * eta
    scale = abs(d * deta) + abs(d1 * eta)
    if not np.isfinite(den) or abs(den) <= 1e-300 * max(scale, 1.0):
        raise DegenerateSolution(f"delta*eta' - delta'*eta vanished at y={y!r}")

    k1 = (psi_y * deta - dpsi_y * eta) / (dpsi_b * den)
    k3 = (dphi_b * (d * dpsi_y - d1 * psi_y) + den) / (dpsi_b * den)
    k4 = (psi_y * d1 - dpsi_y * d) / den
    return SubcriticalSolution(
        params=params,
        y=y,
        barrier=b,
        gap=gap,
        k1=float(k1),
        k2=float(-k1),
        k3=float(k3),
        k4=float(k4),
    )


def _pieces(sol: SubcriticalSolution, x: np.ndarray, order: int, side: str):
    p = sol.params
    lo = exponents(p, p.rq)
    hi = exponents(p, p.r)
    xl = np.minimum(x, sol.y)
    xm = np.clip(x, sol.y, sol.barrier)
    left = sol.k1 * lo.gamma1**order * np.exp(lo.gamma1 * xl) + sol.k2 * lo.gamma2**order * np.exp(
        lo.gamma2 * xl
    )
    mid = sol.k3 * hi.gamma1**order * np.exp(hi.gamma1 * xm) + sol.k4 * hi.gamma2**order * np.exp(
        hi.gamma2 * xm
    )
    if order == 0:
        top = p.mu / p.r + (x - sol.barrier)
    elif order == 1:
        top = np.ones_like(x)
    else:
        top = np.zeros_like(x)
    out = np.where(_below(x, sol.y, side), left, np.where(_below(x, sol.barrier, side), mid, top))
    return out[()] if out.ndim == 0 else out


def subcritical_value(sol: SubcriticalSolution, x, side: str = "right"):
    return _pieces(sol, _nonneg(x), 0, side)


def subcritical_deriv(sol: SubcriticalSolution, x, side: str = "right"):
    return _pieces(sol, _nonneg(x), 1, side)


def subcritical_second(sol: SubcriticalSolution, x, side: str = "right"):
    return _pieces(sol, _nonneg(x), 2, side)

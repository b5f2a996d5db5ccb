"""Barrier strategies and their exact expected discounted dividends.

The value of any fixed barrier strategy solves the same linear ODEs as the
optimal value, only with the pasting conditions dictated by the barriers
instead of by optimality. That makes it a small dense linear system, which is
handy both as an oracle for the closed forms and for scanning suboptimal
strategies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .critical import CriticalSolution
from .model import ModelParams, exponents
from .value import PiecewiseValue, RegimeSolution, Segment


@dataclass(frozen=True)
class SingleBarrier:
    b: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.b) or self.b <= 0:
            raise ValueError(f"barrier must be finite and > 0, got {self.b!r}")

    def as_dict(self) -> dict:
        return {"kind": "single", "b": self.b}


@dataclass(frozen=True)
class DoubleBarrier:
    """Reflect at ``b2`` until the surplus first falls to ``c1`` or below, then
    pay down to ``b1`` and reflect at ``b1`` from then on."""

    b1: float
    c1: float
    b2: float

    def __post_init__(self) -> None:
        vals = (self.b1, self.c1, self.b2)
        if not all(math.isfinite(v) for v in vals) or not 0 < self.b1 < self.c1 < self.b2:
            raise ValueError(f"need 0 < b1 < c1 < b2, got {vals}")

    def as_dict(self) -> dict:
        return {"kind": "double", "b1": self.b1, "c1": self.c1, "b2": self.b2}


Strategy = Union[SingleBarrier, DoubleBarrier]


def strategy_from_solution(solution: RegimeSolution) -> Strategy:
    d = solution.detail
    if isinstance(d, CriticalSolution):
        return DoubleBarrier(d.b_low_fixed, d.b_low_free, d.b_up_free)
    if len(solution.regions) != 1:
        raise ValueError("cannot derive a strategy from this solution")
    return SingleBarrier(solution.regions[0][0])


def perturbed_strategies(strategy: Strategy, delta: float) -> list[tuple[str, Strategy]]:
    """Every free boundary shifted by -delta and +delta, one at a time.

    Shifts that break the ordering of a double barrier are skipped.
    """
    if isinstance(strategy, SingleBarrier):
        names, levels = ("b",), (strategy.b,)
    else:
        names, levels = ("b1", "c1", "b2"), (strategy.b1, strategy.c1, strategy.b2)
    out = []
    for i, name in enumerate(names):
        for sign in (-1, 1):
            shifted = list(levels)
            shifted[i] += sign * delta
            try:
                st = SingleBarrier(*shifted) if len(shifted) == 1 else DoubleBarrier(*shifted)
            except ValueError:
                continue
            out.append((f"{name}{'+' if sign > 0 else '-'}{delta:g}", st))
    return out


def _rate_tags(y: float, lo: float, hi: float) -> list[tuple[str, float, float]]:
    """Split (lo, hi) at y into pieces tagged with their discount rate."""
    if y <= lo:
        return [("r", lo, hi)]
    if y >= hi:
        return [("r+q", lo, hi)]
    return [("r+q", lo, y), ("r", y, hi)]


def _waiting_segments(
    params: ModelParams, pieces: list[tuple[str, float, float]], start_level: float
) -> list[Segment]:
    """Exponential segments with w(lo)=start_level, C^1 joins and w'(hi)=1."""
    n = len(pieces)
    exs = [exponents(params, params.rate(tag)) for tag, _, _ in pieces]
    a = np.zeros((2 * n, 2 * n))
    rhs = np.zeros(2 * n)
    # row 0: level at the left end (anchored, so the basis equals one there)
    a[0, 0:2] = 1.0
    rhs[0] = start_level
    row = 1
    for i in range(n - 1):
        ex, nxt = exs[i], exs[i + 1]
        width = pieces[i][2] - pieces[i][1]
        e1, e2 = math.exp(ex.gamma1 * width), math.exp(ex.gamma2 * width)
        a[row, 2 * i : 2 * i + 2] = (e1, e2)
        a[row, 2 * i + 2 : 2 * i + 4] = (-1.0, -1.0)
        a[row + 1, 2 * i : 2 * i + 2] = (ex.gamma1 * e1, ex.gamma2 * e2)
        a[row + 1, 2 * i + 2 : 2 * i + 4] = (-nxt.gamma1, -nxt.gamma2)
        row += 2
    ex = exs[-1]
    width = pieces[-1][2] - pieces[-1][1]
    a[row, 2 * n - 2 :] = (ex.gamma1 * math.exp(ex.gamma1 * width), ex.gamma2 * math.exp(ex.gamma2 * width))
    rhs[row] = 1.0
    coef = np.linalg.solve(a, rhs)
    return [
        Segment("exp", lo, hi, lo, float(coef[2 * i]), float(coef[2 * i + 1]), tag)
        for i, (tag, lo, hi) in enumerate(pieces)
    ]


def _affine(params: ModelParams, prev: Segment, lo: float, hi: float) -> Segment:
    level = float(prev.evaluate(params, np.asarray(lo), 0))
    return Segment("affine", lo, hi, lo, level, 1.0)


def strategy_value(params: ModelParams, y: float, strategy: Strategy) -> PiecewiseValue:
    """Exact J(x; y, strategy) for every x >= 0."""
    if not math.isfinite(y) or y < 0:
        raise ValueError(f"distress threshold must be finite and >= 0, got {y!r}")
    if isinstance(strategy, SingleBarrier):
        lower = _waiting_segments(params, _rate_tags(y, 0.0, strategy.b), 0.0)
        return PiecewiseValue(params, tuple(lower) + (_affine(params, lower[-1], strategy.b, math.inf),))
    if isinstance(strategy, DoubleBarrier):
        lower = _waiting_segments(params, _rate_tags(y, 0.0, strategy.b1), 0.0)
        ramp = _affine(params, lower[-1], strategy.b1, strategy.c1)
        level = ramp.coeff1 + (strategy.c1 - strategy.b1)
        upper = _waiting_segments(params, _rate_tags(y, strategy.c1, strategy.b2), level)
        top = _affine(params, upper[-1], strategy.b2, math.inf)
        return PiecewiseValue(params, tuple(lower) + (ramp,) + tuple(upper) + (top,))
    raise TypeError(f"unsupported strategy {strategy!r}")


def best_single_barrier(params: ModelParams, y: float, x0: float, lo: float, hi: float, n: int = 50):
    """Scan ``n`` equally spaced barriers on [lo, hi] and return (barrier, J(x0))."""
    if n < 2 or not 0 < lo < hi:
        raise ValueError("need n >= 2 and 0 < lo < hi")
    best = None
    for b in np.linspace(lo, hi, n):
        score = float(strategy_value(params, y, SingleBarrier(float(b))).value(x0))
        if best is None or score > best[1]:
            best = (float(b), score)
    return best

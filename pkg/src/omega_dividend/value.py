"""Regime dispatch, piecewise value representation and serialisation.

Every value function in the package is a finite list of segments, each either
an exponential pair ``c1*exp(g1*(x-a)) + c2*exp(g2*(x-a))`` at one of the two
discount rates, or an affine piece ``c1 + c2*(x-a)``. Anchoring each segment at
its left breakpoint keeps the coefficients of order one.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .critical import CriticalSolution, critical_solve
from .model import ClassicalSolution, ModelParams, _nonneg, classical_solve, exponents
from .regimes import Regime, RegimeSeparators, classify, separators
from .subcritical import SubcriticalSolution, subcritical_coeffs

SCHEMA = "omega-dividend/v1"
CANDIDATES = ("auto", "classical-r", "classical-rq", "subcritical")


@dataclass(frozen=True)
class Segment:
    kind: str  # "exp" or "affine"
    lo: float
    hi: float  # math.inf for the last segment
    anchor: float
    coeff1: float
    coeff2: float
    rate_tag: str | None = None  # "r" or "r+q" for exponential segments

    def __post_init__(self) -> None:
        if self.kind not in ("exp", "affine"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.kind == "exp" and self.rate_tag not in ("r", "r+q"):
            raise ValueError(f"exponential segment needs a rate tag, got {self.rate_tag!r}")

    def evaluate(self, params: ModelParams, x: np.ndarray, order: int) -> np.ndarray:
        if self.kind == "affine":
            if order == 0:
                return self.coeff1 + self.coeff2 * (x - self.anchor)
            return np.full_like(x, self.coeff2 if order == 1 else 0.0)
        ex = exponents(params, params.rate(self.rate_tag))
        u = x - self.anchor
        return self.coeff1 * ex.gamma1**order * np.exp(ex.gamma1 * u) + self.coeff2 * ex.gamma2**order * np.exp(
            ex.gamma2 * u
        )

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rate_tag": self.rate_tag,
            "lo": self.lo,
            "hi": None if math.isinf(self.hi) else self.hi,
            "anchor": self.anchor,
            "coeff1": self.coeff1,
            "coeff2": self.coeff2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Segment":
        return cls(
            kind=d["kind"],
            lo=float(d["lo"]),
            hi=math.inf if d["hi"] is None else float(d["hi"]),
            anchor=float(d["anchor"]),
            coeff1=float(d["coeff1"]),
            coeff2=float(d["coeff2"]),
            rate_tag=d.get("rate_tag"),
        )


@dataclass(frozen=True)
class PiecewiseValue:
    params: ModelParams
    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        segs = self.segments
        if not segs or segs[0].lo != 0.0 or not math.isinf(segs[-1].hi):
            raise ValueError("segments must cover [0, inf)")
        for a, b in zip(segs, segs[1:]):
            if a.hi != b.lo or not a.lo < a.hi:
                raise ValueError("segments must be contiguous and non-empty")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(s.lo for s in self.segments[1:])

    def _eval(self, x, order: int, side: str):
        x = _nonneg(x)
        if side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        idx = np.searchsorted(np.asarray(self.breakpoints), x, side="right" if side == "right" else "left")
        out = np.empty_like(x)
        for i, seg in enumerate(self.segments):
            mask = idx == i
            if np.any(mask):
                out[mask] = seg.evaluate(self.params, x[mask], order)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite value; surplus grid too far out for these parameters")
        return out[()] if out.ndim == 0 else out

    def value(self, x, side: str = "right"):
        return self._eval(x, 0, side)

    def deriv(self, x, side: str = "right"):
        return self._eval(x, 1, side)

    def second(self, x, side: str = "right"):
        return self._eval(x, 2, side)


def _exp_segment(params, rate_tag, lo, hi, c1, c2) -> Segment:
    """Re-anchor raw coefficients of exp(g*x) at the segment's left end."""
    ex = exponents(params, params.rate(rate_tag))
    return Segment(
        kind="exp",
        lo=lo,
        hi=hi,
        anchor=lo,
        coeff1=float(c1 * math.exp(ex.gamma1 * lo)),
        coeff2=float(c2 * math.exp(ex.gamma2 * lo)),
        rate_tag=rate_tag,
    )


def _affine_after(params: ModelParams, prev: Segment, at: float, slope: float = 1.0) -> Segment:
    level = float(prev.evaluate(params, np.asarray(at), 0))
    return Segment(kind="affine", lo=at, hi=math.inf, anchor=at, coeff1=level, coeff2=slope)


def _classical_pieces(params: ModelParams, sol: ClassicalSolution) -> PiecewiseValue:
    tag = "r" if sol.rho == params.r else "r+q"
    first = _exp_segment(params, tag, 0.0, sol.barrier, 1.0 / sol.normalizer, -1.0 / sol.normalizer)
    return PiecewiseValue(params, (first, _affine_after(params, first, sol.barrier)))


def _subcritical_pieces(params: ModelParams, sol: SubcriticalSolution) -> PiecewiseValue:
    a = _exp_segment(params, "r+q", 0.0, sol.y, sol.k1, sol.k2)
    b = _exp_segment(params, "r", sol.y, sol.barrier, sol.k3, sol.k4)
    return PiecewiseValue(params, (a, b, _affine_after(params, b, sol.barrier)))


def _critical_pieces(params: ModelParams, sol: CriticalSolution) -> PiecewiseValue:
    cl = classical_solve(params, params.rq)
    a = _exp_segment(params, "r+q", 0.0, sol.b_low_fixed, 1.0 / cl.normalizer, -1.0 / cl.normalizer)
    lin = Segment(
        kind="affine",
        lo=sol.b_low_fixed,
        hi=sol.b_low_free,
        anchor=sol.b_low_fixed,
        coeff1=params.mu / params.rq,
        coeff2=1.0,
    )
    b = _exp_segment(params, "r+q", sol.b_low_free, sol.y, sol.ee1, sol.ee2)
    c = _exp_segment(params, "r", sol.y, sol.b_up_free, sol.ee3, sol.ee4)
    # near y_l or y_u a free boundary can coincide with its neighbour in floating point
    segs = tuple(s for s in (a, lin, b, c) if s.lo < s.hi)
    return PiecewiseValue(params, segs + (_affine_after(params, segs[-1], sol.b_up_free),))


@dataclass(frozen=True)
class RegimeSolution:
    params: ModelParams
    y: float
    regime: Regime
    separators: RegimeSeparators
    pieces: PiecewiseValue
    regions: tuple[tuple[float, float], ...]  # action intervals, closed, hi may be inf
    candidate: str = "auto"
    detail: Any = field(default=None, compare=False)

    @property
    def waiting_exception_points(self) -> tuple[float, ...]:
        """Breakpoints where the second derivative legitimately jumps."""
        if isinstance(self.detail, CriticalSolution):
            return (self.detail.b_low_free, self.y)
        if isinstance(self.detail, SubcriticalSolution):
            return (self.y,)
        return ()


def candidate(params: ModelParams, y: float, kind: str = "auto") -> RegimeSolution:
    """Build the optimal solution (``auto``) or a named single-barrier candidate."""
    if not math.isfinite(y) or y < 0:
        raise ValueError(f"distress threshold must be finite and >= 0, got {y!r}")
    if kind not in CANDIDATES:
        raise ValueError(f"unknown candidate {kind!r}; expected one of {CANDIDATES}")
    seps = separators(params)
    regime = classify(params, y, seps)
    if kind == "auto":
        kind_eff = {
            Regime.CLASSICAL: "classical-r",
            Regime.SUPERCRITICAL: "classical-rq",
            Regime.SUBCRITICAL: "subcritical",
            Regime.CRITICAL: "critical",
        }[regime]
    else:
        kind_eff = kind

    if kind_eff in ("classical-r", "classical-rq"):
        sol = classical_solve(params, params.r if kind_eff == "classical-r" else params.rq)
    elif kind_eff == "subcritical":
        if y == 0:
            raise ValueError("the subcritical construction needs y > 0")
        sol = subcritical_coeffs(params, y)
    else:
        sol = critical_solve(params, y)
    return from_detail(params, y, sol, kind)


def from_detail(params: ModelParams, y: float, sol, label: str = "custom") -> RegimeSolution:
    """Wrap a classical, subcritical or critical solution object (possibly hand-edited)."""
    if isinstance(sol, ClassicalSolution):
        pieces = _classical_pieces(params, sol)
        regions = ((sol.barrier, math.inf),)
    elif isinstance(sol, SubcriticalSolution):
        pieces = _subcritical_pieces(params, sol)
        regions = ((sol.barrier, math.inf),)
    elif isinstance(sol, CriticalSolution):
        pieces = _critical_pieces(params, sol)
        regions = ((sol.b_low_fixed, sol.b_low_free), (sol.b_up_free, math.inf))
    else:
        raise TypeError(f"unsupported solution object {type(sol).__name__}")
    seps = separators(params)
    return RegimeSolution(
        params=params,
        y=float(y),
        regime=classify(params, y, seps),
        separators=seps,
        pieces=pieces,
        regions=regions,
        candidate=label,
        detail=sol,
    )


def solve(params: ModelParams, y: float) -> RegimeSolution:
    return candidate(params, y, "auto")


def value_at(solution: RegimeSolution, x, side: str = "right"):
    return solution.pieces.value(x, side)


def deriv_at(solution: RegimeSolution, x, side: str = "right"):
    return solution.pieces.deriv(x, side)


def second_at(solution: RegimeSolution, x, side: str = "right"):
    return solution.pieces.second(x, side)


def boundaries(solution: RegimeSolution) -> dict:
    d = solution.detail
    if isinstance(d, CriticalSolution):
        return {"b_low_fixed": d.b_low_fixed, "b_low_free": d.b_low_free, "b_up_free": d.b_up_free}
    return {"barrier": solution.regions[0][0]}


# ---------------------------------------------------------------- serialisation


def to_document(solution: RegimeSolution) -> dict:
    return {
        "schema": SCHEMA,
        "params": solution.params.as_dict(),
        "y": solution.y,
        "regime": solution.regime.value,
        "candidate": solution.candidate,
        "separators": solution.separators.as_dict(),
        "boundaries": boundaries(solution),
        "breakpoints": list(solution.pieces.breakpoints),
        "segments": [s.as_dict() for s in solution.pieces.segments],
        "action_intervals": [[lo, None if math.isinf(hi) else hi] for lo, hi in solution.regions],
    }


def from_document(doc: dict) -> RegimeSolution:
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unsupported schema {doc.get('schema')!r}")
    params = ModelParams(**doc["params"])
    segs = tuple(Segment.from_dict(s) for s in doc["segments"])
    return RegimeSolution(
        params=params,
        y=float(doc["y"]),
        regime=Regime(doc["regime"]),
        separators=RegimeSeparators(**doc["separators"]),
        pieces=PiecewiseValue(params, segs),
        regions=tuple((float(lo), math.inf if hi is None else float(hi)) for lo, hi in doc["action_intervals"]),
        candidate=doc.get("candidate", "auto"),
    )


def dumps(solution: RegimeSolution) -> str:
    # repr of a Python float is the shortest round-tripping form (<= 17 significant digits)
    return json.dumps(to_document(solution), indent=2)


def loads(text: str) -> RegimeSolution:
    return from_document(json.loads(text))


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepTable:
    rows: list[dict]  # y, x, V, dV, regime
    curves: list[dict]  # y, regime, b_low_fixed, b_low_free, b_up_free

    def rows_csv(self) -> str:
        return _to_csv(self.rows, ("y", "x", "V", "dV", "regime"))

    def curves_csv(self) -> str:
        return _to_csv(self.curves, ("y", "regime", "b_low_fixed", "b_low_free", "b_up_free"))


def _to_csv(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def boundary_curve(solution: RegimeSolution) -> dict:
    """Action-region edges as (lower barrier, lower-interval top, upper barrier).

    For single-barrier regimes the lower interval is empty and both lower
    columns are left blank.
    """
    d = solution.detail
    if isinstance(d, CriticalSolution):
        lo_fixed, lo_free, up = d.b_low_fixed, d.b_low_free, d.b_up_free
    else:
        lo_fixed, lo_free, up = None, None, solution.regions[0][0]
    return {
        "y": solution.y,
        "regime": solution.regime.value,
        "b_low_fixed": lo_fixed,
        "b_low_free": lo_free,
        "b_up_free": up,
    }


def sweep(params: ModelParams, y_grid, x_grid) -> SweepTable:
    ys = np.asarray(y_grid, dtype=float)
    xs = np.asarray(x_grid, dtype=float)
    for name, g in (("y", ys), ("x", xs)):
        if g.ndim != 1 or g.size == 0:
            raise ValueError(f"{name} grid must be a non-empty 1-d sequence")
        if np.any(~np.isfinite(g)) or np.any(g < 0) or np.any(np.diff(g) < 0):
            raise ValueError(f"{name} grid must be finite, non-negative and sorted")
    rows: list[dict] = []
    curves: list[dict] = []
    for y in ys:
        sol = solve(params, float(y))
        v = value_at(sol, xs)
        dv = deriv_at(sol, xs)
        tag = sol.regime.value
        rows.extend(
            {"y": float(y), "x": float(x), "V": float(a), "dV": float(b), "regime": tag}
            for x, a, b in zip(xs, v, dv)
        )
        curves.append(boundary_curve(sol))
    return SweepTable(rows=rows, curves=curves)

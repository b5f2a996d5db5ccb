"""Grid-based certificate for a candidate value function.

A candidate V is optimal when
  (I)  V' >= 1 everywhere, and
  (II) 0.5 sigma^2 V'' + mu V' - (r + q 1{x<y}) V <= 0 away from kinks,
with equality wherever no dividends are paid. The checks below evaluate these
with the closed-form segment derivatives on dense grids, plus pasting checks at
the breakpoints and a suite of structural properties of the building blocks.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .critical import H_fn, critical_boundaries, e_coeffs
from .model import ModelParams, delta_fn, exponents
from .regimes import separators
from .subcritical import subcritical_barrier, subcritical_coeffs, subcritical_gap_slope
from .value import RegimeSolution

DEFAULT_TOL = 1e-9
BAND = 1e-6  # half-width of the excluded band around breakpoints
DENSE = 1e-3  # log-densified zone next to breakpoints


@dataclass(frozen=True)
class CheckRecord:
    name: str
    grid_size: int
    worst_residual: float
    worst_location: float | None
    passed: bool
    tolerance: float
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class VerifyReport:
    params: ModelParams
    y: float
    regime: str
    candidate: str
    checks: tuple[CheckRecord, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "y": self.y,
            "regime": self.regime,
            "candidate": self.candidate,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
        }


# ---------------------------------------------------------------- grids


def kink_points(solution: RegimeSolution) -> list[float]:
    """Breakpoints of the candidate plus y, where the discount rate jumps."""
    pts = set(solution.pieces.breakpoints)
    if solution.y > 0:
        pts.add(solution.y)
    return sorted(pts)


def default_x_max(solution: RegimeSolution) -> float:
    return 1.5 * max(kink_points(solution) + [1.0]) + 1.0


def check_grid(solution: RegimeSolution, x_max: float | None = None, n: int = 2001) -> np.ndarray:
    """Points in (0, x_max] with ``n`` per segment, avoiding a band around every kink."""
    x_max = default_x_max(solution) if x_max is None else float(x_max)
    edges = [0.0] + [p for p in kink_points(solution) if 0 < p < x_max] + [x_max]
    dense = np.geomspace(BAND, DENSE, 30)[1:]
    parts = []
    for lo, hi in zip(edges, edges[1:]):
        width = hi - lo
        if width <= 4 * BAND:
            continue
        parts.append(np.linspace(lo + BAND, hi - BAND, n)[1:-1])
        d = dense[dense < width / 2]
        parts.append(lo + d)
        if hi != x_max:
            parts.append(hi - d)
    parts.append(np.array([x_max]))
    return np.unique(np.concatenate(parts))


# ---------------------------------------------------------------- individual checks


def check_gradient(solution: RegimeSolution, grid: np.ndarray, tol: float = DEFAULT_TOL) -> CheckRecord:
    slope = solution.pieces.deriv(grid)
    excess = slope - 1.0
    i = int(np.argmin(excess))
    return CheckRecord(
        name="gradient",
        grid_size=int(grid.size),
        worst_residual=float(excess[i]),
        worst_location=float(grid[i]),
        passed=bool(excess[i] >= -tol),
        tolerance=tol,
    )


def generator_residual(solution: RegimeSolution, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw residual and its scale 0.5 sigma^2 |V''| + mu |V'| + rho |V|."""
    p = solution.params
    pv = solution.pieces
    v, dv, d2v = pv.value(x), pv.deriv(x), pv.second(x)
    rho = p.r + p.q * (x < solution.y)
    a, b, c = 0.5 * p.sigma**2 * d2v, p.mu * dv, rho * v
    return a + b - c, np.abs(a) + np.abs(b) + np.abs(c)


def _waiting_mask(solution: RegimeSolution, x: np.ndarray) -> np.ndarray:
    mask = np.zeros(x.shape, dtype=bool)
    for seg in solution.pieces.segments:
        if seg.kind == "exp":
            mask |= (x > seg.lo) & (x < seg.hi)
    return mask


def check_generator(solution: RegimeSolution, grid: np.ndarray, tol: float = DEFAULT_TOL) -> CheckRecord:
    res, scale = generator_residual(solution, grid)
    rel = res / np.maximum(scale, np.finfo(float).tiny)
    i = int(np.argmax(rel))
    waiting = _waiting_mask(solution, grid)
    if np.any(waiting):
        eq = np.abs(rel[waiting])
        j = int(np.argmax(eq))
        eq_worst, eq_at = float(eq[j]), float(grid[waiting][j])
    else:
        eq_worst, eq_at = 0.0, None
    return CheckRecord(
        name="generator",
        grid_size=int(grid.size),
        worst_residual=float(rel[i]),
        worst_location=float(grid[i]),
        passed=bool(rel[i] <= tol and eq_worst <= tol),
        tolerance=tol,
        detail={"waiting_equality_worst": eq_worst, "waiting_equality_location": eq_at},
    )


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def check_regularity(solution: RegimeSolution, tol: float = DEFAULT_TOL) -> CheckRecord:
    """C^1 at every breakpoint; C^2 except at the points where theory allows a jump,
    where the jump must match the value forced by the two ODEs."""
    p = solution.params
    pv = solution.pieces
    exceptions = solution.waiting_exception_points
    items: list[dict] = []

    def note(label: str, at: float, err: float) -> None:
        items.append({"check": label, "x": at, "error": err})

    note("value_at_zero", 0.0, abs(float(pv.value(0.0))))
    for bp in pv.breakpoints:
        note("value", bp, _rel(float(pv.value(bp, "left")), float(pv.value(bp, "right"))))
        note("slope", bp, _rel(float(pv.deriv(bp, "left")), float(pv.deriv(bp, "right"))))
        left2, right2 = float(pv.second(bp, "left")), float(pv.second(bp, "right"))
        if not any(math.isclose(bp, e, rel_tol=0, abs_tol=1e-14) for e in exceptions):
            note("second", bp, _rel(left2, right2))
            continue
        # allowed jump: each side must carry the curvature its own piece forces,
        # zero on a payout line and the ODE value at the local discount rate otherwise
        v, dv = float(pv.value(bp)), float(pv.deriv(bp))
        rates = {"left": p.rq if bp <= solution.y else p.r, "right": p.rq if bp < solution.y else p.r}
        for side, got in (("left", left2), ("right", right2)):
            seg = _segment_at(pv, bp, side)
            expected = 0.0 if seg.kind == "affine" else 2.0 / p.sigma**2 * (rates[side] * v - p.mu * dv)
            note(f"second_{side}_at_jump", bp, _rel(got, expected))
    worst = max(items, key=lambda it: it["error"], default={"x": None, "error": 0.0})
    return CheckRecord(
        name="regularity",
        grid_size=len(pv.breakpoints),
        worst_residual=worst["error"],
        worst_location=worst["x"],
        passed=bool(worst["error"] <= tol),
        tolerance=tol,
        detail={"items": items},
    )


def _segment_at(pv, x: float, side: str):
    idx = int(np.searchsorted(np.asarray(pv.breakpoints), x, side="right" if side == "right" else "left"))
    return pv.segments[idx]


def check_finite_difference(
    solution: RegimeSolution, grid: np.ndarray, step: float = 1e-6, tol: float = 1e-4
) -> CheckRecord:
    """Secondary check that the closed-form slope matches a central difference."""
    kinks = np.asarray(kink_points(solution))
    far = np.ones(grid.shape, dtype=bool)
    for k in kinks:
        far &= np.abs(grid - k) > 10 * step
    x = grid[far & (grid > 10 * step)]
    fd = (solution.pieces.value(x + step) - solution.pieces.value(x - step)) / (2 * step)
    err = np.abs(fd - solution.pieces.deriv(x)) / np.maximum(1.0, np.abs(fd))
    i = int(np.argmax(err))
    return CheckRecord(
        name="finite_difference",
        grid_size=int(x.size),
        worst_residual=float(err[i]),
        worst_location=float(x[i]),
        passed=bool(err[i] <= tol),
        tolerance=tol,
    )


# ---------------------------------------------------------------- structural properties


def _record(name: str, values: np.ndarray, at: np.ndarray, ok: np.ndarray, tol: float = 0.0) -> CheckRecord:
    """Boolean property check; ``values`` is the quantity reported for the worst point."""
    bad = ~ok
    i = int(np.argmax(bad)) if np.any(bad) else int(np.argmin(np.abs(values)))
    return CheckRecord(
        name=name,
        grid_size=int(np.size(ok)),
        worst_residual=float(np.ravel(values)[i]),
        worst_location=float(np.ravel(at)[i]),
        passed=bool(np.all(ok)),
        tolerance=tol,
    )


def _strictly_increasing(f: Callable[[float], float], ys: np.ndarray):
    vals = np.array([f(float(v)) for v in ys])
    diffs = np.diff(vals)
    return diffs, ys[1:], diffs > 0


def check_appendix_properties(params: ModelParams, n: int = 100, tol: float = DEFAULT_TOL) -> list[CheckRecord]:
    seps = separators(params)
    bq, br, yl, yu = seps.b_classical_penalized, seps.b_classical_base, seps.y_lower, seps.y_upper
    ys = np.linspace(yu / n, yu, n)
    recs: list[CheckRecord] = []

    # C.1(i): b*_{r+q} < b*_r < b*(y)
    bstar = np.array([subcritical_barrier(params, float(v))[0] for v in ys])
    recs.append(_record("C1_i_barrier_order", bstar - br, ys, (bq < br) & (br < bstar)))

    # C.1(ii): delta'' changes sign exactly at b*_{r+q}
    xs = np.linspace(0.0, 2.0 * yu, 2 * n + 1)
    xs = xs[np.abs(xs - bq) > 1e-9]
    d2 = delta_fn(params, xs)[2]
    d2_at = delta_fn(params, bq)[2]
    scale = abs(float(delta_fn(params, bq)[1])) * exponents(params, params.rq).spread
    sign_ok = np.where(xs > bq, d2 > 0, d2 < 0)
    rec = _record("C1_ii_delta_inflection", d2, xs, sign_ok & (abs(float(d2_at)) <= 1e-10 * scale))
    recs.append(rec)

    # C.1(iii)
    d1_bq = float(delta_fn(params, bq)[1])
    xs3 = np.linspace(bq, 2.0 * yu, n + 1)[1:]
    ratio = delta_fn(params, xs3)[1] / d1_bq
    d_yu, d1_yu, _ = (float(v) for v in delta_fn(params, yu))
    bounds_ok = d_yu / d1_yu < params.mu / params.r < d_yu / d1_bq
    recs.append(_record("C1_iii_delta_ratios", ratio - 1.0, xs3, (ratio > 1.0) & bounds_ok))

    # C.1(iv): Delta(y_u) > 0 and -1 < Delta' < 0; closed-form slope, with a
    # central difference as a cross-check wherever it can resolve the value
    h = 1e-5
    yd = ys[ys > 2 * h]
    gap = lambda v: subcritical_barrier(params, v)[1]  # noqa: E731
    slope = np.array([subcritical_gap_slope(params, float(v)) for v in yd])
    fd = np.array([(gap(float(v) + h) - gap(float(v) - h)) / (2 * h) for v in yd])
    resolvable = np.abs(slope) > 1e-4
    fd_ok = ~resolvable | (np.abs(fd - slope) <= 1e-4 * np.maximum(1.0, np.abs(slope)))
    recs.append(
        _record("C1_iv_gap_slope", slope, yd, (slope > -1.0) & (slope < 0.0) & fd_ok & (gap(yu) > 0))
    )

    # C.1(v), (vi): coefficient signs, alternative K1 form, K1 decreasing above b*_{r+q}
    sols = [subcritical_coeffs(params, float(v)) for v in ys]
    k3 = np.array([s.k3 for s in sols])
    k4 = np.array([s.k4 for s in sols])
    recs.append(_record("C1_v_k3_k4_signs", np.minimum(k3, -k4), ys, (k3 > 0) & (k4 < 0)))
    k1 = np.array([s.k1 for s in sols])
    alt = np.array([_k1_alternative(params, float(v)) for v in ys])
    rel = np.abs(k1 - alt) / np.abs(alt)
    upper = ys > bq
    k1_dec = np.ones(ys.shape, dtype=bool)
    k1_dec[upper] = np.concatenate([[True], np.diff(k1[upper]) < 0])
    end_ok = subcritical_coeffs(params, yu).k1 * d1_bq < 1.0
    recs.append(
        _record("C1_vi_k1_form", rel, ys, (k1 > 0) & (rel <= 1e-8) & k1_dec & end_ok, tol=1e-8)
    )

    # D.1: e3 > 0 > e4 on the triangle b*_{r+q} <= b <= y, y in [y_l, y_u]
    m = max(10, n // 10)
    e_min, e_at, e_ok = [], [], []
    for yv in np.linspace(yl, yu, m):
        for bv in np.linspace(bq, yv, m):
            c = e_coeffs(params, float(bv), float(yv))
            e_min.append(min(c.e3, -c.e4))
            e_at.append(yv)
            e_ok.append(c.e3 > 0 and c.e4 < 0)
    recs.append(_record("D1_e3_e4_signs", np.array(e_min), np.array(e_at), np.array(e_ok)))

    # D.2(i), (ii): H = 1 at the two corners
    h_i = H_fn(params, bq, yl) - 1.0
    recs.append(_record("D2_i_H_at_lower_corner", np.array([h_i]), np.array([yl]), np.array([abs(h_i) <= tol]), tol))
    h_ii = H_fn(params, yu, yu) - 1.0
    recs.append(_record("D2_ii_H_at_upper_corner", np.array([h_ii]), np.array([yu]), np.array([abs(h_ii) <= tol]), tol))

    # D.2(iii), (iv): monotone in y
    yc = np.linspace(yl, yu, n)
    diffs, at, ok = _strictly_increasing(lambda v: H_fn(params, bq, v), yc)
    recs.append(_record("D2_iii_H_lower_increasing", diffs, at, ok))
    diffs, at, ok = _strictly_increasing(lambda v: H_fn(params, v, v), yc)
    recs.append(_record("D2_iv_H_diagonal_increasing", diffs, at, ok))

    return recs


def _k1_alternative(params: ModelParams, y: float) -> float:
    ex = exponents(params, params.r)
    g1, g2 = ex.gamma1, ex.gamma2
    d, d1, _ = (float(v) for v in delta_fn(params, y))
    base = (g2**2 / g1**2) * (d1 - g1 * d) / (d1 - g2 * d)
    return 1.0 / (base ** (g1 / (g1 - g2)) * (g1 / -g2 * d1 + g1 * d))


def transition_gaps(params: ModelParams, eps: float) -> dict:
    """Distances of the critical boundaries from their limits at y_l + eps and y_u - eps."""
    seps = separators(params)
    lo_low, lo_up = critical_boundaries(params, seps.y_lower + eps)
    b_at_yl = subcritical_barrier(params, seps.y_lower)[0]
    y_hi = seps.y_upper - eps
    hi_low, hi_up = critical_boundaries(params, y_hi)
    return {
        "lower_free_near_yl": abs(lo_low - seps.b_classical_penalized),
        "upper_free_near_yl": abs(lo_up - b_at_yl),
        "lower_free_near_yu": abs(hi_low - y_hi),
        "upper_free_near_yu": abs(hi_up - y_hi),
    }


def check_transition_limits(params: ModelParams, eps_list=(1e-3, 1e-4, 1e-5), bound: float = 0.05) -> CheckRecord:
    gaps = [transition_gaps(params, e) for e in eps_list]
    keys = list(gaps[0])
    first_ok = all(gaps[0][k] <= bound for k in keys)
    shrink_ok = all(gaps[i + 1][k] < gaps[i][k] for i in range(len(gaps) - 1) for k in keys)
    worst = max(gaps[0].values())
    return CheckRecord(
        name="D3_transition_limits",
        grid_size=len(eps_list),
        worst_residual=worst,
        worst_location=eps_list[0],
        passed=bool(first_ok and shrink_ok),
        tolerance=bound,
        detail={"eps": list(eps_list), "gaps": gaps},
    )


# ---------------------------------------------------------------- driver


def verify(
    solution: RegimeSolution,
    *,
    tol: float = DEFAULT_TOL,
    x_max: float | None = None,
    grid_n: int = 2001,
    appendix: bool = False,
    transitions: bool = False,
) -> VerifyReport:
    grid = check_grid(solution, x_max, grid_n)
    checks = [
        check_gradient(solution, grid, tol),
        check_generator(solution, grid, tol),
        check_regularity(solution, tol),
        check_finite_difference(solution, grid),
    ]
    if appendix:
        checks.extend(check_appendix_properties(solution.params, tol=tol))
    if transitions:
        checks.append(check_transition_limits(solution.params))
    return VerifyReport(
        params=solution.params,
        y=solution.y,
        regime=solution.regime.value,
        candidate=solution.candidate,
        checks=tuple(checks),
    )

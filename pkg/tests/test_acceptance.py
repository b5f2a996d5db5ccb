"""Acceptance criteria, each at its stated tolerance and runtime bound.

Every test prints exactly one ``ACCEPTANCE <n> PASS|FAIL`` line. The two Monte
Carlo criteria time a small pilot batch first; when the projected cost of the
full run exceeds the stated budget they fail with that projection instead of
spending a day computing. Set OMEGA_DIVIDEND_FULL_MC=1 to force the full run.
"""

import os
import time

import numpy as np
import pytest

from omega_dividend import REFERENCE_PARAMS, ModelParams, separators
from omega_dividend.cli import main as cli_main
from omega_dividend.model import classical_solve, classical_value
from omega_dividend.simulate import PathConfig, config_for_tolerance, joint_z, mc_value, project_runtime, z_score
from omega_dividend.strategy import (
    DoubleBarrier,
    SingleBarrier,
    best_single_barrier,
    perturbed_strategies,
    strategy_from_solution,
    strategy_value,
)
from omega_dividend.subcritical import subcritical_barrier
from omega_dividend.value import solve, value_at
from omega_dividend.verify import check_appendix_properties, check_transition_limits

P = REFERENCE_PARAMS
FULL_MC = os.environ.get("OMEGA_DIVIDEND_FULL_MC") == "1"
MC_BUDGET = 600.0
MC_DT = 1e-4
MC_PATHS = 200_000
MC_SEED = 20240101
MC_X0 = (0.5, 1.0, 2.0)
# truncation bias well under one standard error (about 3e-3 at these sizes)
MC_TOL = 1e-3


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def _fresh_separators():
    separators.cache_clear()
    return separators(P)


def _ref_ys(seps):
    yl, yu = seps.y_lower, seps.y_upper
    return {"subcritical": 0.9 * yl, "critical": 0.9 * yl + 0.1 * yu, "supercritical": 1.001 * yu}


def test_criterion_01_separators(report):
    t0 = time.perf_counter()
    seps = _fresh_separators()
    dt = time.perf_counter() - t0
    ok = abs(seps.y_lower - 1.7461) <= 5e-4 and abs(seps.y_upper - 4.4292) <= 5e-4 and dt < 0.1
    report(1, ok, f"y_l={seps.y_lower:.6f} y_u={seps.y_upper:.6f} ({dt:.3g} s, limit 0.1 s)")


def test_criterion_02_subcritical_barrier(report):
    t0 = time.perf_counter()
    seps = _fresh_separators()
    b, _ = subcritical_barrier(P, 0.9 * seps.y_lower)
    dt = time.perf_counter() - t0
    report(2, abs(b - 1.8717) <= 5e-4 and dt < 0.1, f"b*(0.9 y_l)={b:.6f} ({dt:.3g} s, limit 0.1 s)")


def test_criterion_03_critical_boundaries(report):
    t0 = time.perf_counter()
    seps = _fresh_separators()
    sol = solve(P, 0.9 * seps.y_lower + 0.1 * seps.y_upper)
    dt = time.perf_counter() - t0
    (a, b), (c, _) = sol.regions
    errs = [abs(a - 0.2626), abs(b - 1.1394), abs(c - 2.3147)]
    ok = max(errs) <= 5e-4 and dt < 0.5
    report(3, ok, f"[{a:.6f}, {b:.6f}] U [{c:.6f}, inf) max err {max(errs):.2g} ({dt:.3g} s, limit 0.5 s)")


def test_criterion_04_supercritical_barrier(report):
    t0 = time.perf_counter()
    seps = _fresh_separators()
    sol = solve(P, 1.001 * seps.y_upper)
    dt = time.perf_counter() - t0
    b = sol.regions[0][0]
    ok = sol.regime.value == "supercritical" and abs(b - 0.2626) <= 5e-4 and dt < 0.1
    report(4, ok, f"b*_(r+q)={b:.6f} ({dt:.3g} s, limit 0.1 s)")


def test_criterion_05_hjb_certificate(report, capsys):
    seps = separators(P)
    ys = _ref_ys(seps)
    t0 = time.perf_counter()
    codes = {}
    for name, y in ys.items():
        codes[f"optimal@{name}"] = cli_main(["verify", "--y", repr(y)])
    wrong = {
        "classical-r@subcritical": ("classical-r", ys["subcritical"]),
        "classical-rq@critical": ("classical-rq", ys["critical"]),
        "subcritical@critical": ("subcritical", ys["critical"]),
    }
    for label, (kind, y) in wrong.items():
        codes[label] = cli_main(["verify", "--candidate", kind, "--y", repr(y)])
    dt = time.perf_counter() - t0
    capsys.readouterr()
    passes = [codes[f"optimal@{n}"] == 0 for n in ys]
    rejects = [codes[label] == 1 for label in wrong]
    ok = all(passes) and all(rejects) and dt < 5.0
    report(5, ok, f"optimal certified {sum(passes)}/3, wrong rejected {sum(rejects)}/3 ({dt:.3g} s, limit 5 s)")


def _mc_config(estimator: str, x_max: float) -> PathConfig:
    return config_for_tolerance(P, x_max, MC_TOL, dt=MC_DT, seed=MC_SEED, n_paths=MC_PATHS, estimator=estimator)


def _projected_cost(jobs, pilot_paths: int) -> float:
    return sum(project_runtime(st, x0, y, P, cfg, pilot_paths=pilot_paths)["projected_seconds"] for st, x0, y, cfg in jobs)


def test_criterion_06_mc_cross_validation(report):
    seps = separators(P)
    ys = _ref_ys(seps)
    jobs = []
    for y in ys.values():
        strat = strategy_from_solution(solve(P, y))
        for x0 in MC_X0:
            for est in ("discounting", "killing"):
                jobs.append((strat, x0, y, _mc_config(est, max(MC_X0))))
    if not FULL_MC:
        projected = _projected_cost(jobs, pilot_paths=8)
        if projected > MC_BUDGET:
            report(6, False, f"projected runtime {projected:.3g} s exceeds {MC_BUDGET:g} s budget on this machine; not run")
    t0 = time.perf_counter()
    worst_z, worst_joint = 0.0, 0.0
    for i in range(0, len(jobs), 2):
        strat, x0, y, disc_cfg = jobs[i]
        disc = mc_value(strat, x0, y, P, disc_cfg)
        kill = mc_value(strat, x0, y, P, jobs[i + 1][3])
        worst_z = max(worst_z, abs(z_score(disc, float(value_at(solve(P, y), x0)))))
        worst_joint = max(worst_joint, abs(joint_z(kill, disc)))
    dt = time.perf_counter() - t0
    ok = worst_z < 3 and worst_joint < 3 and dt < MC_BUDGET
    report(6, ok, f"max |z| vs closed form {worst_z:.2f}, max joint |z| {worst_joint:.2f} ({dt:.3g} s)")


def _dominance_jobs(ys):
    """(regime, label, strategy, x0, y, V(x0; y)) for every competitor of the optimum."""
    scan_hi = 2.0 * separators(P).y_upper
    jobs = []
    for name, y in ys.items():
        sol = solve(P, y)
        opt = strategy_from_solution(sol)
        for x0 in MC_X0:
            v = float(value_at(sol, x0))
            for label, st in perturbed_strategies(opt, 0.2):
                jobs.append((name, label, st, x0, y, v))
            if isinstance(opt, DoubleBarrier):
                b, _ = best_single_barrier(P, y, x0, 0.05, scan_hi, n=50)
                jobs.append((name, "best-single", SingleBarrier(b), x0, y, v))
    return jobs


def test_criterion_07_dominance(report):
    ys = _ref_ys(separators(P))
    jobs = _dominance_jobs(ys)
    cfg = _mc_config("discounting", max(MC_X0))
    if not FULL_MC:
        projected = _projected_cost([(st, x0, y, cfg) for _, _, st, x0, y, _ in jobs], pilot_paths=4)
        if projected > MC_BUDGET:
            report(7, False, f"projected runtime {projected:.3g} s exceeds {MC_BUDGET:g} s budget on this machine; not run")
    t0 = time.perf_counter()
    bad, strict = [], 0
    for name, label, st, x0, y, v in jobs:
        est = mc_value(st, x0, y, P, cfg)
        gap = v - float(strategy_value(P, y, st).value(x0))
        ok = est.mean <= v + 3 * est.std_error
        # strictly lower only where the exact shortfall is resolvable; some shifted
        # boundaries are never reached from x0, leaving the strategy unchanged in law
        if gap > 3 * est.std_error:
            strict += 1
            ok = ok and est.mean < v
        if not ok:
            bad.append(f"{name}/{label}/x0={x0:g}")
    dt = time.perf_counter() - t0
    detail = f"{len(jobs) - len(bad)}/{len(jobs)} competitors dominated, {strict} with resolvable gaps ({dt:.3g} s)"
    report(7, not bad and dt < MC_BUDGET, detail)


def test_criterion_08_transition_limits(report):
    t0 = time.perf_counter()
    rec = check_transition_limits(P, eps_list=(1e-3, 1e-4, 1e-5), bound=0.05)
    dt = time.perf_counter() - t0
    worst = rec.detail["gaps"][0]
    ok = rec.passed and dt < 1.0
    report(8, ok, f"gaps at eps=1e-3 max {max(worst.values()):.3g} (bound 0.05), monotone shrink ({dt:.3g} s, limit 1 s)")


def test_criterion_09_sandwich_bounds(report):
    t0 = time.perf_counter()
    seps = separators(P)
    xs = np.linspace(0.0, 2.0 * seps.y_upper, 21)
    ys = np.linspace(0.0, 1.2 * seps.y_upper, 21)
    grid = np.array([value_at(solve(P, float(y)), xs) for y in ys])
    lo = classical_value(classical_solve(P, P.rq), xs)
    hi = classical_value(classical_solve(P, P.r), xs)
    below = float(np.max(lo - 1e-9 - grid))
    above = float(np.max(grid - hi - 1e-9))
    rise = float(np.max(np.diff(grid, axis=0)))
    dt = time.perf_counter() - t0
    ok = below <= 0 and above <= 0 and rise <= 1e-9 and dt < 1.0
    report(9, ok, f"worst bound excess {max(below, above):.2g}, worst increase in y {rise:.2g} ({dt:.3g} s, limit 1 s)")


def _random_params(n: int, seed: int = 11) -> list[ModelParams]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        mu, sigma, r, q = 10 ** rng.uniform([-2, -1.5, -2.5, -2.5], [0.5, 0.5, 0.0, 0.5])
        if mu / r <= 10 and mu / sigma**2 <= 20:
            out.append(ModelParams(mu, sigma, r, q))
    return out


def test_criterion_10_appendix_suite(report):
    t0 = time.perf_counter()
    failures = []
    sets = [P, *_random_params(20)]
    for p in sets:
        for rec in check_appendix_properties(p):
            if not rec.passed:
                failures.append(f"{rec.name}@{p}")
    dt = time.perf_counter() - t0
    ok = not failures and dt < 10.0
    report(10, ok, f"{len(sets)} parameter sets, {len(failures)} failed checks ({dt:.3g} s, limit 10 s)")

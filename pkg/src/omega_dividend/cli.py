"""Command-line front end: ``omega-dividend {solve,verify,sweep,simulate}``.

Exit codes: 0 success, 1 failed check or internal inconsistency, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from ._roots import BracketError
from .critical import InconsistentSolution
from .model import REFERENCE_PARAMS, InvalidParameters, ModelParams
from .regimes import separators
from .simulate import (
    ESTIMATORS,
    McEstimate,
    config_for_tolerance,
    joint_z,
    mc_value,
    path_stream,
    simulate_path,
    trace_csv,
    z_score,
)
from .strategy import perturbed_strategies, strategy_from_solution, strategy_value
from .subcritical import DegenerateSolution
from .value import CANDIDATES, boundaries, candidate, deriv_at, sweep, to_document, value_at
from .verify import verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _json_float(obj):
    # JSON output keeps 17 significant digits; non-finite values become null
    if isinstance(obj, float):
        return float(f"{obj:.17g}") if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_float(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_float(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_float(obj.item())
    return obj


def _fmt(v) -> str:
    return f"{v:.10g}" if isinstance(v, float) else str(v)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _params(args) -> ModelParams:
    return ModelParams(mu=args.mu, sigma=args.sigma, r=args.r, q=args.q)


def reference_thresholds(params: ModelParams) -> list[float]:
    """One distress threshold per non-trivial regime: 0.9 y_l, 0.9 y_l + 0.1 y_u and 1.001 y_u."""
    s = separators(params)
    return [0.9 * s.y_lower, 0.9 * s.y_lower + 0.1 * s.y_upper, 1.001 * s.y_upper]


def _thresholds(args, params) -> list[float]:
    return list(args.y) if args.y else reference_thresholds(params)


# ---------------------------------------------------------------- subcommands


def cmd_solve(args) -> int:
    params = _params(args)
    docs = []
    for y in _thresholds(args, params):
        sol = candidate(params, y, args.candidate)
        doc = to_document(sol)
        if args.x:
            xs = np.asarray(args.x, dtype=float)
            doc["evaluations"] = [
                {"x": float(x), "V": float(v), "dV": float(d)}
                for x, v, d in zip(xs, value_at(sol, xs), deriv_at(sol, xs))
            ]
        docs.append(doc)
    if args.format == "json":
        _emit(json.dumps(_json_float(docs if len(docs) > 1 else docs[0]), indent=2) + "\n", args.out)
        return EXIT_OK
    lines = []
    for doc in docs:
        seps = doc["separators"]
        lines.append(f"y = {_fmt(doc['y'])}  regime = {doc['regime']}  candidate = {doc['candidate']}")
        lines.append(f"  y_l = {_fmt(seps['y_lower'])}  y_u = {_fmt(seps['y_upper'])}")
        lines.append("  boundaries: " + "  ".join(f"{k} = {_fmt(v)}" for k, v in doc["boundaries"].items()))
        lines.append("  action set: " + " U ".join(
            f"[{_fmt(lo)}, {'inf' if hi is None else _fmt(hi)}{')' if hi is None else ']'}"
            for lo, hi in doc["action_intervals"]
        ))  # fmt: skip
        lines.append("  segment   lo            hi            rate   coeff1            coeff2")
        for seg in doc["segments"]:
            hi = "inf" if seg["hi"] is None else _fmt(seg["hi"])
            rate = seg["rate_tag"] or "-"
            lines.append(
                f"  {seg['kind']:<8}  {_fmt(seg['lo']):<12}  {hi:<12}  {rate:<5}  "
                f"{_fmt(seg['coeff1']):<16}  {_fmt(seg['coeff2'])}"
            )
        for ev in doc.get("evaluations", []):
            lines.append(f"  V({_fmt(ev['x'])}) = {_fmt(ev['V'])}  V' = {_fmt(ev['dV'])}")
    if args.format == "csv":
        rows = ["y,regime,x,V,dV"]
        for doc in docs:
            for ev in doc.get("evaluations", []):
                rows.append(f"{doc['y']!r},{doc['regime']},{ev['x']!r},{ev['V']!r},{ev['dV']!r}")
        _emit("\n".join(rows) + "\n", args.out)
    else:
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    params = _params(args)
    reports = []
    for y in _thresholds(args, params):
        sol = candidate(params, y, args.candidate)
        reports.append(
            verify(
                sol,
                tol=args.tol,
                x_max=args.x_max,
                grid_n=args.grid_n,
                appendix=args.appendix,
                transitions=args.transitions,
            )
        )
    ok = all(r.passed for r in reports)
    if args.format == "json" or args.out:
        payload = {"passed": ok, "reports": [r.as_dict() for r in reports]}
        _emit(json.dumps(_json_float(payload), indent=2) + "\n", args.out)
    if args.format != "json":
        for r in reports:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status}  y = {_fmt(r.y)}  regime = {r.regime}  candidate = {r.candidate}")
            for c in r.checks:
                mark = "ok  " if c.passed else "FAIL"
                loc = "-" if c.worst_location is None else _fmt(c.worst_location)
                print(f"  {mark} {c.name:<30} worst = {_fmt(c.worst_residual):<18} at {loc:<16} tol = {_fmt(c.tolerance)}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args) -> int:
    params = _params(args)
    seps = separators(params)
    if args.grid_n < 2:
        raise UsageError("--grid-n must be at least 2")
    x_max = args.x_max if args.x_max is not None else 2.0 * seps.y_upper
    if not x_max > 0:
        raise UsageError("--x-max must be positive")
    ys = args.y if args.y else np.linspace(0.0, 1.2 * seps.y_upper, 61)
    xs = np.linspace(0.0, x_max, args.grid_n)
    table = sweep(params, ys, xs)
    if args.format == "json":
        _emit(json.dumps(_json_float({"rows": table.rows, "curves": table.curves}), indent=2) + "\n", args.out)
        return EXIT_OK
    if args.out:
        out = Path(args.out)
        out.write_text(table.rows_csv())
        out.with_name(out.stem + "_boundaries" + (out.suffix or ".csv")).write_text(table.curves_csv())
    else:
        sys.stdout.write(table.rows_csv())
        sys.stdout.write("\n")
        sys.stdout.write(table.curves_csv())
    return EXIT_OK


def _estimate_record(label, est: McEstimate, reference: float, exact: float) -> dict:
    return {
        "strategy": label,
        "estimator": est.estimator,
        "mean": est.mean,
        "std_error": est.std_error,
        "n_paths": est.n_paths,
        "n_ruined": est.n_ruined,
        "mean_clock_at_end": est.mean_clock_at_end,
        "total_steps": est.total_steps,
        "seconds": est.seconds,
        "strategy_value": exact,
        "optimal_value": reference,
        "z_vs_optimal": z_score(est, reference),
        "z_vs_strategy": z_score(est, exact),
    }


def cmd_simulate(args) -> int:
    params = _params(args)
    if args.dt <= 0 or args.paths < 2 or args.seed < 0 or args.mc_tol <= 0:
        raise UsageError("need --dt > 0, --paths >= 2, --seed >= 0 and --mc-tol > 0")
    if args.perturb is not None and args.perturb <= 0:
        raise UsageError("--perturb must be positive")
    x0_list = args.x if args.x else [1.0]
    if any(x < 0 for x in x0_list):
        raise UsageError("--x must be non-negative")
    estimators = ESTIMATORS if args.estimator == "both" else (args.estimator,)
    results = []
    for y in _thresholds(args, params):
        sol = candidate(params, y, "auto")
        opt = strategy_from_solution(sol)
        strategies = [("optimal", opt)]
        if args.perturb:
            strategies += perturbed_strategies(opt, args.perturb)
        for x0 in x0_list:
            reference = float(value_at(sol, x0))
            entry = {"y": y, "x0": x0, "regime": sol.regime.value, "boundaries": boundaries(sol), "estimates": []}
            for label, st in strategies:
                exact = float(strategy_value(params, y, st).value(x0))
                by_est = {}
                for est_name in estimators:
                    cfg = config_for_tolerance(
                        params, max(x0_list), args.mc_tol, dt=args.dt, seed=args.seed,
                        n_paths=args.paths, estimator=est_name, antithetic=args.antithetic,
                    )  # fmt: skip
                    est = mc_value(st, x0, y, params, cfg)
                    by_est[est_name] = est
                    entry["estimates"].append(_estimate_record(label, est, reference, exact))
                if len(by_est) == 2:
                    entry.setdefault("estimator_agreement", []).append(
                        {"strategy": label, "joint_z": joint_z(by_est["killing"], by_est["discounting"])}
                    )
            results.append(entry)
            if args.trace:
                _dump_traces(args, params, opt, x0, y)
    _emit(json.dumps(_json_float({"params": params.as_dict(), "dt": args.dt, "results": results}), indent=2) + "\n", args.out)
    return EXIT_OK


def _dump_traces(args, params, strategy, x0, y) -> None:
    cfg = config_for_tolerance(params, x0, args.mc_tol, dt=args.dt, seed=args.seed, n_paths=2, estimator="discounting")
    target = Path(args.trace_out or "trace.csv")
    for k in range(args.trace):
        _, info = simulate_path(strategy, x0, y, params, cfg, path_stream(args.seed, k), trace=True)
        path = target.with_name(f"{target.stem}_y{y:.6g}_x{x0:g}_p{k}{target.suffix or '.csv'}")
        path.write_text(trace_csv(info))


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default flag values")
    common.add_argument("--mu", type=float, default=REFERENCE_PARAMS.mu)
    common.add_argument("--sigma", type=float, default=REFERENCE_PARAMS.sigma)
    common.add_argument("--r", type=float, default=REFERENCE_PARAMS.r)
    common.add_argument("--q", type=float, default=REFERENCE_PARAMS.q)
    common.add_argument("--y", type=float, nargs="+", help="distress threshold(s); default: one per regime")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "table"), default="table")

    parser = argparse.ArgumentParser(prog="omega-dividend", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="closed-form solution and coefficients")
    p.add_argument("--x", type=float, nargs="+", help="surplus levels to evaluate")
    p.add_argument("--candidate", choices=CANDIDATES, default="auto")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="check optimality conditions on a grid")
    p.add_argument("--candidate", choices=CANDIDATES, default="auto")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--x-max", type=float)
    p.add_argument("--grid-n", type=int, default=2001)
    p.add_argument("--appendix", action="store_true", help="also run the structural property suite")
    p.add_argument(
        "--transitions", action="store_true", help="also check the critical boundaries near y_l and y_u"
    )
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="value and boundary tables over (x, y)")
    p.add_argument("--x-max", type=float)
    p.add_argument("--grid-n", type=int, default=201)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimates of barrier strategies")
    p.add_argument("--x", type=float, nargs="+", help="initial surplus levels (default 1.0)")
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--paths", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--estimator", choices=ESTIMATORS + ("both",), default="discounting")
    p.add_argument("--perturb", type=float, help="also simulate each free boundary shifted by +/- this")
    p.add_argument("--mc-tol", type=float, default=1e-4, help="bound on the horizon truncation bias")
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--trace", type=int, default=0, metavar="K", help="dump the first K paths as CSV")
    p.add_argument("--trace-out", help="base file name for path traces")
    p.set_defaults(func=cmd_simulate)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            defaults = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(defaults, dict):
            parser.error("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        known = {a.dest for a in sub._actions}  # noqa: SLF001
        defaults = {k.replace("-", "_"): v for k, v in defaults.items()}
        unknown = set(defaults) - known
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (InvalidParameters, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InconsistentSolution, BracketError, DegenerateSolution, FloatingPointError) as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

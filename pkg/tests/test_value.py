import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omega_dividend import separators
from omega_dividend.model import classical_solve, classical_value
from omega_dividend.regimes import Regime
from omega_dividend.value import (
    PiecewiseValue,
    Segment,
    boundaries,
    candidate,
    deriv_at,
    dumps,
    from_document,
    loads,
    second_at,
    solve,
    sweep,
    to_document,
    value_at,
)
from param_strategies import model_params


def test_dispatch_by_regime(ref_params, ref_ys):
    assert solve(ref_params, 0.0).regime is Regime.CLASSICAL
    for name, y in ref_ys.items():
        assert solve(ref_params, y).regime.value == name


def test_supercritical_is_penalised_classical(ref_params, ref_ys):
    sol = solve(ref_params, ref_ys["supercritical"])
    assert boundaries(sol)["barrier"] == pytest.approx(0.2626, abs=5e-4)
    classic = classical_solve(ref_params, ref_params.rq)
    xs = np.linspace(0, 5, 51)
    np.testing.assert_allclose(value_at(sol, xs), classical_value(classic, xs), rtol=1e-13)


def test_critical_action_set(ref_params, ref_ys):
    sol = solve(ref_params, ref_ys["critical"])
    (a, b), (c, d) = sol.regions
    assert (a, b, c) == pytest.approx((0.2626, 1.1394, 2.3147), abs=5e-4)
    assert math.isinf(d)
    assert set(boundaries(sol)) == {"b_low_fixed", "b_low_free", "b_up_free"}


def test_slope_one_on_action_set(ref_params, ref_ys):
    sol = solve(ref_params, ref_ys["critical"])
    for lo, hi in sol.regions:
        xs = np.linspace(lo, min(hi, lo + 3), 20)
        np.testing.assert_allclose(deriv_at(sol, xs), 1.0, rtol=1e-10)
        np.testing.assert_allclose(second_at(sol, xs[1:-1]), 0.0, atol=1e-10)


@pytest.mark.parametrize("eps", [1e-4, 1e-6])
def test_value_is_continuous_in_threshold_at_separators(ref_params, ref_seps, eps):
    xs = np.linspace(0, 6, 61)
    for y in (ref_seps.y_lower, ref_seps.y_upper):
        below = value_at(solve(ref_params, y - eps), xs)
        above = value_at(solve(ref_params, y + eps), xs)
        # V is Lipschitz in y with a constant of order one here
        assert np.max(np.abs(below - above)) <= 10 * eps


def test_unknown_candidate(ref_params):
    with pytest.raises(ValueError):
        candidate(ref_params, 1.0, "critical")
    with pytest.raises(ValueError):
        candidate(ref_params, 0.0, "subcritical")
    with pytest.raises(ValueError):
        solve(ref_params, -1.0)


def test_piecewise_coverage_is_validated(ref_params):
    lin = Segment("affine", 0.0, math.inf, 0.0, 0.0, 1.0)
    PiecewiseValue(ref_params, (lin,))
    with pytest.raises(ValueError):
        PiecewiseValue(ref_params, (Segment("affine", 0.0, 1.0, 0.0, 0.0, 1.0),))
    with pytest.raises(ValueError):
        PiecewiseValue(
            ref_params, (Segment("affine", 0.0, 1.0, 0.0, 0.0, 1.0), Segment("affine", 1.5, math.inf, 1.5, 1.0, 1.0))
        )
    with pytest.raises(ValueError):
        Segment("exp", 0.0, 1.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        PiecewiseValue(ref_params, (lin,)).value(-1.0)


def test_document_round_trip_is_exact(ref_params, ref_ys):
    xs = np.linspace(0, 8, 97)
    for y in [0.0, *ref_ys.values()]:
        sol = solve(ref_params, y)
        back = loads(dumps(sol))
        assert back.pieces == sol.pieces
        assert back.regions == sol.regions
        np.testing.assert_array_equal(value_at(back, xs), value_at(sol, xs))
    doc = to_document(solve(ref_params, 1.0))
    assert json.loads(json.dumps(doc)) == doc
    with pytest.raises(ValueError):
        from_document({**doc, "schema": "other"})


def test_sweep_tables(ref_params):
    ys = [0.0, 1.0, 2.0, 5.0]
    xs = [0.0, 0.5, 1.0]
    table = sweep(ref_params, ys, xs)
    assert len(table.rows) == 12 and len(table.curves) == 4
    lines = table.rows_csv().splitlines()
    assert lines[0] == "y,x,V,dV,regime" and len(lines) == 13
    curves = table.curves_csv().splitlines()
    assert curves[0] == "y,regime,b_low_fixed,b_low_free,b_up_free"
    single, double = curves[2].split(","), curves[3].split(",")
    assert single[1] == "subcritical" and single[2:4] == ["", ""]
    assert double[1] == "critical" and all(double[2:5])
    assert all(row["dV"] >= 1 - 1e-9 for row in table.rows)
    with pytest.raises(ValueError):
        sweep(ref_params, [2.0, 1.0], xs)
    with pytest.raises(ValueError):
        sweep(ref_params, [], xs)


@given(model_params(), st.floats(0.0, 1.5))
def test_sandwich_bounds(p, u):
    seps = separators(p)
    y = u * seps.y_upper
    sol = solve(p, y)
    xs = np.linspace(0, 2 * seps.y_upper, 41)
    v = value_at(sol, xs)
    lo = classical_value(classical_solve(p, p.rq), xs)
    hi = classical_value(classical_solve(p, p.r), xs)
    scale = np.maximum(1.0, hi)
    assert np.all(v >= lo - 1e-9 * scale)
    assert np.all(v <= hi + 1e-9 * scale)


@given(model_params(), st.floats(0.0, 1.5), st.floats(0.0, 1.5))
def test_value_non_increasing_in_threshold(p, u, w):
    seps = separators(p)
    y1, y2 = sorted((u * seps.y_upper, w * seps.y_upper))
    xs = np.linspace(0, 2 * seps.y_upper, 41)
    v1, v2 = value_at(solve(p, y1), xs), value_at(solve(p, y2), xs)
    assert np.all(v2 <= v1 + 1e-9 * np.maximum(1.0, v1))


@given(model_params(), st.floats(0.0, 1.5))
def test_round_trip_property(p, u):
    sol = solve(p, u * separators(p).y_upper)
    assert loads(dumps(sol)).pieces == sol.pieces

import math

import numpy as np
import pytest
from hypothesis import given

from omega_dividend.model import (
    InvalidParameters,
    ModelParams,
    basis,
    classical_barrier,
    classical_deriv,
    classical_second,
    classical_solve,
    classical_value,
    delta_fn,
    eta_fn,
    exponents,
)
from param_strategies import model_params


def test_exponents_match_high_precision(ref_params, mp_ref):
    for rho in (ref_params.r, ref_params.rq):
        ex = exponents(ref_params, rho)
        g1, g2 = mp_ref.gam(rho)
        assert ex.gamma1 == pytest.approx(float(g1), rel=1e-14)
        assert ex.gamma2 == pytest.approx(float(g2), rel=1e-14)


def test_classical_barriers_match_high_precision(ref_params, mp_ref):
    assert classical_barrier(ref_params, ref_params.rq) == pytest.approx(float(mp_ref.barrier(mp_ref.rq)), rel=1e-13)
    assert classical_barrier(ref_params, ref_params.r) == pytest.approx(float(mp_ref.barrier(mp_ref.r)), rel=1e-13)


def test_classical_value_matches_high_precision(ref_params, mp_ref):
    sol = classical_solve(ref_params, ref_params.rq)
    for x in (0.0, 0.05, 0.2, 0.26, 0.5, 3.0):
        assert classical_value(sol, x) == pytest.approx(float(mp_ref.classical(mp_ref.rq, x)), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
@pytest.mark.parametrize("field", ["mu", "sigma", "r", "q"])
def test_params_reject_invalid(field, bad):
    kw = dict(mu=0.1, sigma=0.1, r=0.02, q=0.1)
    kw[field] = bad
    with pytest.raises(InvalidParameters):
        ModelParams(**kw)


def test_params_normalise_ints_and_tags():
    p = ModelParams(1, 1, 1, 2)
    assert isinstance(p.mu, float)
    assert p.rate("r") == 1.0 and p.rate("r+q") == 3.0
    with pytest.raises(ValueError):
        p.rate("q")


def test_surplus_must_be_nonnegative(ref_params):
    sol = classical_solve(ref_params, ref_params.r)
    with pytest.raises(ValueError):
        classical_value(sol, -0.1)
    with pytest.raises(ValueError):
        delta_fn(ref_params, -1.0)
    with pytest.raises(ValueError):
        eta_fn(ref_params, 1.0, -1.0)


def test_vectorised_shapes(ref_params):
    xs = np.linspace(0, 2, 7)
    sol = classical_solve(ref_params, ref_params.r)
    assert classical_value(sol, xs).shape == (7,)
    assert np.ndim(classical_value(sol, 0.3)) == 0
    assert all(a.shape == (7,) for a in basis(ref_params, ref_params.r, xs))


@given(model_params())
def test_exponents_solve_characteristic_equation(p):
    for rho in (p.r, p.rq):
        ex = exponents(p, rho)
        assert ex.gamma2 < 0 < ex.gamma1
        for g in (ex.gamma1, ex.gamma2):
            resid = 0.5 * p.sigma**2 * g * g + p.mu * g - rho
            assert abs(resid) <= 1e-12 * (0.5 * p.sigma**2 * g * g + abs(p.mu * g) + rho)


@given(model_params())
def test_classical_smooth_fit_and_bounds(p):
    for rho in (p.r, p.rq):
        sol = classical_solve(p, rho)
        b = sol.barrier
        assert sol.value_at_barrier == pytest.approx(p.mu / rho, rel=1e-10)
        assert classical_deriv(sol, b, side="left") == pytest.approx(1.0, rel=1e-10)
        assert abs(classical_second(sol, b, side="left")) <= 1e-8 * sol.exponents.gamma1**2
        xs = np.linspace(0, 3 * max(b, 1e-3), 50)
        assert classical_value(sol, 0.0) == 0.0
        assert np.all(classical_deriv(sol, xs) >= 1 - 1e-10)
        assert np.all(classical_value(sol, xs) >= xs - 1e-12)


@given(model_params())
def test_penalised_barrier_below_base_barrier(p):
    assert classical_barrier(p, p.rq) < classical_barrier(p, p.r)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kslab.elliptic import EllipticSolveError, EllipticSolveParams, residual, solve_signal
from kslab.grid import GridSpec, ScalarField, integrate, norm


def manufactured_error(n: int) -> float:
    g = GridSpec(n, n, 1.0, 1.0)
    exact = ScalarField.from_function(g, lambda x, y: np.cos(np.pi * x) * np.cos(2 * np.pi * y) + 2.0)
    rhs = ScalarField.from_function(
        g, lambda x, y: (1 + 5 * np.pi**2) * np.cos(np.pi * x) * np.cos(2 * np.pi * y) + 2.0
    )
    return norm(solve_signal(rhs) - exact, 2)


def test_manufactured_solution_second_order():
    errs = [manufactured_error(n) for n in (64, 128, 256)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9


def test_constant_source_gives_equal_constant_signal():
    g = GridSpec(32, 32, 2.0, 2.0)
    v = solve_signal(ScalarField.constant(g, 4.0))
    np.testing.assert_allclose(v.values, 4.0, rtol=1e-13)


def test_zero_source_gives_zero_signal():
    g = GridSpec(16, 16, 1.0, 1.0)
    v = solve_signal(ScalarField.constant(g, 0.0))
    assert np.all(v.values == 0.0)


def test_params_validation():
    with pytest.raises(ValueError):
        EllipticSolveParams(tol=0.0)
    with pytest.raises(ValueError):
        EllipticSolveParams(tol=1e-2)


def test_residual_contract_and_mass_identity():
    # Summing (-Lap + I) v = u over cells: int v = int u exactly up to round-off.
    g = GridSpec(64, 48, 2.0, 1.5)
    rng = np.random.default_rng(0)
    u = ScalarField(g, rng.random(g.shape) * 10)
    v = solve_signal(u, EllipticSolveParams(tol=1e-12))
    res = ScalarField(g, residual(u, v))
    assert norm(res, 2) <= 1e-12 * norm(u, 2)
    assert integrate(v) == pytest.approx(integrate(u), rel=1e-12)


def test_unreachable_tolerance_raises():
    g = GridSpec(16, 16, 1.0, 1.0)
    rng = np.random.default_rng(1)
    u = ScalarField(g, rng.random(g.shape) * 1e3)
    with pytest.raises(EllipticSolveError) as info:
        solve_signal(u, EllipticSolveParams(tol=1e-30, max_iter=2))
    assert info.value.residual > 0


nonneg = arrays(np.float64, (16, 16), elements=st.floats(0.0, 1e4, allow_nan=False))


@settings(max_examples=40, deadline=None)
@given(nonneg)
def test_discrete_maximum_principle(values):
    g = GridSpec(16, 16, 1.0, 1.0)
    u = ScalarField(g, values)
    v = solve_signal(u)
    slack = 10 * 1e-10 * max(1.0, u.max())
    assert v.min() >= u.min() - slack
    assert v.max() <= u.max() + slack


@settings(max_examples=25, deadline=None)
@given(nonneg, st.floats(0.1, 100.0))
def test_solve_is_linear(values, scale):
    g = GridSpec(16, 16, 1.0, 1.0)
    u = ScalarField(g, values)
    a = solve_signal(u * scale).values
    b = scale * solve_signal(u).values
    np.testing.assert_allclose(a, b, rtol=1e-8, atol=1e-8 * max(1.0, np.abs(b).max()))


def test_solve_is_deterministic():
    g = GridSpec(64, 64, 1.0, 1.0)
    u = ScalarField(g, np.random.default_rng(5).random(g.shape))
    assert np.array_equal(solve_signal(u).values, solve_signal(u).values)

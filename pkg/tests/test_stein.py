import math

import numpy as np
import pytest
from scipy import special

from haarstein.stein import (
    TestFunction,
    abstract_bound,
    gauss_expectation,
    stein_transform,
    test_family,
    verify_stein_bounds,
)


def test_family_size():
    fam = test_family()
    assert len(fam) == 10
    assert len({g.name for g in fam}) == 10


def test_gauss_expectation_known_values():
    assert abs(gauss_expectation(TestFunction.from_callable(np.cos))) - math.exp(-0.5) <= 1e-9
    assert abs(gauss_expectation(TestFunction.from_callable(np.sin))) <= 1e-12
    bump = TestFunction.from_callable(lambda x: np.exp(-np.asarray(x) ** 2))
    assert abs(gauss_expectation(bump) - 1 / math.sqrt(3)) <= 1e-9
    assert abs(gauss_expectation(TestFunction.from_callable(special.ndtr)) - 0.5) <= 1e-12


def test_identity_gives_constant_solution():
    sol = stein_transform(TestFunction.from_callable(lambda x: np.asarray(x, dtype=float)))
    assert np.max(np.abs(sol.f.values + 1.0)) <= 1e-8


def test_square_gives_linear_solution():
    sol = stein_transform(TestFunction.from_callable(lambda x: np.asarray(x, dtype=float) ** 2))
    x = sol.f.grid
    assert np.max(np.abs(sol.f.values + x)) <= 1e-7


def test_constant_gives_zero():
    sol = stein_transform(TestFunction.from_callable(lambda x: np.full_like(np.asarray(x, dtype=float), 2.5)))
    assert np.max(np.abs(sol.f.values)) <= 1e-12


@pytest.mark.parametrize("g", test_family(), ids=lambda g: g.name)
def test_family_residual_and_bounds(g):
    rep = verify_stein_bounds(g)
    assert rep.max_residual <= 1e-6
    assert rep.passed, rep.to_dict()


def test_indicator_like_solution_bounded():
    # closed form for g = 1{x <= 0}: f(t) = sqrt(2 pi) e^{t^2/2} Phi(t) (Phi(0) - 1) for t <= 0
    g = TestFunction.from_callable(lambda x: special.ndtr(-50 * np.asarray(x)), step=1e-3)
    rep = verify_stein_bounds(g)
    assert rep.sup_f <= rep.bound_f + rep.fd_slack


def test_sup_norm_and_derivative():
    g = TestFunction.from_callable(np.sin)
    assert abs(g.sup_norm() - 1.0) <= 1e-6
    assert abs(g.derivative_sup_norm() - 1.0) <= 1e-5


def test_test_function_validation():
    with pytest.raises(ValueError):
        TestFunction(np.zeros(5), L=8, step=1e-3)
    with pytest.raises(ValueError), np.errstate(divide="ignore", invalid="ignore"):
        TestFunction.from_callable(lambda x: np.asarray(x) / 0.0)


def test_abstract_bound():
    val, se = abstract_bound(0.1, [0.01, -0.01, 0.03, -0.03])
    assert abs(val - 0.2) <= 1e-14 and se > 0
    with pytest.raises(ValueError):
        abstract_bound(0.0, [1.0])

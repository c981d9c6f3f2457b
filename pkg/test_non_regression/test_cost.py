"""
Reference cost of liquidity values.

These tests solve on the fine grid and take a few minutes.

"""

import numpy as np
import pytest

from . import GRID, PREFS, single_regime, solved, two_regimes
from . import liquidswitch

merton = liquidswitch.merton
policy = liquidswitch.policy


def cost(model):
    sol = solved(model, GRID)
    bench = liquidswitch.commands.benchmark(sol.model)
    return policy.liquidity_cost(sol, bench, PREFS).cost


@pytest.mark.parametrize('lam, expected, tolerance', (
    (1., 0.153, 0.005),
    (5., 0.016, 0.005),
    (40., 0.001, 0.002),
))
def test_single_regime(lam, expected, tolerance):
    """Cost of liquidity of one regime with unit volatility."""
    assert cost(single_regime(lam))[0] == pytest.approx(
        expected, abs=tolerance)


@pytest.mark.parametrize('lam, expected', (
    (1., (0.257, 0.224)),
    (5., (0.112, 0.103)),
    (10., (0.069, 0.064)),
))
def test_two_regimes(lam, expected):
    """Cost of liquidity of two regimes switching at rate 1."""
    assert cost(two_regimes(lam=(lam, lam))) == pytest.approx(
        expected, abs=0.01)


@pytest.mark.parametrize('lam, expected', (
    (1., (0.153, 0.087)),
    (5., (0.015, 0.042)),
    (10., (0.004, 0.024)),
))
def test_volatility(lam, expected):
    """Cost of liquidity of one regime for two volatilities."""
    result = (
        cost(single_regime(lam, sigma=1.))[0],
        cost(single_regime(lam, sigma=2.))[0])
    assert result == pytest.approx(expected, abs=0.005)


def test_value_curves():
    """Value and consumption curves approach Merton as trading speeds up."""
    bench = merton.merton_single(0.4, 1., PREFS)
    solutions = [solved(single_regime(lam)) for lam in (1., 3., 5., 10.)]
    maxima = [sol.phi_sup[0] for sol in solutions]
    assert maxima == sorted(maxima)
    assert maxima[-1] < bench.phi_m[0]
    for sol in solutions:
        assert np.all(sol.phi <= bench.phi_m[0])

    z = solutions[0].z
    near_cash, near_stock = np.searchsorted(z, (0.05, 0.9))
    rates = [policy.extract_policy(sol, PREFS).c_star[0] for sol in solutions]
    assert [rate[near_stock] for rate in rates] == sorted(
        rate[near_stock] for rate in rates)
    assert [rate[near_cash] for rate in rates] == sorted(
        (rate[near_cash] for rate in rates), reverse=True)

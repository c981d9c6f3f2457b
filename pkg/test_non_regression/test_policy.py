"""
Policy, value and cost of liquidity tests.

"""

from dataclasses import replace

import numpy as np
import pytest

from . import COARSE, GRID, PREFS, single_regime, solved, two_regimes
from . import liquidswitch

policy = liquidswitch.policy
merton = liquidswitch.merton
solver = liquidswitch.solver


def test_policy_endpoints():
    """Consumption vanishes at z = 1 and has its closed form at z = 0."""
    sol = solved(single_regime(1.))
    table = policy.extract_policy(sol, PREFS)
    assert np.all(table.c_star[:, -1] == 0)
    assert table.c_star[0, 0] == pytest.approx(sol.phi[0, 0] ** -2)
    assert np.all(table.c_star >= 0)
    assert table.pi_star[0] == sol.z[table.pi_index[0]]
    assert sol.phi[0, table.pi_index[0]] == sol.phi_sup[0]
    assert table.phi_sup.tolist() == sol.phi_sup.tolist()
    assert table.sidecar() == {
        'pi_star': [table.pi_star[0]], 'p': 0.5, 'rho': 0.2}


def test_consumption_rates_flat():
    """A flat value consumes at the rate of pure consumption."""
    z = np.linspace(0, 1, 11)
    phi = np.full((1, 11), np.sqrt(2.5))
    rates = policy.consumption_rates(z, phi, 0.5)
    assert rates[0, :-1] == pytest.approx(0.4)
    assert rates[0, -1] == 0


def test_consumption_rates_nonpositive():
    """An increasing value with a steep slope cannot define a policy."""
    z = np.linspace(0, 1, 11)
    with pytest.raises(policy.NonconvergedInput):
        policy.consumption_rates(z, 10 * z[None, :] + 0.1, 0.5)


def test_nonconverged_input():
    """Partial solutions are refused."""
    with pytest.raises(solver.OuterNoConvergence) as info:
        solver.solve_phi(
            solved(single_regime(1.)).model, replace(COARSE, max_outer=2))
    with pytest.raises(policy.NonconvergedInput):
        policy.extract_policy(info.value.solution, PREFS)


def test_target_scaling():
    """Scaling the value keeps the rebalancing target."""
    sol = solved(two_regimes())
    scaled = replace(sol, phi=3 * sol.phi)
    assert policy.extract_policy(scaled, PREFS).pi_index.tolist() == (
        policy.extract_policy(sol, PREFS).pi_index.tolist())


def test_two_regime_targets():
    """Targets are the maximizers of each regime."""
    sol = solved(two_regimes())
    table = policy.extract_policy(sol, PREFS)
    assert table.d == 2
    assert table.pi_index.tolist() == np.argmax(sol.phi, axis=1).tolist()
    # The volatile regime holds less stock
    assert table.pi_star[1] < table.pi_star[0]


def test_consumption_continuity():
    """Jumps between neighbouring nodes shrink with the grid step."""
    jumps = []
    for n_points in (201, 801):
        sol = solved(single_regime(1.), replace(COARSE, n_points=n_points))
        rates = policy.extract_policy(sol, PREFS).c_star
        jumps.append(np.max(np.abs(np.diff(rates))))
    assert jumps[1] < jumps[0]


def test_iterate_policies():
    """Truncated policies follow the stored iterates."""
    sol = solved(single_regime(1.))
    tables = policy.iterate_policies(sol, 3, PREFS)
    assert len(tables) == 4
    assert not np.any(tables[0].c_star)
    for m in range(1, 4):
        assert tables[m].pi_index[0] == np.argmax(sol.iterates[m - 1][0])
        assert tables[m].c_star[0, 0] == pytest.approx(
            sol.iterates[m][0, 0] ** -2)
    # One event left: any trade ends consumption, target is irrelevant
    assert tables[1].pi_index[0] == 0
    with pytest.raises(policy.NonconvergedInput):
        policy.iterate_policies(sol, len(sol.iterates), PREFS)


def test_value_at():
    """Values in wealth variables."""
    sol = solved(single_regime(1.))
    assert policy.value_at(sol, 0, 0, 0) == 0
    assert policy.value_at(sol, 0, 1, 0) == pytest.approx(2 * sol.phi[0, 0])
    assert policy.value_at(sol, 0, 0, 1) == pytest.approx(2 * sol.phi[0, -1])
    for x, y in ((0.3, 0.7), (1., 2.), (0.05, 0.)):
        assert policy.value_at(sol, 0, 2 * x, 2 * y) == pytest.approx(
            np.sqrt(2) * policy.value_at(sol, 0, x, y), rel=1e-12)


def test_best_allocation():
    """The best allocation of a wealth reaches the maximal value."""
    sol = solved(single_regime(1.), GRID)
    r = 1.5
    best = np.sqrt(r) / 0.5 * sol.phi_sup[0]
    values = [
        policy.value_at(sol, 0, x, r - x) for x in np.linspace(0, r, 101)]
    assert max(values) <= best * (1 + 1e-12)
    assert max(values) == pytest.approx(best, rel=1e-4)
    z_star = sol.z[sol.argmax[0]]
    assert policy.value_at(sol, 0, r * (1 - z_star), r * z_star) == (
        pytest.approx(best, rel=1e-12))


def test_liquidity_cost_identity():
    """Matching the benchmark costs nothing."""
    sol = solved(single_regime(1.))
    bench = merton.MertonSolution(
        phi_m=tuple(sol.phi_sup), pi_m=(0.8,), c_m=(0.24,), residual=0.)
    report = policy.liquidity_cost(sol, bench, PREFS)
    assert report.cost == (0.,)
    data = report.as_dict()
    assert data['P'] == [0.] and data['lambda'] == [1.]
    assert data['n_points'] == COARSE.n_points


def test_liquidity_cost_regimes():
    """Regime counts of the solution and the benchmark must agree."""
    sol = solved(single_regime(1.))
    bench = merton.merton_multi(solved(two_regimes()).model)
    with pytest.raises(ValueError):
        policy.liquidity_cost(sol, bench, PREFS)


def test_liquidity_cost_decreases():
    """Trading more often costs less."""
    costs = []
    for lam in (1., 3., 5., 10.):
        sol = solved(single_regime(lam))
        bench = merton.merton_single(0.4, 1., PREFS)
        costs.append(policy.liquidity_cost(sol, bench, PREFS).cost[0])
    assert all(cost > -1e-10 for cost in costs)
    assert costs == sorted(costs, reverse=True)


def test_merton_limit():
    """Consumption at the target approaches the Merton rate."""
    sol = solved(
        single_regime(100.),
        replace(COARSE, n_points=201, tol_outer=1e-7, max_outer=50000))
    table = policy.extract_policy(sol, PREFS)
    assert table.c_star[0, table.pi_index[0]] == pytest.approx(0.24, rel=0.05)
    assert table.pi_star[0] == pytest.approx(0.8, abs=0.05)

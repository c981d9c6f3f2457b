"""
Feedback policies, values in wealth variables and the cost of liquidity.

"""

from dataclasses import dataclass

import numpy as np

from .model import utility
from .solver import consumption_argument


class NonconvergedInput(ValueError):
    """The grid solution did not converge or cannot define a policy."""


@dataclass(frozen=True, eq=False)
class PolicyTable:
    """Consumption fractions on the grid and rebalancing targets.

    ``c_star[i, k]`` is the consumption rate per unit of wealth in regime
    ``i`` at stock proportion ``z[k]``; at a trading time the proportion is
    moved to ``pi_star[i] = z[pi_index[i]]``.

    """
    z: np.ndarray
    c_star: np.ndarray
    pi_star: np.ndarray
    pi_index: np.ndarray
    phi_sup: np.ndarray
    p: float
    rho: float

    @property
    def d(self):
        return len(self.pi_star)

    def sidecar(self):
        return {
            'pi_star': [float(value) for value in self.pi_star],
            'p': self.p, 'rho': self.rho}


@dataclass(frozen=True)
class LiquidityCostReport:
    """Extra wealth fraction ``P_i(1)`` matching the Merton value."""
    cost: tuple
    phi_sup: tuple
    phi_m: tuple
    lam: tuple
    p: float
    rho: float
    n_points: int

    def as_dict(self):
        return {
            'P': list(self.cost), 'phi_sup': list(self.phi_sup),
            'phi_m': list(self.phi_m), 'lambda': list(self.lam),
            'p': self.p, 'rho': self.rho, 'n_points': self.n_points}


def consumption_rates(z, phi, p):
    """Consumption fractions ``(phi - z phi' / p)**(-1 / (1 - p))``.

    ``phi'`` is taken by central differences at interior nodes. The rate is
    ``phi(0)**(-1 / (1 - p))`` at ``z = 0`` and 0 at ``z = 1``, where
    ``phi'`` diverges to minus infinity.

    """
    argument = consumption_argument(phi, z, p)
    if np.any(argument <= 0):
        raise NonconvergedInput(
            'consumption argument is not positive on the grid')
    rates = np.zeros_like(phi)
    rates[..., 0] = phi[..., 0] ** (-1 / (1 - p))
    rates[..., 1:-1] = argument ** (-1 / (1 - p))
    return rates


def _table(z, phi, target, prefs):
    index = np.argmax(target, axis=1)
    return PolicyTable(
        z=z, c_star=consumption_rates(z, phi, prefs.p), pi_star=z[index],
        pi_index=index, phi_sup=phi.max(axis=1), p=prefs.p, rho=prefs.rho)


def extract_policy(sol, prefs):
    """Optimal consumption and rebalancing targets of a converged solution."""
    if not sol.converged:
        raise NonconvergedInput('grid solution did not converge')
    return _table(sol.z, sol.phi, sol.phi, prefs)


def iterate_policies(sol, n, prefs):
    """Policies of the problem where consumption stops at the n-th event.

    Item ``m`` of the returned list applies while ``m`` events remain:
    consumption follows the iterate ``phi^m`` and a trade rebalances to the
    maximizer of ``phi^(m-1)``. Item 0 consumes nothing.

    """
    if n >= len(sol.iterates):
        raise NonconvergedInput(
            f'only {len(sol.iterates) - 1} iterates are stored, {n} needed')
    zero = np.zeros_like(sol.phi)
    tables = [PolicyTable(
        z=sol.z, c_star=zero, pi_star=np.zeros(len(zero)),
        pi_index=np.zeros(len(zero), dtype=int), phi_sup=zero.max(axis=1),
        p=prefs.p, rho=prefs.rho)]
    for m in range(1, n + 1):
        tables.append(
            _table(sol.z, sol.iterates[m], sol.iterates[m - 1], prefs))
    return tables


def value_at(sol, i, x, y):
    """Value ``U(x + y) * phi_i(y / (x + y))`` of regime ``i``."""
    wealth = x + y
    if wealth == 0:
        return 0.
    return float(
        utility(wealth, sol.model.p) *
        np.interp(y / wealth, sol.z, sol.phi[i]))


def liquidity_cost(sol, bench, prefs):
    """Extra wealth fraction ``P_i(1)`` of every regime.

    Both sides use the best initial allocation, so that
    ``U(1 + P) max phi_i = U(1) phi_m[i]`` and ``P(x) = x P(1)``.

    """
    phi_m = np.asarray(bench.phi_m, dtype=float)
    if len(phi_m) != len(sol.phi):
        raise ValueError('benchmark and grid solution have different regimes')
    phi_sup = sol.phi_sup
    cost = (phi_m / phi_sup) ** (1 / prefs.p) - 1
    return LiquidityCostReport(
        cost=tuple(float(value) for value in cost),
        phi_sup=tuple(float(value) for value in phi_sup),
        phi_m=tuple(float(value) for value in phi_m),
        lam=tuple(float(value) for value in sol.model.lam),
        p=prefs.p, rho=prefs.rho, n_points=len(sol.z))

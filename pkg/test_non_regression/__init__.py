"""
Liquidswitch numerical test suite.

Shared market parameters and cached grid solutions.

"""

import os
from functools import lru_cache

import numpy as np

import liquidswitch  # noqa
from liquidswitch.model import CrraParams, MarketModel, validate_model
from liquidswitch.policy import PolicyTable
from liquidswitch.simulator import SimConfig
from liquidswitch.solver import GridConfig, solve_phi

PREFS = CrraParams(p=0.5, rho=0.2)
B, SIGMA = 0.4, 1.

# Fine grid of the reference values, coarse grid of the property tests
GRID = GridConfig(n_points=2001, max_outer=20000)
COARSE = GridConfig(n_points=401, max_outer=20000)

if os.environ.get('LIQUIDSWITCH_TEST_POINTS'):  # pragma: no cover
    GRID = GridConfig(
        n_points=int(os.environ['LIQUIDSWITCH_TEST_POINTS']),
        max_outer=20000)

# Monte Carlo sizes of the simulator tests
FAST = SimConfig(n_paths=2000, horizon=40., dt=5e-3, seed=7)

if os.environ.get('LIQUIDSWITCH_TEST_FULL_MONTE_CARLO'):  # pragma: no cover
    FAST = SimConfig(
        n_paths=100000, horizon=60., dt=1e-3, seed=7, workers=4)


def single_regime(lam, sigma=SIGMA, b=B):
    return MarketModel(q=((0.,),), lam=(lam,), b=(b,), sigma=(sigma,))


def two_regimes(lam=(1., 1.), sigma=(1., 2.), rate=1., gamma=0.):
    return MarketModel(
        q=((-rate, rate), (rate, -rate)), lam=tuple(lam), b=(B, B),
        sigma=tuple(sigma), gamma=((0., gamma), (gamma, 0.)))


@lru_cache(maxsize=None)
def validated(model):
    return validate_model(model, PREFS)


@lru_cache(maxsize=None)
def solved(model, grid=COARSE):
    """Grid solution of ``model``, computed once per test session."""
    return solve_phi(validated(model), grid)


def still_policy(d=1, n_points=3):
    """Policy holding cash only and consuming nothing."""
    return PolicyTable(
        z=np.linspace(0, 1, n_points), c_star=np.zeros((d, n_points)),
        pi_star=np.zeros(d), pi_index=np.zeros(d, dtype=int),
        phi_sup=np.ones(d), p=PREFS.p, rho=PREFS.rho)


"""
Merton benchmarks for a perfectly liquid market.

With continuous trading and no jumps, the value in regime ``i`` is
``U(r) * phi_m[i]`` where ``phi_m`` is the positive root of a coupled
nonlinear system; a single regime has a closed form.

"""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200
MAX_HALVINGS = 30
RESIDUAL_TOLERANCE = 1e-10


class MertonError(ArithmeticError):
    """Exception raised when a Merton benchmark cannot be computed."""


class IllPosed(MertonError):
    """The effective discount rate is not positive."""


class NoConvergence(MertonError):
    """Newton iterations did not reach the residual tolerance."""

    def __init__(self, residual):
        super().__init__(
            f'Merton system did not converge, last residual {residual:.3e}')
        self.residual = residual


class NonpositiveIterate(MertonError):
    """Damping could not keep the Newton iterate positive."""


@dataclass(frozen=True)
class MertonSolution:
    """Values, proportions and consumption fractions per regime."""
    phi_m: tuple
    pi_m: tuple
    c_m: tuple
    residual: float

    def as_dict(self):
        return {
            'phi_m': list(self.phi_m), 'pi_m': list(self.pi_m),
            'c_m': list(self.c_m), 'residual': self.residual}


def merton_proportion(b, sigma, p):
    """Optimal unconstrained proportion ``b / ((1 - p) sigma**2)``."""
    return b / ((1 - p) * sigma ** 2)


def consumption_fraction(phi, p):
    """Consumption per unit of wealth for a value ``U(r) * phi``.

    First order condition of ``U(c) - c d/dr (U(r) phi)`` in ``c``: the rate
    is ``phi ** (-1 / (1 - p))``, ``phi ** -2`` for ``p = 1/2``.

    """
    return np.asarray(phi, dtype=float) ** (-1 / (1 - p))


def _risk_premium(b, sigma, p):
    return p * b ** 2 / (2 * sigma ** 2 * (1 - p))


def merton_single(b, sigma, prefs):
    """Closed-form Merton benchmark for one regime."""
    p, rho = prefs.p, prefs.rho
    if not sigma > 0:
        raise IllPosed(f'volatility must be > 0, got {sigma!r}')
    effective = rho - _risk_premium(b, sigma, p)
    if effective <= 0:
        raise IllPosed(f'effective discount rate {effective!r} <= 0')
    phi = ((1 - p) / effective) ** (1 - p)
    residual = abs(effective * phi - (1 - p) * phi ** (-p / (1 - p)))
    return MertonSolution(
        phi_m=(phi,), pi_m=(merton_proportion(b, sigma, p),),
        c_m=(float(consumption_fraction(phi, p)),), residual=residual)


def system_residual(phi, model):
    """Residual of the coupled Merton system at ``phi``."""
    p, rho = model.p, model.rho
    diagonal = rho - np.diag(model.q) - _risk_premium(
        model.b, model.sigma, p)
    coupling = (model.q - np.diag(np.diag(model.q))) @ phi
    return diagonal * phi - (1 - p) * phi ** (-p / (1 - p)) - coupling


def merton_multi(model):
    """Solve the coupled Merton system by damped Newton iterations.

    The initial guess is the single-regime value of each regime; steps are
    halved until the iterate stays positive and the residual decreases.

    """
    p = model.p
    if not np.all(model.sigma > 0):
        raise IllPosed('every volatility must be > 0')
    phi = np.array([
        merton_single(b, sigma, model.prefs).phi_m[0]
        for b, sigma in zip(model.b, model.sigma)])
    diagonal = model.rho - np.diag(model.q) - _risk_premium(
        model.b, model.sigma, p)
    off_diagonal = model.q - np.diag(np.diag(model.q))

    residual = system_residual(phi, model)
    norm = np.max(np.abs(residual))
    for _ in range(MAX_ITERATIONS):
        if norm < RESIDUAL_TOLERANCE:
            break
        jacobian = np.diag(diagonal + p * phi ** (-1 / (1 - p)))
        jacobian -= off_diagonal
        step = np.linalg.solve(jacobian, -residual)
        scale = 1.
        for _ in range(MAX_HALVINGS):
            candidate = phi + scale * step
            if np.all(candidate > 0):
                candidate_residual = system_residual(candidate, model)
                candidate_norm = np.max(np.abs(candidate_residual))
                if candidate_norm < norm:
                    break
            scale /= 2
        else:
            if not np.all(candidate > 0):
                raise NonpositiveIterate(
                    'damping could not keep the Merton iterate positive')
            raise NoConvergence(norm)
        phi, residual, norm = candidate, candidate_residual, candidate_norm
    if norm >= RESIDUAL_TOLERANCE:
        raise NoConvergence(norm)

    logger.debug('Merton system solved, residual %.3e', norm)
    return MertonSolution(
        phi_m=tuple(float(value) for value in phi),
        pi_m=tuple(
            float(merton_proportion(b, sigma, p))
            for b, sigma in zip(model.b, model.sigma)),
        c_m=tuple(float(value) for value in consumption_fraction(phi, p)),
        residual=float(norm))

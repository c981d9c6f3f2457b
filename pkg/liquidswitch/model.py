"""
Market model, CRRA preferences and their validation.

A market has ``d`` regimes driven by a Markov chain with generator ``q``. In
regime ``i`` the stock has drift ``b[i]`` and volatility ``sigma[i]``, trading
is only possible at the jump times of a Cox process with intensity
``lam[i]``, and a switch ``i -> j`` multiplies the stock price by
``1 - gamma[i][j]``.

"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import golden

GENERATOR_TOLERANCE = 1e-14
SCAN_STEP = 1e-3
GOLDEN_TOLERANCE = 1e-12


class ModelError(ValueError):
    """Exception raised when market parameters are inconsistent."""


class InvalidShape(ModelError):
    """Parameter arrays do not match the regime count."""


class InvalidGenerator(ModelError):
    """Generator has negative rates or rows not summing to zero."""


class InvalidGamma(ModelError):
    """A relative jump loss is not smaller than 1."""


class InvalidIntensity(ModelError):
    """A trading intensity is not positive."""


class InvalidVolatility(ModelError):
    """A volatility is negative."""


class DiscountTooSmall(ModelError):
    """The discount rate does not exceed the growth constant k(p)."""

    def __init__(self, rho, k):
        super().__init__(
            f'discount rate rho={rho!r} must exceed k(p)={k!r}')
        self.rho = rho
        self.k = k


class NonpositiveArgument(ValueError):
    """The dual utility is infinite for nonpositive arguments."""


@dataclass(frozen=True)
class MarketModel:
    """Raw, possibly inconsistent, market parameters."""
    q: tuple
    lam: tuple
    b: tuple
    sigma: tuple
    gamma: tuple = None

    @property
    def d(self):
        return len(self.b)


@dataclass(frozen=True)
class CrraParams:
    """Power utility ``U(x) = x**p / p`` discounted at rate ``rho``."""
    p: float
    rho: float


@dataclass(frozen=True, eq=False)
class ValidatedModel:
    """Market and preferences that passed :func:`validate_model`.

    Arrays are read-only; the generator diagonal is rebuilt from the
    off-diagonal rates.

    """
    q: np.ndarray
    lam: np.ndarray
    b: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    prefs: CrraParams
    k: float

    @property
    def d(self):
        return len(self.b)

    @property
    def p(self):
        return self.prefs.p

    @property
    def rho(self):
        return self.prefs.rho

    def off_diagonal(self):
        """Yield ``(i, j)`` for every pair of distinct regimes."""
        for i in range(self.d):
            for j in range(self.d):
                if i != j:
                    yield i, j

    def with_intensity(self, lam):
        """Return a validated copy with other trading intensities."""
        return validate_model(
            MarketModel(
                q=self.q.tolist(), lam=tuple(lam), b=tuple(self.b),
                sigma=tuple(self.sigma), gamma=self.gamma.tolist()),
            self.prefs)


def _frozen(array):
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


def _vector(values, d, name):
    array = np.atleast_1d(np.asarray(values, dtype=float))
    if array.shape != (d,):
        raise InvalidShape(f'{name} must have {d} entries, got {array.shape}')
    return array


def _matrix(values, d, name):
    array = np.atleast_2d(np.asarray(values, dtype=float))
    if array.shape != (d, d):
        raise InvalidShape(f'{name} must be {d}x{d}, got {array.shape}')
    return array


def regime_objective(z, i, b, sigma, q, gamma, p):
    """Growth objective of regime ``i`` at stock proportion(s) ``z``."""
    z = np.asarray(z, dtype=float)
    value = p * b[i] * z - 0.5 * sigma[i] ** 2 * p * (1 - p) * z ** 2
    for j in range(len(b)):
        if j != i:
            value = value + q[i][j] * ((1 - z * gamma[i][j]) ** p - 1)
    return value


def growth_rate_argmax(model, p):
    """Return ``(k, regime, z)`` where the growth constant k(p) is reached.

    Each regime objective is scanned on a grid of step ``SCAN_STEP`` and the
    best node is refined by golden-section search when it is a strict
    interior maximum.

    """
    b = np.asarray(model.b, dtype=float)
    sigma = np.asarray(model.sigma, dtype=float)
    d = len(b)
    q = np.asarray(model.q, dtype=float).reshape(d, d)
    gamma = (
        np.zeros((d, d)) if model.gamma is None else
        np.asarray(model.gamma, dtype=float).reshape(d, d))
    grid = np.linspace(0, 1, int(round(1 / SCAN_STEP)) + 1)

    best = (-np.inf, 0, 0.)
    for i in range(d):
        values = regime_objective(grid, i, b, sigma, q, gamma, p)
        index = int(np.argmax(values))
        z_star, k_i = grid[index], float(values[index])
        if 0 < index < len(grid) - 1 and (
                values[index - 1] < k_i > values[index + 1]):
            z_star, minus_k, _ = golden(
                lambda z: -regime_objective(z, i, b, sigma, q, gamma, p),
                brack=tuple(grid[index - 1:index + 2]),
                tol=GOLDEN_TOLERANCE, full_output=True)
            z_star, k_i = float(z_star), max(k_i, -float(minus_k))
        if k_i > best[0]:
            best = (k_i, i, float(z_star))
    return best


def growth_rate_k(model, p):
    """Growth constant k(p) of the p-th moment of wealth."""
    return growth_rate_argmax(model, p)[0]


def dual_utility(ell, p):
    """Convex conjugate of ``U(x) = x**p / p``, ``sup_x U(x) - x * ell``."""
    ell = np.asarray(ell, dtype=float)
    if np.any(ell <= 0):
        raise NonpositiveArgument(f'dual utility needs ell > 0, got {ell!r}')
    value = (1 - p) / p * ell ** (-p / (1 - p))
    return float(value) if value.ndim == 0 else value


def utility(x, p):
    """Power utility ``x**p / p``."""
    return np.asarray(x, dtype=float) ** p / p


def validate_model(model, prefs):
    """Check ``model`` and ``prefs`` and return a :class:`ValidatedModel`."""
    d = model.d
    if d < 1:
        raise InvalidShape('at least one regime is needed')
    if not 0 < prefs.p < 1:
        raise ModelError(f'exponent p must lie in (0, 1), got {prefs.p!r}')

    b = _vector(model.b, d, 'b')
    sigma = _vector(model.sigma, d, 'sigma')
    lam = _vector(model.lam, d, 'lambda')
    q = _matrix(model.q, d, 'q')
    gamma = (
        np.zeros((d, d)) if model.gamma is None else
        _matrix(model.gamma, d, 'gamma'))

    off = ~np.eye(d, dtype=bool)
    if not np.all(np.isfinite(q)):
        raise InvalidGenerator('generator rates must be finite')
    if np.any(q[off] < 0):
        raise InvalidGenerator('off-diagonal generator rates must be >= 0')
    # Only off-diagonal rates are physical
    q[~off] = 0
    q[~off] = -q.sum(axis=1)
    scale = np.maximum(1, np.abs(np.diag(q)))
    if np.any(np.abs(q.sum(axis=1)) > GENERATOR_TOLERANCE * scale):
        raise InvalidGenerator('generator rows must sum to zero')

    if np.any(gamma[off] >= 1) or not np.all(np.isfinite(gamma)):
        raise InvalidGamma('relative jump losses must be < 1')
    if np.any(gamma[~off] != 0):
        raise InvalidGamma('diagonal jump losses must be 0')
    if not np.all(lam > 0) or not np.all(np.isfinite(lam)):
        raise InvalidIntensity('trading intensities must be > 0')
    if np.any(sigma < 0):
        raise InvalidVolatility('volatilities must be >= 0')

    k = growth_rate_k(
        MarketModel(q=q, lam=lam, b=b, sigma=sigma, gamma=gamma), prefs.p)
    if not prefs.rho > k:
        raise DiscountTooSmall(prefs.rho, k)

    return ValidatedModel(
        q=_frozen(q), lam=_frozen(lam), b=_frozen(b), sigma=_frozen(sigma),
        gamma=_frozen(gamma), prefs=prefs, k=k)

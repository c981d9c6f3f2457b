"""
Reduced value functions on a grid of stock proportions.

Under power utility the value in regime ``i`` is ``U(x + y) * phi_i(z)`` with
``z = y / (x + y)``. The functions ``phi_i`` solve a coupled system of
degenerate ODEs on ``[0, 1]`` whose coupling is nonlocal. Starting from
``phi = 0``, each outer iteration freezes the nonlocal terms at the previous
iterate and solves the remaining local ODE of every regime by Newton's method
on a finite-difference grid. Iterates increase towards the solution at a
geometric rate.

"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import bisect, newton

from .helpers import (
    geometric_ratio, second_differences, solve_tridiagonal, uniform_grid)
from .model import dual_utility, utility

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-12
MAX_HALVINGS = 30
SCALAR_ITERATIONS = 100


class SolverError(ArithmeticError):
    """Exception raised when the grid solver fails."""


class InnerNoConvergence(SolverError):
    """Newton iterations of one regime did not converge."""

    def __init__(self, regime, residual):
        super().__init__(
            f'Newton solve of regime {regime} stopped at scaled residual '
            f'{residual:.3e}')
        self.regime = regime
        self.residual = residual


class FloorActiveAtSolution(SolverError):
    """The positivity floor of the consumption argument is still binding."""

    def __init__(self, regime, nodes):
        super().__init__(
            f'consumption argument floored at nodes {list(nodes)} of regime '
            f'{regime}, refine the grid')
        self.regime = regime
        self.nodes = nodes


class NonpositiveCoefficient(SolverError):
    """The linear coefficient of the z = 1 boundary equation is <= 0."""


class OuterNoConvergence(SolverError):
    """The outer iteration hit its cap before reaching the tolerance."""

    def __init__(self, solution):
        super().__init__(
            f'outer iteration stopped after {solution.n_iter} iterations, '
            f'last increment {solution.history[-1]:.3e}')
        self.solution = solution


class MonotonicityViolation(SolverError):
    """An outer iterate decreased somewhere beyond rounding."""

    def __init__(self, iteration, lowest):
        super().__init__(
            f'iterate {iteration} decreased by {-lowest:.3e} at some node')
        self.iteration = iteration
        self.lowest = lowest


@dataclass(frozen=True)
class GridConfig:
    """Grid size, tolerances and iteration caps of :func:`solve_phi`."""
    n_points: int = 2001
    tol_outer: float = 1e-9
    tol_inner: float = 1e-12
    max_outer: int = 500
    max_inner: int = 50
    floor_eps: float = 1e-12
    keep_iterates: int = 64

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError('the grid needs at least 3 points')
        for name in ('tol_outer', 'tol_inner', 'floor_eps'):
            if not getattr(self, name) > 0:
                raise ValueError(f'{name} must be > 0')
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError('iteration caps must be >= 1')
        if self.keep_iterates < 0:
            raise ValueError('keep_iterates must be >= 0')


@dataclass(frozen=True, eq=False)
class IterationState:
    """Previous outer iterate and the nonlocal terms frozen from it."""
    phi_prev: np.ndarray
    rhs: np.ndarray
    sup_phi_prev: np.ndarray

    @classmethod
    def from_iterate(cls, z, phi_prev, model):
        return cls(
            phi_prev=phi_prev, rhs=nonlocal_rhs(z, phi_prev, model),
            sup_phi_prev=phi_prev.max(axis=1))


@dataclass(frozen=True, eq=False)
class GridSolution:
    """Converged (or partial) outer iteration.

    ``iterates[n]`` is the outer iterate ``phi^n`` for the first
    ``GridConfig.keep_iterates`` iterations, ``phi^0 = 0`` included.

    """
    z: np.ndarray
    phi: np.ndarray
    n_iter: int
    history: list
    contraction: float
    converged: bool
    model: object
    min_increments: list = field(default_factory=list)
    iterates: list = field(default_factory=list)

    @property
    def phi_sup(self):
        return self.phi.max(axis=1)

    @property
    def argmax(self):
        # np.argmax keeps the lowest z on plateaus
        return np.argmax(self.phi, axis=1)

    def concavity_defect(self):
        """Largest second difference relative to ``max phi_i``, per regime."""
        return second_differences(self.phi).max(axis=1) / self.phi_sup

    def convergence_report(self):
        """JSON-ready summary of the outer iteration."""
        return {
            'converged': self.converged,
            'n_iter': self.n_iter,
            'contraction_estimate': self.contraction,
            'history': [
                {'iter': index + 1, 'increment': increment,
                 'min_increment': lowest,
                 'contraction_estimate': geometric_ratio(
                     self.history[:index + 1])}
                for index, (increment, lowest) in enumerate(
                    zip(self.history, self.min_increments))],
        }


def warp(z, gamma):
    """Stock proportion right after a jump of relative size ``gamma``."""
    return z * (1 - gamma) / (1 - z * gamma)


def nonlocal_rhs(z, phi_prev, model):
    """Nonlocal right-hand side frozen at the iterate ``phi_prev``."""
    p = model.p
    rhs = np.empty_like(phi_prev)
    for i in range(model.d):
        rhs[i] = model.lam[i] * phi_prev[i].max()
    for i, j in model.off_diagonal():
        rate, gamma = model.q[i, j], model.gamma[i, j]
        if rate == 0:
            continue
        if gamma == 0:
            rhs[i] += rate * phi_prev[j]
        else:
            rhs[i] += rate * (1 - z * gamma) ** p * np.interp(
                warp(z, gamma), z, phi_prev[j])
    return rhs


def _coefficient_z0(i, model):
    return model.rho - model.q[i, i] + model.lam[i]


def _coefficient_z1(i, model):
    p = model.p
    return (
        _coefficient_z0(i, model) - p * model.b[i] +
        0.5 * p * (1 - p) * model.sigma[i] ** 2)


def _local_coefficients(i, z, model):
    """Coefficients of ``phi``, ``phi'`` and ``phi''`` in the local ODE."""
    p, b, sigma2 = model.p, model.b[i], model.sigma[i] ** 2
    zero_order = (
        _coefficient_z0(i, model) - p * b * z + 0.5 * p * (1 - p) * sigma2 *
        z ** 2)
    first_order = z * (1 - z) * (b - z * (1 - p) * sigma2)
    second_order = 0.5 * z ** 2 * (1 - z) ** 2 * sigma2
    return zero_order, first_order, second_order


def boundary_solve_z0(rhs_at_0, i, model):
    """Value ``phi_i(0)`` from the algebraic boundary equation at z = 0.

    The left side ``a phi - (1 - p) phi**(-p / (1 - p))`` increases strictly,
    so the positive root is unique: it is bracketed, bisected, then polished
    by Newton.

    """
    p = model.p
    a = _coefficient_z0(i, model)
    exponent = -p / (1 - p)

    def equation(phi):
        return a * phi - (1 - p) * phi ** exponent - rhs_at_0

    def derivative(phi):
        return a + p * phi ** (exponent - 1)

    low = 0.5 * ((1 - p) / a) ** (1 - p)
    high = 2 * max(rhs_at_0 / a, ((1 - p) / a) ** (1 - p)) + 1
    root = bisect(equation, low, high, xtol=1e-8 * high)
    return float(newton(
        equation, root, fprime=derivative, tol=1e-14, rtol=1e-13,
        disp=False))


def boundary_solve_z1(coupling, i, model):
    """Value ``phi_i(1)`` from the linear boundary equation at z = 1."""
    coefficient = _coefficient_z1(i, model)
    if not coefficient > 0:
        raise NonpositiveCoefficient(
            f'z = 1 coefficient {coefficient!r} of regime {i} is not > 0')
    return coupling / coefficient


def scalar_guess(coefficient, rhs, p):
    """Solve ``a phi - (1 - p) phi**(-p / (1 - p)) = rhs`` nodewise.

    Newton steps started left of the root increase monotonically towards it
    since the left side is concave and increasing.

    """
    exponent = -p / (1 - p)
    phi = 0.5 * ((1 - p) / coefficient) ** (1 - p)
    for _ in range(SCALAR_ITERATIONS):
        value = coefficient * phi - (1 - p) * phi ** exponent - rhs
        step = value / (coefficient + p * phi ** (exponent - 1))
        phi = phi - step
        if np.all(np.abs(step) <= 1e-15 * phi):
            break
    return phi


def consumption_argument(phi, z, p):
    """Interior values of ``phi - z phi' / p`` by central differences."""
    h = z[1] - z[0]
    slope = (phi[..., 2:] - phi[..., :-2]) / (2 * h)
    return phi[..., 1:-1] - z[1:-1] / p * slope


def warm_starts(i, rhs, previous, z, model, boundary):
    """Starting points of the Newton solve of regime ``i``.

    ``boundary`` holds the new values at z = 0 and z = 1. The candidates
    are the previous iterate shifted linearly onto them, the nodewise
    scalar guess, and the running minimum of the scalar guess, which is
    non-increasing so its consumption argument is positive.

    """
    left, right = boundary
    shifted = previous + (left - previous[0]) * (1 - z) + (
        right - previous[-1]) * z
    scalar = scalar_guess(_local_coefficients(i, z, model)[0], rhs, model.p)
    scalar[0], scalar[-1] = left, right
    falling = np.maximum(np.minimum.accumulate(scalar), right)
    falling[0], falling[-1] = left, right
    return shifted, scalar, falling


def _linearize(phi, rhs, coefficients, z, h, p, floor):
    """Residual and tridiagonal Jacobian of the interior equations."""
    zero_order, first_order, second_order = coefficients
    zi = z[1:-1]
    left, middle, right = phi[:-2], phi[1:-1], phi[2:]
    slope = (right - left) / (2 * h)
    curvature = (right - 2 * middle + left) / h ** 2
    argument = middle - zi / p * slope
    active = argument > floor
    clamped = np.where(active, argument, floor)

    residual = (
        zero_order * middle - first_order * slope -
        second_order * curvature - (1 - p) * clamped ** (-p / (1 - p)) -
        rhs[1:-1])
    gain = np.where(active, p * clamped ** (-1 / (1 - p)), 0)
    diagonal = zero_order + 2 * second_order / h ** 2 + gain
    upper = (
        -first_order / (2 * h) - second_order / h ** 2 -
        gain * zi / (2 * h * p))
    lower = (
        first_order / (2 * h) - second_order / h ** 2 +
        gain * zi / (2 * h * p))
    return residual, lower, diagonal, upper, ~active


def _scaled_norm(residual, diagonal):
    return np.max(np.abs(residual) / np.abs(diagonal))


def _newton_start(i, rhs, previous, z, model, linearize):
    boundary = (
        boundary_solve_z0(rhs[0], i, model),
        boundary_solve_z1(rhs[-1], i, model))
    best = None
    for guess in warm_starts(i, rhs, previous, z, model, boundary):
        terms = linearize(guess)
        if np.any(terms[4]) or np.any(guess[1:-1] <= 0):
            continue
        norm = _scaled_norm(terms[0], terms[2])
        if best is None or norm < best[2]:
            best = guess, terms, norm
    if best is None:
        raise FloorActiveAtSolution(i, np.flatnonzero(terms[4]) + 1)
    return best


def _newton_regime(i, rhs, previous, z, model, cfg):
    """Newton solve of the local ODE of regime ``i``.

    Every accepted step keeps the consumption argument above the floor and
    lowers the residual, weighted by the Jacobian diagonal of the current
    iterate.

    """
    p = model.p
    h = z[1] - z[0]
    coefficients = tuple(
        array[1:-1] for array in _local_coefficients(i, z, model))

    def linearize(phi):
        return _linearize(phi, rhs, coefficients, z, h, p, cfg.floor_eps)

    phi, terms, norm = _newton_start(i, rhs, previous, z, model, linearize)
    for _ in range(cfg.max_inner):
        if norm < cfg.tol_inner:
            break
        residual, lower, diagonal, upper, _ = terms
        step = solve_tridiagonal(lower, diagonal, upper, -residual)
        if np.max(np.abs(step)) <= cfg.tol_inner * np.max(phi):
            # Rounding floor reached
            phi = phi.copy()
            phi[1:-1] += step
            terms = linearize(phi)
            norm = _scaled_norm(terms[0], terms[2])
            break
        weights = 1 / np.abs(diagonal)
        scale = 1.
        for _ in range(MAX_HALVINGS):
            candidate = phi.copy()
            candidate[1:-1] += scale * step
            if np.all(candidate[1:-1] > 0):
                candidate_terms = linearize(candidate)
                if (not np.any(candidate_terms[4]) and
                        np.max(np.abs(candidate_terms[0]) * weights) < norm):
                    break
            scale /= 2
        else:
            raise InnerNoConvergence(i, norm)
        phi, terms = candidate, candidate_terms
        norm = _scaled_norm(terms[0], terms[2])
    else:
        if norm >= cfg.tol_inner:
            raise InnerNoConvergence(i, norm)

    floored = np.flatnonzero(terms[4]) + 1
    if len(floored):
        raise FloorActiveAtSolution(i, floored)
    return phi


def inner_solve(rhs, previous, z, model, cfg):
    """Next outer iterate: solve the local ODE of every regime.

    ``previous`` is the current outer iterate, used to build the starting
    point of Newton's method. Regimes are independent once the nonlocal
    terms are frozen; they are solved one after the other in regime order.

    """
    return np.array([
        _newton_regime(i, rhs[i], previous[i], z, model, cfg)
        for i in range(model.d)])


def solve_phi(model, cfg=None):
    """Run the outer iteration from ``phi = 0`` until the increment is small.

    Raise :class:`OuterNoConvergence` (carrying the partial solution) when
    ``cfg.max_outer`` iterations are not enough.

    """
    cfg = cfg or GridConfig()
    z = uniform_grid(cfg.n_points)
    phi = np.zeros((model.d, cfg.n_points))
    iterates = [phi]
    increments, min_increments = [], []
    converged = False

    for iteration in range(1, cfg.max_outer + 1):
        state = IterationState.from_iterate(z, phi, model)
        new_phi = inner_solve(state.rhs, phi, z, model, cfg)

        difference = new_phi - phi
        lowest = float(difference.min())
        if lowest < -MONOTONE_SLACK * max(1, float(new_phi.max())):
            raise MonotonicityViolation(iteration, lowest)
        increment = float(np.abs(difference).max())
        increments.append(increment)
        min_increments.append(lowest)
        phi = new_phi
        if iteration <= cfg.keep_iterates:
            iterates.append(phi)

        if iteration % 100 == 0:
            logger.debug(
                'outer iteration %d, increment %.3e', iteration, increment)
        if increment < cfg.tol_outer:
            converged = True
            break

    solution = GridSolution(
        z=z, phi=phi, n_iter=len(increments), history=increments,
        contraction=geometric_ratio(increments), converged=converged,
        model=model, min_increments=min_increments, iterates=iterates)
    if not converged:
        raise OuterNoConvergence(solution)
    logger.info(
        'converged in %d outer iterations, contraction %.4f, max phi %s',
        solution.n_iter, solution.contraction, solution.phi_sup)
    return solution


class _Reconstruction:
    """Smooth value functions ``v_i(x, y)`` rebuilt from a grid solution."""

    def __init__(self, solution):
        self.model = solution.model
        self.splines = [CubicSpline(solution.z, row) for row in solution.phi]
        self.phi_sup = solution.phi_sup

    def value(self, i, x, y):
        r = x + y
        return utility(r, self.model.p) * self.splines[i](y / r)

    def best(self, i, r):
        return utility(r, self.model.p) * self.phi_sup[i]


def hjb_residual_at(solution, i, x, y, reconstruction=None, step=1e-4):
    """HJB residual of regime ``i`` at ``(x, y)``, relative to ``rho v``.

    Derivatives are central finite differences of the spline
    reconstruction with a step proportional to ``x + y``.

    """
    reconstruction = reconstruction or _Reconstruction(solution)
    model = reconstruction.model
    r = x + y
    e = step * r
    value = reconstruction.value

    v = value(i, x, y)
    v_x = (value(i, x + e, y) - value(i, x - e, y)) / (2 * e)
    v_y = (value(i, x, y + e) - value(i, x, y - e)) / (2 * e)
    v_yy = (value(i, x, y + e) - 2 * v + value(i, x, y - e)) / e ** 2

    residual = (
        model.rho * v - model.b[i] * y * v_y -
        0.5 * model.sigma[i] ** 2 * y ** 2 * v_yy -
        dual_utility(v_x, model.p))
    for j in range(model.d):
        if j != i:
            jumped = value(j, x, y * (1 - model.gamma[i, j]))
            residual -= model.q[i, j] * (jumped - v)
    residual -= model.lam[i] * (reconstruction.best(i, r) - v)
    return float(abs(residual) / (model.rho * v))


def hjb_residual(solution, samples=1000, seed=0, z_range=(0.02, 0.95)):
    """Residual statistics of the 2D HJB system at random interior points."""
    rng = np.random.default_rng(seed)
    wealth = rng.uniform(0.5, 2, samples)
    proportion = rng.uniform(*z_range, samples)
    reconstruction = _Reconstruction(solution)
    residuals = np.array([
        hjb_residual_at(
            solution, i, r * (1 - z), r * z, reconstruction=reconstruction)
        for r, z in zip(wealth, proportion)
        for i in range(solution.model.d)])
    return {
        'max': float(residuals.max()), 'mean': float(residuals.mean()),
        'samples': int(residuals.size)}


def self_convergence(model, cfg=None, levels=3):
    """Solve on successive grid halvings and estimate the order in ``h``.

    Grids keep their nodes: ``n -> 2 n - 1``.

    """
    cfg = cfg or GridConfig()
    sizes, maxima = [], []
    n_points = cfg.n_points
    for _ in range(levels):
        level_cfg = replace(cfg, n_points=n_points)
        maxima.append(float(solve_phi(model, level_cfg).phi_sup.max()))
        sizes.append(n_points)
        n_points = 2 * n_points - 1
    differences = np.abs(np.diff(maxima))
    orders = [
        float(np.log2(coarse / fine))
        for coarse, fine in zip(differences[:-1], differences[1:])
        if coarse > 0 and fine > 0]
    return {'n_points': sizes, 'max_phi': maxima, 'orders': orders}

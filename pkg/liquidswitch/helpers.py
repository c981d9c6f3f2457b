"""
Numerical helpers.

"""

import numpy as np
from scipy.linalg import solve_banded


def uniform_grid(n_points):
    """Return ``n_points`` equally spaced nodes on ``[0, 1]``."""
    return np.linspace(0, 1, n_points)


def solve_tridiagonal(lower, diagonal, upper, rhs):
    """Solve a tridiagonal system.

    ``lower[k]`` multiplies the unknown ``k - 1`` in row ``k`` and
    ``upper[k]`` multiplies the unknown ``k + 1``: ``lower[0]`` and
    ``upper[-1]`` are ignored.

    """
    size = len(diagonal)
    banded = np.zeros((3, size))
    banded[0, 1:] = upper[:-1]
    banded[1] = diagonal
    banded[2, :-1] = lower[1:]
    return solve_banded((1, 1), banded, rhs, check_finite=False)


def interpolate_rows(values, rows, z):
    """Linearly interpolate ``values[rows]`` on a uniform grid of ``[0, 1]``.

    ``values`` has shape ``(m, n)`` and each point ``z[k]`` is read on row
    ``rows[k]``. ``z`` is clamped to ``[0, 1]``.

    """
    n_cells = values.shape[-1] - 1
    position = np.clip(z, 0, 1) * n_cells
    index = np.minimum(position.astype(int), n_cells - 1)
    weight = position - index
    return (
        values[rows, index] * (1 - weight) +
        values[rows, index + 1] * weight)


def geometric_ratio(increments, window=10):
    """Geometric mean of successive ratios over the last ``window`` ratios."""
    increments = np.asarray(increments[-(window + 1):], dtype=float)
    if len(increments) < 2 or np.any(increments <= 0):
        return float('nan')
    ratios = increments[1:] / increments[:-1]
    return float(np.exp(np.mean(np.log(ratios))))


def second_differences(values):
    """Return the discrete second differences at interior nodes."""
    return values[..., 2:] - 2 * values[..., 1:-1] + values[..., :-2]

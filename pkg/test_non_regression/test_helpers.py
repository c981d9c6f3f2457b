"""
Liquidswitch helpers tests.

"""

import numpy as np
import pytest

from . import liquidswitch

helpers = liquidswitch.helpers


def test_uniform_grid():
    """Test ``helpers.uniform_grid``."""
    z = helpers.uniform_grid(5)
    assert z.tolist() == [0, 0.25, 0.5, 0.75, 1]


def test_solve_tridiagonal():
    """Test ``helpers.solve_tridiagonal`` against a dense solve."""
    rng = np.random.default_rng(1)
    size = 7
    lower, upper = rng.uniform(-1, 0, size), rng.uniform(-1, 0, size)
    diagonal = rng.uniform(3, 4, size)
    rhs = rng.normal(size=size)
    dense = (
        np.diag(diagonal) + np.diag(upper[:-1], 1) + np.diag(lower[1:], -1))
    expected = np.linalg.solve(dense, rhs)
    result = helpers.solve_tridiagonal(lower, diagonal, upper, rhs)
    assert np.allclose(result, expected, rtol=1e-13, atol=1e-14)


def test_interpolate_rows():
    """Test ``helpers.interpolate_rows``."""
    values = np.array([[0., 1., 2.], [10., 10., 0.]])
    rows = np.array([0, 1, 1, 0])
    z = np.array([0.25, 0.75, 1., 1.5])
    result = helpers.interpolate_rows(values, rows, z)
    assert result.tolist() == pytest.approx([0.5, 5., 0., 2.])


def test_geometric_ratio():
    """Test ``helpers.geometric_ratio``."""
    increments = [0.5 ** n for n in range(30)]
    assert helpers.geometric_ratio(increments) == pytest.approx(0.5)
    assert helpers.geometric_ratio(increments, window=3) == pytest.approx(0.5)
    assert np.isnan(helpers.geometric_ratio([1.]))
    assert np.isnan(helpers.geometric_ratio([1., 0.]))


def test_second_differences():
    """Test ``helpers.second_differences``."""
    values = np.arange(6.) ** 2
    assert helpers.second_differences(values).tolist() == [2, 2, 2, 2]

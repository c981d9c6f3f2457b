"""
Market model validation tests.

"""

import numpy as np
import pytest

from . import PREFS, single_regime, two_regimes, validated
from . import liquidswitch

model = liquidswitch.model


def test_validated_arrays():
    """Validated arrays are read-only and the diagonal is rebuilt."""
    raw = model.MarketModel(
        q=((5., 1.), (2., 0.)), lam=(1., 2.), b=(0.4, 0.4), sigma=(1., 2.))
    result = model.validate_model(raw, PREFS)
    assert result.q.tolist() == [[-1., 1.], [2., -2.]]
    assert result.gamma.tolist() == [[0., 0.], [0., 0.]]
    assert result.d == 2 and result.p == 0.5 and result.rho == 0.2
    with pytest.raises(ValueError):
        result.lam[0] = 3.


@pytest.mark.parametrize('raw, error', (
    (model.MarketModel(
        q=((0., -1.), (1., 0.)), lam=(1., 1.), b=(0.4, 0.4),
        sigma=(1., 1.)), model.InvalidGenerator),
    (model.MarketModel(
        q=((0., np.inf), (1., 0.)), lam=(1., 1.), b=(0.4, 0.4),
        sigma=(1., 1.)), model.InvalidGenerator),
    (model.MarketModel(
        q=((0., 1.), (1., 0.)), lam=(1., 1.), b=(0.4, 0.4), sigma=(1., 1.),
        gamma=((0., 1.), (0., 0.))), model.InvalidGamma),
    (model.MarketModel(
        q=((0., 1.), (1., 0.)), lam=(1., 1.), b=(0.4, 0.4), sigma=(1., 1.),
        gamma=((0.5, 0.), (0., 0.))), model.InvalidGamma),
    (single_regime(0.), model.InvalidIntensity),
    (single_regime(-1.), model.InvalidIntensity),
    (single_regime(1., sigma=-1.), model.InvalidVolatility),
    (model.MarketModel(
        q=((0.,),), lam=(1., 1.), b=(0.4,), sigma=(1.,)), model.InvalidShape),
    (model.MarketModel(
        q=((0., 0.), (0., 0.)), lam=(1.,), b=(0.4,), sigma=(1.,)),
     model.InvalidShape),
))
def test_invalid_models(raw, error):
    """Inconsistent parameters raise the matching error."""
    with pytest.raises(error):
        model.validate_model(raw, PREFS)
    assert issubclass(error, model.ModelError)


@pytest.mark.parametrize('p', (0., 1., -0.5, 1.5))
def test_invalid_exponent(p):
    """The utility exponent lies in (0, 1)."""
    with pytest.raises(model.ModelError):
        model.validate_model(single_regime(1.), model.CrraParams(p, 0.2))


def test_discount_too_small():
    """The discount rate must exceed the growth constant."""
    with pytest.raises(model.DiscountTooSmall) as info:
        model.validate_model(single_regime(1.), model.CrraParams(0.5, 0.05))
    assert info.value.k == pytest.approx(0.08, abs=1e-12)
    assert info.value.rho == 0.05


@pytest.mark.parametrize('sigma, k, z_star', (
    (1., 0.08, 0.8),
    (2., 0.02, 0.2),
    (0.5, 0.16875, 1.),
))
def test_growth_rate_single(sigma, k, z_star):
    """Growth constant of one regime without jumps."""
    result = model.growth_rate_argmax(single_regime(1., sigma=sigma), 0.5)
    assert result[0] == pytest.approx(k, abs=1e-12)
    assert result[1] == 0
    assert result[2] == pytest.approx(z_star, abs=1e-6)


def test_growth_rate_jumps():
    """Price jumps lower the objective of stock-heavy proportions."""
    without = model.growth_rate_k(two_regimes(), 0.5)
    with_jumps = model.growth_rate_k(two_regimes(gamma=0.5), 0.5)
    assert without == pytest.approx(0.08, abs=1e-12)
    assert with_jumps < without


def test_regime_objective():
    """Test ``model.regime_objective``."""
    values = model.regime_objective(
        np.array([0., 1.]), 0, [0.4, 0.4], [1., 2.], [[-1., 1.], [1., -1.]],
        [[0., 0.75], [0.75, 0.]], 0.5)
    assert values[0] == 0
    assert values[1] == pytest.approx(0.2 - 0.125 + (0.5 - 1))


def test_validated_copy():
    """``with_intensity`` keeps every other parameter."""
    base = validated(two_regimes(gamma=0.2))
    copy = base.with_intensity((5., 6.))
    assert copy.lam.tolist() == [5., 6.]
    assert np.array_equal(copy.q, base.q)
    assert np.array_equal(copy.gamma, base.gamma)
    assert copy.k == base.k


def test_utilities():
    """Test ``model.utility`` and ``model.dual_utility``."""
    assert model.utility(4., 0.5) == 4.
    assert model.dual_utility(1., 0.5) == 1.
    assert model.dual_utility(0.25, 0.5) == pytest.approx(4.)
    assert model.dual_utility(
        np.array([1., 4.]), 0.5).tolist() == pytest.approx([1., 0.25])
    with pytest.raises(model.NonpositiveArgument):
        model.dual_utility(0., 0.5)


@pytest.mark.parametrize('p', (0.2, 0.5, 0.8))
def test_fenchel_inequality(p):
    """Utility lies below its conjugate plus the linear term."""
    rng = np.random.default_rng(11)
    x = 10 ** rng.uniform(-3, 3, 10000)
    ell = 10 ** rng.uniform(-3, 3, 10000)
    bound = model.dual_utility(ell, p) + x * ell
    assert np.all(model.utility(x, p) <= bound * (1 + 1e-12))
    best = ell ** (-1 / (1 - p))
    assert model.utility(best, p) == pytest.approx(
        model.dual_utility(ell, p) + best * ell, rel=1e-12)

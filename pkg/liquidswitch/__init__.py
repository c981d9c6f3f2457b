"""
Liquidswitch - Optimal consumption and investment in an illiquid market.

"""

from pathlib import Path

ROOT = Path(__file__).resolve().parent

VERSION = __version__ = (ROOT / 'VERSION').read_text().strip()


from . import commands  # noqa isort:skip
from .model import validate_model  # noqa isort:skip
from .policy import liquidity_cost  # noqa isort:skip
from .solver import solve_phi  # noqa isort:skip


COMMANDS = {
    'solve': commands.cmd_solve,
    'merton': commands.cmd_merton,
    'cost': commands.cmd_cost,
    'simulate': commands.cmd_simulate,
    'validate': commands.cmd_validate,
}


def solve(model, prefs, grid=None):
    """Validate ``model`` and ``prefs`` and solve the grid problem.

    ``grid`` is a :class:`liquidswitch.solver.GridConfig`, the defaults are
    used when it is ``None``. Return a
    :class:`liquidswitch.solver.GridSolution`.

    """
    return solve_phi(validate_model(model, prefs), grid)


def cost_of_liquidity(model, prefs, grid=None):
    """Return the :class:`liquidswitch.policy.LiquidityCostReport`."""
    validated = validate_model(model, prefs)
    sol = solve_phi(validated, grid)
    return liquidity_cost(sol, commands.benchmark(validated), prefs)

"""
Commands writing the result files of a run.

Each command takes a :class:`RunConfig` and an optional list of sweep
overrides, writes its files in ``config.output.directory`` and returns the
data it wrote.

"""

import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import export
from .config import ConfigError
from .merton import merton_multi, merton_single
from .model import growth_rate_argmax, utility
from .policy import extract_policy, iterate_policies, liquidity_cost, value_at
from .simulator import (
    CheckReport, check_boundary_identity, check_supermartingale,
    simulate_truncated, simulate_value)
from .solver import OuterNoConvergence, solve_phi

logger = logging.getLogger(__name__)

HARD_DIAGNOSTICS = (
    'short_sale_violations', 'jump_mismatch', 'zero_wealth',
    'negative_wealth')


class ValidationFailed(Exception):
    """At least one Monte Carlo check failed."""

    def __init__(self, names):
        super().__init__(f'failed checks: {", ".join(names)}')
        self.names = names


def _output(config, name):
    directory = Path(config.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory / name


def _write_json(config, name, data):
    if 'json' in config.output.formats:
        export.write_json(_output(config, name), data)


def _write_resolved(config, sweep=None):
    export.write_json(
        _output(config, 'resolved_config.json'), config.to_dict())
    if sweep:
        export.write_json(_output(config, 'resolved_sweep.json'), sweep)


def benchmark(model):
    """Merton benchmark of a validated model, closed form for one regime."""
    if model.d == 1:
        return merton_single(model.b[0], model.sigma[0], model.prefs)
    return merton_multi(model)


def _solve(config):
    model = config.validated()
    try:
        return solve_phi(model, config.grid)
    except OuterNoConvergence as exception:
        _write_json(
            config, 'convergence.json',
            exception.solution.convergence_report())
        raise


def cmd_solve(config, sweep=None):
    """Solve the grid problem, write values, policies and convergence.

    With a sweep, every row is written in its own ``row_<index>``
    subdirectory.

    """
    if sweep:
        _write_resolved(config, sweep)
        directory = Path(config.output.directory)
        return [
            cmd_solve(replace(
                config.with_model(override, f'sweep[{index}]'),
                output=replace(
                    config.output,
                    directory=str(directory / f'row_{index}'))))
            for index, override in enumerate(sweep)]
    _write_resolved(config)
    sol = _solve(config)
    table = extract_policy(sol, config.prefs)
    if 'csv' in config.output.formats:
        export.write_phi(_output(config, 'phi.csv'), sol)
        export.write_policy(
            _output(config, 'policy.csv'), _output(config, 'policy.json'),
            table)
    report = sol.convergence_report()
    _write_json(config, 'convergence.json', report)
    return report


def cmd_merton(config, sweep=None):
    """Write the Merton benchmark of every regime."""
    _write_resolved(config)
    data = benchmark(config.validated()).as_dict()
    _write_json(config, 'merton.json', data)
    return data


def cmd_cost(config, sweep=None):
    """Write the cost of liquidity, one row per sweep entry."""
    _write_resolved(config, sweep)
    rows = []
    for index, override in enumerate(sweep or [{}]):
        row_config = config.with_model(override, f'sweep[{index}]')
        model = row_config.validated()
        sol = _solve(row_config)
        bench = benchmark(model)
        report = liquidity_cost(sol, bench, row_config.prefs)
        logger.info('lambda %s: P(1) = %s', report.lam, report.cost)
        rows.append({
            **report.as_dict(), 'sigma': list(model.sigma),
            'b': list(model.b), 'n_iter': sol.n_iter,
            'merton': bench.as_dict()})
    data = {'rows': rows}
    _write_json(config, 'cost.json', data)
    return data


def _value_check(name, result, reference, slack=0.):
    gap = abs(result.estimate - reference)
    return CheckReport(
        name=name, estimate=result.estimate, reference=reference,
        std_err=result.std_err,
        passed=bool(gap <= 3 * result.std_err + slack + 1e-12 * reference),
        details=result.as_dict())


def cmd_simulate(config, sweep=None):
    """Run the Monte Carlo value estimate and its identity checks."""
    if config.sim is None:
        raise ConfigError('missing section', 'sim')
    _write_resolved(config)
    model, prefs, sim = config.validated(), config.prefs, config.sim
    sol = _solve(config)
    table = extract_policy(sol, prefs)
    i, r = config.init.regime, config.init.wealth
    if not 0 <= i < model.d:
        raise ConfigError(f'regime {i} out of range', 'sim.init.regime')
    z = table.pi_star[i] if config.init.z is None else config.init.z
    init = (i, r, float(z))

    result = simulate_value(model, prefs, table, init, sim)
    reference = value_at(sol, i, r * (1 - z), r * z)
    checks = [_value_check('value', result, reference, result.tail_bound)]

    for n in config.checks.truncated_events:
        if n >= len(sol.iterates):
            logger.warning('iterate %d is not stored, check skipped', n)
            continue
        truncated = simulate_truncated(
            model, prefs, iterate_policies(sol, n, prefs), init,
            replace(sim, truncate_after_events=n, trace_paths=0))
        iterate = sol.iterates[n][i]
        truncated_reference = float(
            utility(r, prefs.p) * np.interp(z, sol.z, iterate))
        checks.append(_value_check(
            f'truncated_{n}', truncated, truncated_reference,
            truncated.tail_bound))

    checks.append(check_boundary_identity(
        model, prefs, sol, config.checks.boundary_y, sim, i=i))
    checks.append(check_supermartingale(
        model, prefs, table, init, config.checks.supermartingale_times,
        replace(sim, trace_paths=0)))

    data = {
        **result.as_dict(), 'reference': reference,
        'checks': [check.as_dict() for check in checks]}
    _write_json(config, 'sim.json', data)
    if result.trace and 'csv' in config.output.formats:
        export.write_trace(_output(config, 'trace.csv'), result.trace)

    failed = [check.name for check in checks if not check.passed]
    failed += [
        name for name in HARD_DIAGNOSTICS if result.diagnostics.get(name)]
    if failed:
        raise ValidationFailed(failed)
    return data


def cmd_validate(config, sweep=None):
    """Check the parameters and report the growth constant k(p)."""
    _write_resolved(config)
    model = config.validated()
    k, regime, z_star = growth_rate_argmax(model, model.p)
    data = {
        'd': model.d, 'k': k, 'k_regime': regime, 'k_argmax': z_star,
        'rho': model.rho,
        'merton': (
            benchmark(model).as_dict() if np.all(model.sigma > 0) else None)}
    _write_json(config, 'validation.json', data)
    return data

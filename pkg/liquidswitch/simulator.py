"""
Monte Carlo of the controlled regime-switching market.

Regime switches and trading times are drawn exactly as competing exponential
clocks, the wealth ``R`` and stock proportion ``Z`` follow the feedback
dynamics by Euler steps between events, and discounted utility accrues by
left-point quadrature. Paths are simulated in vectorized blocks, each block
owning its random stream, so results do not depend on the worker count.

"""

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .helpers import interpolate_rows
from .model import utility
from .policy import PolicyTable, value_at

logger = logging.getLogger(__name__)

MAX_EXPECTED_EVENTS = 1e6
MAX_TRACE_PATHS = 100
JUMP_TOLERANCE = 1e-12
BOUNDARY_STREAM = 2 ** 32

DIAGNOSTICS = (
    'z_clamped', 'short_sale_violations', 'jump_mismatch', 'zero_wealth',
    'negative_wealth', 'rejected_paths')


class SimulationError(ArithmeticError):
    """Exception raised when a simulation cannot produce an estimate."""


class NegativeWealth(SimulationError):
    """Every simulated path left the set of positive wealth."""


class ClockOverflow(SimulationError):
    """Event rates are too large or not finite."""


@dataclass(frozen=True)
class SimConfig:
    """Path count, horizon, Euler step and random seed of a simulation."""
    n_paths: int
    horizon: float
    dt: float = 1e-3
    seed: int = 0
    truncate_after_events: int = None
    block_size: int = 4096
    workers: int = 1
    trace_paths: int = 0

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError('n_paths must be >= 1')
        if not self.dt > 0:
            raise ValueError('dt must be > 0')
        if not self.horizon > 0:
            raise ValueError('horizon must be > 0')
        if self.block_size < 1 or self.workers < 1:
            raise ValueError('block_size and workers must be >= 1')
        if not 0 <= self.trace_paths <= MAX_TRACE_PATHS:
            raise ValueError(
                f'trace_paths must lie in [0, {MAX_TRACE_PATHS}]')
        if (self.truncate_after_events is not None and
                self.truncate_after_events < 0):
            raise ValueError('truncate_after_events must be >= 0')


@dataclass(eq=False)
class PathState:
    """State of a block of paths, one entry per path."""
    t: np.ndarray
    i: np.ndarray
    r: np.ndarray
    z: np.ndarray
    disc_util: np.ndarray
    event_count: np.ndarray
    next_event: np.ndarray
    alive: np.ndarray
    rejected: np.ndarray

    @classmethod
    def start(cls, size, init, total_rate, rng):
        i, r, z = init
        regimes = np.full(size, i)
        return cls(
            t=np.zeros(size), i=regimes, r=np.full(size, float(r)),
            z=np.full(size, float(z)), disc_util=np.zeros(size),
            event_count=np.zeros(size, dtype=int),
            next_event=rng.exponential(1 / total_rate[regimes]),
            alive=np.ones(size, dtype=bool),
            rejected=np.zeros(size, dtype=bool))


@dataclass(frozen=True, eq=False)
class SimResult:
    """Mean discounted utility over accepted paths."""
    estimate: float
    std_err: float
    n_paths: int
    tail_bound: float
    diagnostics: dict
    trace: list = field(default_factory=list)

    def as_dict(self):
        return {
            'estimate': self.estimate, 'std_err': self.std_err,
            'n_paths': self.n_paths, 'tail_bound': self.tail_bound,
            'diagnostics': dict(self.diagnostics)}


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a Monte Carlo identity check."""
    name: str
    estimate: float
    reference: float
    std_err: float
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            'name': self.name, 'estimate': self.estimate,
            'reference': self.reference, 'std_err': self.std_err,
            'passed': self.passed, 'details': dict(self.details)}


def block_rng(seed, block_index):
    """Random generator of one block of paths."""
    return np.random.default_rng(np.random.SeedSequence([seed, block_index]))


def _block_sizes(cfg):
    full, rest = divmod(cfg.n_paths, cfg.block_size)
    return [cfg.block_size] * full + ([rest] if rest else [])


def _map_blocks(function, cfg):
    blocks = range(len(_block_sizes(cfg)))
    if cfg.workers == 1:
        return [function(block) for block in blocks]
    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        return list(executor.map(function, blocks))


def _mean_and_error(values):
    if len(values) > 1:
        return float(np.mean(values)), float(
            np.std(values, ddof=1) / np.sqrt(len(values)))
    return float(np.mean(values)), 0.


class _EventClocks:
    """Competing exponential clocks: trading first, then switch targets."""

    def __init__(self, model, horizon):
        rates = np.zeros((model.d, model.d + 1))
        rates[:, 0] = model.lam
        rates[:, 1:] = model.q - np.diag(np.diag(model.q))
        self.total = rates.sum(axis=1)
        self.cumulative = np.cumsum(rates, axis=1)
        if not np.all(np.isfinite(self.total)):
            raise ClockOverflow('event rates must be finite')
        if np.any(self.total * horizon > MAX_EXPECTED_EVENTS):
            raise ClockOverflow(
                f'more than {MAX_EXPECTED_EVENTS:.0e} events expected per '
                'path, shorten the horizon')

    def draw(self, regimes, rng):
        """Return 0 for a trading time or ``j + 1`` for a switch to ``j``."""
        level = rng.uniform(size=len(regimes)) * self.total[regimes]
        return np.argmax(self.cumulative[regimes] > level[:, None], axis=1)


class _PolicyStack:
    """One policy table, or one table per number of remaining events."""

    def __init__(self, policy, truncate):
        tables = [policy] if isinstance(policy, PolicyTable) else list(policy)
        self.staged = len(tables) > 1
        if self.staged and (truncate is None or len(tables) != truncate + 1):
            raise ValueError(
                'a sequence of policies needs truncate_after_events equal to '
                'its length minus one')
        self.d, n_points = tables[0].c_star.shape
        self.rates = np.concatenate([table.c_star for table in tables])
        self.rates = self.rates.reshape(-1, n_points)
        self.targets = np.array([table.pi_star for table in tables])
        self.phi_sup = np.max([table.phi_sup for table in tables], axis=0)
        self.truncate = truncate

    def stage(self, event_count):
        if not self.staged:
            return np.zeros_like(event_count)
        return np.maximum(self.truncate - event_count, 0)

    def consumption(self, stage, regimes, z):
        return interpolate_rows(self.rates, stage * self.d + regimes, z)

    def target(self, stage, regimes):
        return self.targets[stage, regimes]


class _Engine:
    """Simulation of every block of paths for one configuration."""

    def __init__(self, model, prefs, policy, init, cfg, snapshots=()):
        i, r, z = init
        if not 0 <= i < model.d:
            raise ValueError(f'initial regime {i} out of range')
        if r < 0 or not 0 <= z <= 1:
            raise ValueError('initial wealth must be >= 0, z in [0, 1]')
        self.model, self.prefs, self.cfg = model, prefs, cfg
        self.init = (i, r, z)
        self.clocks = _EventClocks(model, cfg.horizon)
        self.policy = _PolicyStack(policy, cfg.truncate_after_events)
        self.snapshots = np.append(np.asarray(snapshots, dtype=float), np.inf)

    def run_block(self, block_index):
        cfg = self.cfg
        size = _block_sizes(cfg)[block_index]
        rng = block_rng(cfg.seed, block_index)
        state = PathState.start(size, self.init, self.clocks.total, rng)
        counts = Counter()
        n_snapshots = len(self.snapshots) - 1
        recorded = np.full((size, n_snapshots), np.nan)
        initial = self.snapshots[:-1] <= 0
        recorded[:, initial] = self.init[1]
        next_snapshot = np.full(size, int(initial.sum()))
        if cfg.truncate_after_events == 0:
            state.alive[:] = False
        traced = cfg.trace_paths if block_index == 0 else 0
        trace = []
        self._trace(state, np.arange(traced), trace)

        while np.any(state.alive):
            paths = np.flatnonzero(state.alive)
            self._step(paths, state, rng, counts, recorded, next_snapshot)
            self._trace(state, paths[paths < traced], trace)

        logger.debug('block %d done, %d paths', block_index, size)
        accepted = ~state.rejected
        return state.disc_util[accepted], recorded[accepted], counts, trace

    def _trace(self, state, paths, trace):
        for path in paths:
            trace.append((
                path, state.t[path], state.i[path], state.r[path],
                state.z[path], state.disc_util[path]))

    def _step(self, paths, state, rng, counts, recorded, next_snapshot):
        model, cfg, policy = self.model, self.cfg, self.policy
        t, i = state.t[paths], state.i[paths]
        r, z = state.r[paths], state.z[paths]
        stage = policy.stage(state.event_count[paths])
        rate = policy.consumption(stage, i, z)

        event_gap = state.next_event[paths] - t
        horizon_gap = cfg.horizon - t
        snapshot_time = self.snapshots[next_snapshot[paths]]
        snapshot_gap = snapshot_time - t
        h = np.minimum.reduce([
            np.full(len(paths), cfg.dt), event_gap, horizon_gap,
            snapshot_gap])

        state.disc_util[paths] += (
            np.exp(-self.prefs.rho * t) * utility(r * rate, self.prefs.p) * h)

        b, sigma = model.b[i], model.sigma[i]
        noise = sigma * np.sqrt(h) * rng.standard_normal(len(paths))
        new_r = r + r * z * (b * h + noise) - r * rate * h
        new_z = z + z * (1 - z) * ((b - z * sigma ** 2) * h + noise) + (
            z * rate * h)
        outside = (new_z < 0) | (new_z > 1)
        counts['z_clamped'] += int(outside.sum())
        new_z = np.clip(new_z, 0, 1)

        new_t = t + h
        at_event = event_gap <= h
        at_end = horizon_gap <= h
        at_snapshot = snapshot_gap <= h
        new_t[at_event] = state.next_event[paths][at_event]
        new_t[at_snapshot] = snapshot_time[at_snapshot]
        new_t[at_end] = cfg.horizon

        if self.init[1] > 0:
            counts['zero_wealth'] += int(np.sum(new_r == 0))
            counts['negative_wealth'] += int(np.sum(new_r < 0))
            bad = new_r <= 0
        else:
            bad = np.zeros(len(paths), dtype=bool)
        slack = -JUMP_TOLERANCE * np.abs(new_r)
        counts['short_sale_violations'] += int(np.sum(
            (new_r * (1 - new_z) < slack) | (new_r * new_z < slack)))

        state.t[paths], state.r[paths], state.z[paths] = new_t, new_r, new_z
        state.rejected[paths[bad]] = True
        counts['rejected_paths'] += int(bad.sum())

        recording = at_snapshot & ~bad
        snapshot_paths = paths[recording]
        recorded[snapshot_paths, next_snapshot[snapshot_paths]] = (
            new_r[recording])
        next_snapshot[snapshot_paths] += 1

        state.alive[paths[bad | at_end]] = False
        jumping = at_event & ~at_end & ~bad
        if np.any(jumping):
            self._jump(paths[jumping], stage[jumping], state, rng, counts)

    def _jump(self, paths, stage, state, rng, counts):
        i, r, z = state.i[paths], state.r[paths], state.z[paths]
        kind = self.clocks.draw(i, rng)
        trade = kind == 0
        state.z[paths[trade]] = self.policy.target(stage[trade], i[trade])

        switch = ~trade
        if np.any(switch):
            moved = paths[switch]
            target = kind[switch] - 1
            gamma = self.model.gamma[i[switch], target]
            before_r, before_z = r[switch], z[switch]
            after_r = before_r * (1 - gamma * before_z)
            after_z = before_z * (1 - gamma) / (1 - gamma * before_z)
            stock_error = np.abs(
                after_r * after_z - before_r * before_z * (1 - gamma))
            counts['jump_mismatch'] += int(np.sum(
                stock_error > JUMP_TOLERANCE * np.maximum(1, before_r)))
            state.r[moved], state.z[moved] = after_r, after_z
            state.i[moved] = target

        state.event_count[paths] += 1
        state.next_event[paths] = state.t[paths] + rng.exponential(
            1 / self.clocks.total[state.i[paths]])
        if self.policy.truncate is not None:
            done = state.event_count[paths] >= self.policy.truncate
            state.alive[paths[done]] = False

    def run(self):
        results = _map_blocks(self.run_block, self.cfg)
        values = np.concatenate([result[0] for result in results])
        recorded = np.concatenate([result[1] for result in results])
        counts = Counter({name: 0 for name in DIAGNOSTICS})
        for result in results:
            counts.update(result[2])
        trace = results[0][3]
        if not len(values):
            raise NegativeWealth('every simulated path was rejected')
        violations = {
            name: count for name, count in counts.items()
            if count and name != 'z_clamped'}
        if violations:
            logger.warning('invariant violations: %s', violations)
        return values, recorded, dict(counts), trace


def tail_bound(phi_sup, prefs, k, horizon, r):
    """Growth-condition bound on the value left after the horizon."""
    return float(
        np.max(phi_sup) / prefs.p * np.exp(-(prefs.rho - k) * horizon) *
        r ** prefs.p)


def simulate_value(model, prefs, policy, init, cfg):
    """Estimate the value of ``policy`` started from ``init = (i, r, z)``.

    ``policy`` is a :class:`PolicyTable`, or the sequence returned by
    :func:`liquidswitch.policy.iterate_policies` when
    ``cfg.truncate_after_events`` is set.

    """
    engine = _Engine(model, prefs, policy, init, cfg)
    values, _, diagnostics, trace = engine.run()
    estimate, std_err = _mean_and_error(values)
    logger.info('value estimate %.6f +- %.6f', estimate, std_err)
    return SimResult(
        estimate=estimate, std_err=std_err, n_paths=len(values),
        tail_bound=tail_bound(
            engine.policy.phi_sup, prefs, model.k, cfg.horizon, init[1]),
        diagnostics=diagnostics, trace=trace)


def simulate_truncated(model, prefs, policy, init, cfg):
    """Estimate the value when consumption stops at the n-th event."""
    if cfg.truncate_after_events is None:
        raise ValueError('truncate_after_events must be set')
    return simulate_value(model, prefs, policy, init, cfg)


def _first_trade_block(model, prefs, sol, i, y, cfg, block_index):
    size = _block_sizes(cfg)[block_index]
    rng = block_rng(cfg.seed + BOUNDARY_STREAM, block_index)
    clocks = _EventClocks(model, cfg.horizon)
    regimes = np.full(size, i)
    log_stock = np.zeros(size)
    tau = np.zeros(size)
    pending = np.ones(size, dtype=bool)
    while np.any(pending):
        paths = np.flatnonzero(pending)
        current = regimes[paths]
        wait = rng.exponential(1 / clocks.total[current])
        b, sigma = model.b[current], model.sigma[current]
        log_stock[paths] += (b - sigma ** 2 / 2) * wait + sigma * np.sqrt(
            wait) * rng.standard_normal(len(paths))
        tau[paths] += wait
        kind = clocks.draw(current, rng)
        pending[paths[kind == 0]] = False
        switch = kind > 0
        target = kind[switch] - 1
        log_stock[paths[switch]] += np.log1p(
            -model.gamma[current[switch], target])
        regimes[paths[switch]] = target
    return (
        np.exp(-prefs.rho * tau) * utility(y * np.exp(log_stock), prefs.p) *
        sol.phi_sup[regimes])


def check_boundary_identity(model, prefs, sol, y, cfg, i=0):
    """Compare ``v_i(0, y)`` with the value of waiting for the first trade.

    Without cash nothing can be consumed before the first trading time
    ``tau``; the stock follows exact geometric Brownian segments, with the
    price jumps of the regime switches met on the way.

    """
    values = np.concatenate(_map_blocks(
        lambda block: _first_trade_block(model, prefs, sol, i, y, cfg, block),
        cfg))
    estimate, std_err = _mean_and_error(values)
    reference = value_at(sol, i, 0, y)
    gap = abs(estimate - reference)
    return CheckReport(
        name='boundary_identity', estimate=estimate, reference=reference,
        std_err=std_err, passed=bool(gap <= 3 * std_err + 1e-12 * reference),
        details={'regime': i, 'y': y, 'n_paths': len(values)})


def check_supermartingale(model, prefs, policy, init, times, cfg):
    """Check that ``E[exp(-k t) R_t**p]`` does not increase at ``times``."""
    times = np.asarray(times, dtype=float)
    if len(times) < 2 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError('times must be increasing, nonnegative, at least 2')
    run_cfg = replace(
        cfg, horizon=float(times[-1]), truncate_after_events=None)
    engine = _Engine(model, prefs, policy, init, run_cfg, snapshots=times)
    _, recorded, diagnostics, _ = engine.run()
    moments = np.exp(-model.k * times) * recorded ** prefs.p
    means, errors = zip(*(
        _mean_and_error(column) for column in moments.T))
    means, errors = np.array(means), np.array(errors)
    slack = 2 * np.hypot(errors[1:], errors[:-1])
    passed = bool(np.all(np.diff(means) <= slack + 1e-12 * means[:-1]))
    return CheckReport(
        name='supermartingale', estimate=float(means[-1]),
        reference=float(means[0]), std_err=float(errors[-1]), passed=passed,
        details={
            'times': times.tolist(), 'means': means.tolist(),
            'std_errs': errors.tolist(), 'k': model.k,
            'diagnostics': diagnostics})

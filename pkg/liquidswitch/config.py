"""
Run configuration files.

A run configuration is a YAML (or JSON) mapping with the sections ``model``,
``prefs``, ``grid``, ``sim`` and ``output``. Errors name the offending field,
like ``model.gamma[0][1]``.

"""

from dataclasses import asdict, dataclass, fields, replace

import yaml

from .model import CrraParams, MarketModel, validate_model
from .simulator import SimConfig
from .solver import GridConfig

FORMATS = ('csv', 'json')


class ConfigError(ValueError):
    """A configuration file cannot be read or has an invalid field."""

    def __init__(self, message, path=None):
        super().__init__(f'{path}: {message}' if path else message)
        self.path = path


@dataclass(frozen=True)
class InitialState:
    """Starting regime, wealth and stock proportion of simulations.

    A ``z`` of ``None`` starts at the rebalancing target of the regime.

    """
    regime: int = 0
    wealth: float = 1.
    z: float = None


@dataclass(frozen=True)
class CheckConfig:
    """Monte Carlo identity checks run by the ``simulate`` command."""
    truncated_events: tuple = (1, 3, 10)
    boundary_y: float = 1.
    supermartingale_times: tuple = (0., 1., 2., 5., 10.)


@dataclass(frozen=True)
class OutputConfig:
    directory: str = 'out'
    formats: tuple = FORMATS


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run."""
    model: MarketModel
    prefs: CrraParams
    grid: GridConfig = GridConfig()
    sim: SimConfig = None
    init: InitialState = InitialState()
    checks: CheckConfig = CheckConfig()
    output: OutputConfig = OutputConfig()

    def validated(self):
        """Return the :class:`ValidatedModel` of this configuration."""
        return validate_model(self.model, self.prefs)

    def with_overrides(self, seed=None, n_points=None, directory=None):
        """Return a copy with command-line overrides applied."""
        config = self
        if seed is not None:
            if config.sim is None:
                raise ConfigError('--seed needs a sim section', 'sim')
            config = replace(config, sim=replace(config.sim, seed=seed))
        if n_points is not None:
            config = replace(
                config, grid=_build(GridConfig, {
                    **asdict(config.grid), 'n_points': n_points}, 'grid'))
        if directory is not None:
            config = replace(
                config, output=replace(config.output, directory=directory))
        return config

    def with_model(self, override, path='sweep'):
        """Return a copy whose model fields are replaced by ``override``."""
        data = _model_dict(self.model)
        unknown = set(override) - {'lambda', 'sigma', 'b'}
        if unknown:
            raise ConfigError(
                f'unknown sweep fields {sorted(unknown)}', path)
        data.update(override)
        return replace(self, model=parse_model(data, path))

    def to_dict(self):
        return {
            'model': _model_dict(self.model),
            'prefs': asdict(self.prefs),
            'grid': asdict(self.grid),
            'sim': None if self.sim is None else {
                **asdict(self.sim), 'init': asdict(self.init),
                'checks': {
                    key: list(value) if isinstance(value, tuple) else value
                    for key, value in asdict(self.checks).items()}},
            'output': {
                'directory': self.output.directory,
                'formats': list(self.output.formats)},
        }


def _model_dict(model):
    return {
        'd': model.d, 'b': list(model.b), 'sigma': list(model.sigma),
        'lambda': list(model.lam), 'q': [list(row) for row in model.q],
        'gamma': None if model.gamma is None else [
            list(row) for row in model.gamma]}


def _number(value, path, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f'expected a number, got {value!r}', path)
    if kind is int:
        if not float(value).is_integer():
            raise ConfigError(f'expected an integer, got {value!r}', path)
        return int(value)
    return float(value)


def _vector(value, d, path):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value),) * d
    if not isinstance(value, list) or len(value) != d:
        raise ConfigError(f'expected a list of {d} numbers', path)
    return tuple(_number(item, f'{path}[{k}]') for k, item in enumerate(value))


def _matrix(value, d, path):
    if not isinstance(value, list) or len(value) != d:
        raise ConfigError(f'expected {d} rows', path)
    return tuple(
        _vector(row if isinstance(row, list) else [row], d, f'{path}[{k}]')
        for k, row in enumerate(value))


def _mapping(value, path):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError('expected a mapping', path)
    return value


def _build(cls, data, path):
    """Instantiate a dataclass from a mapping, checking every key."""
    known = {item.name: item for item in fields(cls)}
    values = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError('unknown field', f'{path}.{key}')
        default = known[key].default
        if value is None:
            values[key] = None
        elif isinstance(default, tuple):
            if not isinstance(value, list):
                raise ConfigError('expected a list', f'{path}.{key}')
            kind = type(default[0]) if default else float
            values[key] = tuple(
                item if kind is str else _number(
                    item, f'{path}.{key}[{k}]', kind)
                for k, item in enumerate(value))
        elif isinstance(default, str):
            values[key] = str(value)
        else:
            kind = int if known[key].type is int else float
            values[key] = _number(value, f'{path}.{key}', kind)
    try:
        return cls(**values)
    except (TypeError, ValueError) as exception:
        raise ConfigError(str(exception), path) from exception


def parse_model(data, path='model'):
    data = _mapping(data, path)
    unknown = set(data) - {'d', 'b', 'sigma', 'lambda', 'q', 'gamma'}
    if unknown:
        raise ConfigError('unknown field', f'{path}.{sorted(unknown)[0]}')
    for key in ('b', 'sigma', 'lambda'):
        if key not in data:
            raise ConfigError('missing field', f'{path}.{key}')
    b = data['b']
    d = len(b) if isinstance(b, list) else 1
    if data.get('d') is not None and _number(
            data['d'], f'{path}.d', int) != d:
        raise ConfigError(f'{d} regimes given in b', f'{path}.d')
    q = data.get('q')
    return MarketModel(
        q=(
            _matrix(q, d, f'{path}.q') if q is not None else
            tuple((0.,) * d for _ in range(d))),
        lam=_vector(data['lambda'], d, f'{path}.lambda'),
        b=_vector(b, d, f'{path}.b'),
        sigma=_vector(data['sigma'], d, f'{path}.sigma'),
        gamma=(
            None if data.get('gamma') is None else
            _matrix(data['gamma'], d, f'{path}.gamma')))


def parse_config(data):
    """Build a :class:`RunConfig` from a mapping."""
    data = _mapping(data, 'config')
    unknown = set(data) - {'model', 'prefs', 'grid', 'sim', 'output'}
    if unknown:
        raise ConfigError('unknown section', sorted(unknown)[0])
    for section in ('model', 'prefs'):
        if section not in data:
            raise ConfigError('missing section', section)

    model = parse_model(data['model'])
    prefs = _mapping(data['prefs'], 'prefs')
    for key in ('p', 'rho'):
        if key not in prefs:
            raise ConfigError('missing field', f'prefs.{key}')
    prefs = _build(CrraParams, prefs, 'prefs')
    grid = _build(GridConfig, _mapping(data.get('grid'), 'grid'), 'grid')

    sim, init, checks = None, InitialState(), CheckConfig()
    if data.get('sim') is not None:
        section = dict(_mapping(data['sim'], 'sim'))
        init = _build(
            InitialState, _mapping(section.pop('init', None), 'sim.init'),
            'sim.init')
        checks = _build(
            CheckConfig, _mapping(section.pop('checks', None), 'sim.checks'),
            'sim.checks')
        for key in ('n_paths', 'horizon'):
            if key not in section:
                raise ConfigError('missing field', f'sim.{key}')
        sim = _build(SimConfig, section, 'sim')

    output = _build(
        OutputConfig, _mapping(data.get('output'), 'output'), 'output')
    for name in output.formats:
        if name not in FORMATS:
            raise ConfigError(f'unknown format {name!r}', 'output.formats')
    return RunConfig(
        model=model, prefs=prefs, grid=grid, sim=sim, init=init,
        checks=checks, output=output)


def _load_yaml(path):
    try:
        with open(path, encoding='utf-8') as fd:
            return yaml.safe_load(fd)
    except OSError as exception:
        raise ConfigError(f'cannot read file ({exception.strerror})', path)
    except yaml.YAMLError as exception:
        mark = getattr(exception, 'problem_mark', None)
        where = f'{path}:{mark.line + 1}' if mark else path
        raise ConfigError(f'invalid YAML ({exception})', where)


def load_config(path):
    """Read and parse the run configuration at ``path``."""
    return parse_config(_load_yaml(path))


def load_sweep(path):
    """Read a list of model overrides, one per sweep row."""
    data = _load_yaml(path)
    if isinstance(data, dict):
        data = data.get('sweep')
    if not isinstance(data, list) or not data:
        raise ConfigError('expected a non-empty list of overrides', 'sweep')
    return [
        _mapping(row, f'sweep[{index}]') for index, row in enumerate(data)]

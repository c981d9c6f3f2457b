"""
Command-line interface to Liquidswitch.

"""

import argparse
import logging
import sys

from . import COMMANDS, VERSION
from .commands import ValidationFailed
from .config import ConfigError, load_config, load_sweep
from .merton import MertonError
from .model import ModelError
from .policy import NonconvergedInput
from .simulator import SimulationError
from .solver import SolverError

EXIT_CONFIG, EXIT_SOLVER, EXIT_VALIDATION = 1, 2, 3


def main(argv=None, stdout=None, stderr=None):
    """Entry-point of the executable."""
    # Get command-line options
    parser = argparse.ArgumentParser(
        description='Solve optimal investment with random trading times')
    parser.add_argument(
        'command', choices=sorted(COMMANDS), help='command to run')
    parser.add_argument('--version', action='version', version=VERSION)
    parser.add_argument(
        '-c', '--config', required=True, help='run configuration file')
    parser.add_argument(
        '-o', '--out', default=None,
        help='output directory, overrides output.directory')
    parser.add_argument(
        '--sweep', default=None, help='file listing model overrides')
    parser.add_argument(
        '--seed', default=None, type=int, help='random seed of simulations')
    parser.add_argument(
        '--grid-points', default=None, type=int,
        help='number of grid points, overrides grid.n_points')
    parser.add_argument(
        '-v', '--verbose', action='count', default=0,
        help='log progress, twice for debugging output')

    options = parser.parse_args(argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    logging.basicConfig(
        level=(logging.WARNING, logging.INFO, logging.DEBUG)[
            min(options.verbose, 2)],
        format='%(levelname)s %(name)s: %(message)s')

    try:
        config = load_config(options.config).with_overrides(
            seed=options.seed, n_points=options.grid_points,
            directory=options.out)
        sweep = load_sweep(options.sweep) if options.sweep else None
        COMMANDS[options.command](config, sweep)
    except (ConfigError, ModelError) as exception:
        stderr.write(f'configuration error: {exception}\n')
        return EXIT_CONFIG
    except (SolverError, MertonError, NonconvergedInput,
            SimulationError) as exception:
        stderr.write(f'solver error: {exception}\n')
        return EXIT_SOLVER
    except ValidationFailed as exception:
        stderr.write(f'validation error: {exception}\n')
        return EXIT_VALIDATION
    stdout.write(f'{options.command}: results in {config.output.directory}\n')
    return 0


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main())

"""
CSV and JSON output files.

Numbers are written with 17 significant digits so that files read back to
the same floats.

"""

import json

import numpy as np

CSV_FORMAT = '%.17g'


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def write_json(path, data):
    with open(path, 'w', encoding='utf-8') as fd:
        json.dump(data, fd, indent=2, default=_plain)
        fd.write('\n')


def _write_columns(path, z, rows, prefix):
    header = ','.join(
        ['z'] + [f'{prefix}_{i + 1}' for i in range(len(rows))])
    np.savetxt(
        path, np.column_stack([z, *rows]), fmt=CSV_FORMAT, delimiter=',',
        header=header, comments='')


def write_phi(path, sol):
    """Write ``z,phi_1,...,phi_d``."""
    _write_columns(path, sol.z, sol.phi, 'phi')


def write_policy(csv_path, json_path, table):
    """Write ``z,c_1,...,c_d`` and the rebalancing targets."""
    _write_columns(csv_path, table.z, table.c_star, 'c')
    write_json(json_path, table.sidecar())


def write_trace(path, trace):
    """Write per-path simulation traces."""
    rows = np.array(trace, dtype=float).reshape(-1, 6)
    np.savetxt(
        path, rows, fmt=['%d', CSV_FORMAT, '%d', CSV_FORMAT, CSV_FORMAT,
                         CSV_FORMAT],
        delimiter=',', header='path,t,i,r,z,disc_util', comments='')


def read_columns(path):
    """Read a CSV written by this module, returning its header and data."""
    with open(path, encoding='utf-8') as fd:
        header = fd.readline().strip().split(',')
    return header, np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)

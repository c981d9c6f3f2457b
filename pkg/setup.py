#!/usr/bin/env python
#
# Public Domain

"""
Liquidswitch - Optimal Investment with Random Trading Times
===========================================================

Liquidswitch solves the consumption and investment problem of an agent who
can only trade a risky asset at the jump times of a Poisson process, in a
market whose drift, volatility and liquidity switch with a Markov chain.

"""

import sys

from setuptools import setup

if sys.version_info.major < 3:
    raise RuntimeError('Liquidswitch does not support Python 2.x.')

setup()

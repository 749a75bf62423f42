"""Shared fixtures: the two-unit worked example and small worlds."""

from __future__ import annotations

import os

import numpy as np
import pytest

from pydisagg import synth
from pydisagg.ingest import CensusTable, CovariateStack, ZoneMap
from pydisagg.model import PredictionRaster, UnitPredictions

# Fixtures. Need to make a PR for this.
# pylint: disable=redefined-outer-name

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(__file__)),
                        'fixtures')
TABLE1 = os.path.join(FIXTURES, 'table1')


@pytest.fixture
def table1_zone() -> ZoneMap:
    """Two one-pixel units in one superunit."""
    return ZoneMap.from_entries([('A', 0, 0, 1.0), ('B', 1, 0, 1.0)],
                                {'A': 'S', 'B': 'S'})


@pytest.fixture
def table1_census() -> CensusTable:
    """Both units count 100 people."""
    return CensusTable({'A': 100.0, 'B': 100.0})


@pytest.fixture
def table1_preds() -> UnitPredictions:
    """Unadjusted predictions of the worked example."""
    return UnitPredictions(('A', 'B'), np.array([120.0, 40.0]))


@pytest.fixture
def table1_raster() -> PredictionRaster:
    """Raster holding the unadjusted predictions."""
    return PredictionRaster(np.array([[120.0, 40.0]]))


@pytest.fixture
def shared_zone() -> ZoneMap:
    """
    Three units on a 3x2 grid, two of them sharing pixel (1, 0).

    Units ``a`` and ``b`` form superunit ``s``, unit ``c`` is alone in
    ``t``.
    """
    return ZoneMap.from_entries([
        ('a', 0, 0, 1.0),
        ('a', 1, 0, 0.5),
        ('b', 1, 0, 0.5),
        ('b', 2, 0, 1.0),
        ('b', 2, 1, 0.25),
        ('c', 0, 1, 1.0),
        ('c', 1, 1, 1.0),
    ], {'a': 's', 'b': 's', 'c': 't'})


@pytest.fixture
def shared_stack() -> CovariateStack:
    """Two standardised bands on the 3x2 grid."""
    values = np.array([
        [[0.5, -1.0], [1.5, 0.25], [-0.5, 1.0]],
        [[-1.5, -0.25], [0.0, 0.5], [0.0, -0.5]],
    ])
    return CovariateStack(bands=('light', 'roads'), values=values,
                          stats=((0.0, 1.0), (0.0, 1.0)))


@pytest.fixture(scope='session')
def small_world() -> synth.SynthWorld:
    """A 16x12 noiseless world of 12 units in 4 superunits."""
    return synth.generate(synth.SynthConfig(width=16, height=12, n_bands=3,
                                            n_units=12, n_superunits=4,
                                            seed=7))

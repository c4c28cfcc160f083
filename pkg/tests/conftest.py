import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from fmlab.fields import Grid, SampledField


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def grid_1d():
    return Grid(1, 8.0, 256)


@pytest.fixture
def grid_2d():
    return Grid(2, 4.0, 64)


@pytest.fixture
def random_field_1d(rng, grid_1d):
    vals = rng.standard_normal(grid_1d.shape) + 1j * rng.standard_normal(grid_1d.shape)
    return SampledField(grid_1d, vals, "space")


@pytest.fixture
def random_field_2d(rng, grid_2d):
    vals = rng.standard_normal(grid_2d.shape) + 1j * rng.standard_normal(grid_2d.shape)
    return SampledField(grid_2d, vals, "space")

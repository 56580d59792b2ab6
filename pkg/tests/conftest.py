"""Shared fixtures: simulated herds and the default interval grid."""

import numpy as np
import pytest

from dailyyield.core.grid import build_grid
from dailyyield.herd.curve_sim import SimConfig, simulate_herd
from dailyyield.models.moments import FIELDS, BinMoments, class_stats


@pytest.fixture(scope="session")
def grid():
    """The default grid, 8 to 16 hours in half-hour bins."""
    return build_grid(8.0, 16.0, 0.5)


@pytest.fixture(scope="session")
def herd():
    """The default 3000-cow herd."""
    return simulate_herd(SimConfig(n_cows=3000, seed=1))


@pytest.fixture(scope="session")
def train(herd):
    """The first 2000 cows of the default herd."""
    return herd.subset_cows(herd.cow_ids[:2000])


@pytest.fixture(scope="session")
def small_herd():
    """A 300-cow herd for quick checks."""
    return simulate_herd(SimConfig(n_cows=300, seed=3))


@pytest.fixture(scope="session")
def uniform_herd():
    """A herd where all cows share one curve and milkings carry no extra variation."""
    return simulate_herd(SimConfig(n_cows=2000, seed=5, y720_sd=1e-9, k_sd=1e-9, milking_sd=0.0))


@pytest.fixture(scope="session")
def train_moments(train, grid):
    """Bin moments of the training cows."""
    return class_stats(train, grid)


@pytest.fixture
def flat_moments(grid):
    """Moments on the default grid where every cell holds ten identical records (x = 12, y = 24)."""
    shape = (2, grid.bin_count)
    cells = {name: np.zeros(shape) for name in FIELDS}
    cells.update({
        "n": np.full(shape, 10),
        "mean_x": np.full(shape, 12.0),
        "mean_y": np.full(shape, 24.0),
        "mean_d": np.full(shape, 150.0),
        "sum_x": np.full(shape, 120.0),
        "sum_y": np.full(shape, 240.0),
        "mean_ratio": np.full(shape, 2.0),
        "mean_prop": np.full(shape, 0.5),
    })
    session = {name: float(cells[name][0, 0]) for name in FIELDS}
    session["n"] = 10 * grid.bin_count
    return BinMoments(grid, cells, {"AM": dict(session), "PM": dict(session)})

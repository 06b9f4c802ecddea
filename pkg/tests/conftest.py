import numpy as np
import pytest

from assim import Grid


@pytest.fixture
def grid():
    """Default working grid: [0, 2*pi] with 512 nodes."""
    return Grid(0.0, 2 * np.pi, 512)


@pytest.fixture
def small_grid():
    return Grid(0.0, 1.0, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mhdbkm.spectral import Grid  # noqa: E402


@pytest.fixture
def g2():
    return Grid(2, 32)


@pytest.fixture
def g3():
    return Grid(3, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

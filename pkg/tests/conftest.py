import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)


def random_gray(rng, max_side=64):
    w = int(rng.integers(1, max_side + 1))
    h = int(rng.integers(1, max_side + 1))
    return rng.integers(0, 256, size=(h, w), dtype=np.uint8)


def random_binary(rng, max_side=64, p=0.4):
    w = int(rng.integers(1, max_side + 1))
    h = int(rng.integers(1, max_side + 1))
    return (rng.random((h, w)) < p).astype(np.uint8)

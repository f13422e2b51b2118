import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from ampdx.model import Catalog, KnowledgeMatrix


@pytest.fixture
def small_catalog():
    return Catalog(
        symptoms=("redness", "itching", "swelling"),
        diseases=("alpha", "beta", "gamma", "delta"),
    )


@pytest.fixture
def small_matrix(small_catalog):
    entries = np.array(
        [
            [1, 0, 1, 0],
            [0, 1, 1, 0],
            [1, 1, 0, 1],
        ],
        dtype=float,
    )
    return KnowledgeMatrix(entries)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

import os

import numpy as np
import pytest

from bicon_sod.cio import LocalIOAdapter

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')

@pytest.fixture
def rng():
    return np.random.default_rng(1234)

@pytest.fixture
def fixtures_dir():
    return FIXTURES

@pytest.fixture
def io(tmp_path):
    return LocalIOAdapter(in_dir=FIXTURES, out_dir=str(tmp_path))


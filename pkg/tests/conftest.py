from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"
# realised class fraction of the committed Art1 + S0 fixture
FIXTURE_PRIOR = 0.47


@pytest.fixture
def fixture_pu_csv():
    return DATA / "art1_s0_pu.csv"


@pytest.fixture
def fixture_oracle_csv():
    return DATA / "art1_s0_oracle.csv"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

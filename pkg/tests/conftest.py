import json
from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def published_metrics_table():
    with open(DATA_DIR / "published_metrics.json") as fh:
        return json.load(fh)["rows"]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

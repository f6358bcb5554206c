import sys
from pathlib import Path

import numpy as np
import pytest

# Make the sibling oracle/fuzz helper modules importable from any cwd.
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0xC0FFEE)

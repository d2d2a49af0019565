import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from evpipe.events import EventStream, SensorGeometry  # noqa: E402


def random_stream(rng, width, height, n, t_max=1000, t_min=0):
    """Sorted random stream with many timestamp ties."""
    g = SensorGeometry(width, height)
    t = np.sort(rng.integers(t_min, t_max, n))
    x = rng.integers(0, width, n)
    y = rng.integers(0, height, n)
    p = rng.choice(np.array([-1, 1]), n)
    return EventStream(g, t, x, y, p)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)

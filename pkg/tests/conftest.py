import numpy as np
import pytest

from curvednbody.dynamics import SystemState
from curvednbody.geometry import project_position, project_velocity


def random_state(rng, n, sigma, speed=1.0):
    """Random valid state with well separated bodies (no collisions)."""
    while True:
        q = rng.normal(size=(n, 4))
        if sigma == -1:
            q[:, 3] = np.linalg.norm(q[:, :3], axis=1) + rng.uniform(0.2, 2.0, n)
        q = project_position(q, sigma)
        chords = (q * [1, 1, 1, sigma]) @ q.T
        denom = sigma - sigma * chords**2
        if np.all(denom[~np.eye(n, dtype=bool)] > 1e-2):
            break
    v = project_velocity(q, speed * rng.normal(size=(n, 4)), sigma)
    return SystemState(0.0, q, v, rng.uniform(0.5, 2.0, n), sigma)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

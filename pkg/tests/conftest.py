import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mgbounds.instances import random_spd

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def spd_from_seed(seed: int, n: int, max_cond: float = 1e3) -> np.ndarray:
    return random_spd(np.random.default_rng(seed), n, max_cond)

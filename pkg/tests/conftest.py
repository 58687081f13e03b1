import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(0xFEED)


@pytest.fixture
def gauss_data(rng):
    def make(n=40, d=3, shift=0.0):
        return rng.standard_normal((n, d)) + shift

    return make

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_hermitian(dim, rng, scale=1.0):
    X = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (X + X.conj().T) / 2


def random_positive(dim, rng, low=0.2, high=2.0):
    """Random Hermitian matrix with spectrum in [low, high]."""
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    return (Q * rng.uniform(low, high, size=dim)) @ Q.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

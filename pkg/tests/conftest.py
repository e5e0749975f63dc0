import numpy as np
import pytest

from vortex_shock.characteristics import build_solution
from vortex_shock.presets import gaussian_ring, offset_ring


@pytest.fixture(scope="session")
def ring():
    return gaussian_ring()


@pytest.fixture(scope="session")
def ring_sol(ring):
    return build_solution(ring)


@pytest.fixture(scope="session")
def offset_sol():
    return build_solution(offset_ring())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

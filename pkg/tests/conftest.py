import numpy as np
import pytest

from pgs import PhasedAdjacency
from selftest import random_circuit, random_graph


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_pgs(rng):
    def factory(n, density=0.5):
        return PhasedAdjacency.random(n, rng, density)
    return factory


@pytest.fixture
def make_circuit(rng):
    def factory(n, m, t_gates=0):
        return random_circuit(n, m, rng, t_gates)
    return factory


@pytest.fixture
def make_random_graph(rng):
    def factory(n, density=0.5):
        return random_graph(n, rng, density)
    return factory

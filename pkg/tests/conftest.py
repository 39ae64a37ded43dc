import numpy as np
import pytest

from twinsub import fock


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_state(rng):
    """Random pure states supported where the truncated operators are exact."""
    def make(n_max):
        cutoff = fock.ModeCutoff(n_max)
        idx = fock.exact_subspace(cutoff)
        amps = np.zeros(cutoff.dim, dtype=complex)
        amps[idx] = rng.normal(size=len(idx)) + 1j * rng.normal(size=len(idx))
        return fock.TwoModePureState(cutoff, amps).normalized()
    return make


@pytest.fixture
def random_density(random_state, rng):
    def make(n_max, rank=3):
        weights = rng.random(rank)
        weights /= weights.sum()
        matrix = sum(w * random_state(n_max).to_density().matrix for w in weights)
        return fock.TwoModeDensity(n_max, matrix)
    return make

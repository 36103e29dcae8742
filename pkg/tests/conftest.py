import numpy as np
import pytest

from blockselect.blockmodel import generate_candidates, select_best_rre
from blockselect.data import PlantedSpec, generate_planted

# The seed-fixed planted instance shared by solver/evaluation/acceptance
# tests: 3 blocks of 100 nodes, 20 informative + 80 noise features.  The
# instance and candidate seeds were verified once: several of the 10
# candidates recover the planted blocks exactly and win on RRE by a clear
# margin.
CANONICAL_SPEC = PlantedSpec(
    n=300, k=3, d_informative=20, d_noise=80,
    intra_p=0.35, inter_p=0.02, signal_strength=0.3, seed=1,
)
CANONICAL_CANDIDATES = dict(k=3, count=10, base_seed=1000)


def random_one_hot(rng, n, k):
    """Random one-hot allocation with every block guaranteed non-empty."""
    ids = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    rng.shuffle(ids)
    F = np.zeros((n, k))
    F[np.arange(n), ids] = 1.0
    return F


def random_symmetric(rng, n):
    A = rng.random((n, n))
    A = (A + A.T) / 2.0
    return A


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def planted_net():
    return generate_planted(CANONICAL_SPEC)


@pytest.fixture(scope="session")
def planted_candidates(planted_net):
    return generate_candidates(planted_net.adjacency, **CANONICAL_CANDIDATES)


@pytest.fixture(scope="session")
def planted_blockmodel(planted_candidates):
    return select_best_rre(planted_candidates)

import numpy as np
import pytest

from dualjoin.datagen import generate_tables
from dualjoin.fixtures import load_worked_example
from dualjoin.ring import Ring
from dualjoin.rng import Rng


@pytest.fixture(scope="session")
def example():
    return load_worked_example()


@pytest.fixture
def make_tables():
    def make(n_a, n_b, m_a=2, m_b=3, rho=0.5, seed=0, ell=64):
        return generate_tables(n_a, n_b, m_a, m_b, rho, Rng(f"tables/{seed}"), Ring(ell))
    return make


def naive_apply(mapping, xs):
    """Reference permutation action written out by hand: out[mapping[i]] = xs[i]."""
    out = [None] * len(xs)
    for i, x in enumerate(xs):
        out[mapping[i]] = x
    return out


def rows_as_multiset(x: np.ndarray):
    from collections import Counter
    return Counter(map(tuple, np.asarray(x).tolist()))

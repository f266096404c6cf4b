import numpy as np
import pytest


@pytest.fixture
def rs():
    return np.random.RandomState(20260809)


def random_hermitian(rs, dim):
    a = rs.randn(dim, dim) + 1j * rs.randn(dim, dim)
    return 0.5 * (a + a.conj().T)


def random_density(rs, dim, rank=None):
    rank = rank or dim
    a = rs.randn(dim, rank) + 1j * rs.randn(dim, rank)
    m = a @ a.conj().T
    return m / np.trace(m).real


def random_unit(rs, dim):
    v = rs.randn(dim) + 1j * rs.randn(dim)
    return v / np.linalg.norm(v)

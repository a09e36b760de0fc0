import numpy as np
import pytest


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tucker_bruteforce(core, a, b, c):
    """``core x1 a x2 b x3 c`` by explicit summation over all core indices."""
    d1, d2, d3 = core.shape
    out = np.zeros((a.shape[0], b.shape[0], c.shape[0]), dtype=complex)
    for p in range(d1):
        for q in range(d2):
            for s in range(d3):
                if core[p, q, s] != 0:
                    out += core[p, q, s] * np.einsum("i,j,k->ijk", a[:, p], b[:, q], c[:, s])
    return out

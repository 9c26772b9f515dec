"""Shared hypothesis strategies and random-state helpers."""
import numpy as np
from hypothesis import strategies as st

from rabiqd.statespace import DensityMatrix


def haar_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def random_state(rng, da, db, rank=None):
    d = da * db
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, (da, db))


@st.composite
def random_density(draw, max_dim=4, min_b=1):
    da = draw(st.integers(1, max_dim))
    db = draw(st.integers(min_b, max_dim))
    rank = draw(st.integers(1, da * db))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_state(np.random.default_rng(seed), da, db, rank)


seeds = st.integers(0, 2**32 - 1)

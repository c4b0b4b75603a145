"""Seeded random states, operators and channels for tests and audits."""

import numpy as np
from scipy.stats import unitary_group


def rng_from(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(d, rng):
    return unitary_group.rvs(d, random_state=rng_from(rng)) if d > 1 else np.ones((1, 1), complex)


def ginibre(d, k, rng):
    rng = rng_from(rng)
    return rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))


def random_density(d, rng, rank=None):
    """Hilbert-Schmidt random density matrix of the given rank (full by default)."""
    G = ginibre(d, d if rank is None else rank, rng)
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_pure(d, rng):
    v = ginibre(d, 1, rng)[:, 0]
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_psd(d, rng, scale=1.0):
    G = ginibre(d, d, rng)
    return scale * (G @ G.conj().T) / d


def random_hermitian(d, rng):
    G = ginibre(d, d, rng)
    return (G + G.conj().T) / 2


def random_isometry_channel(d_in, d_out, d_env, rng):
    """Kraus operators of a channel built from a random isometry and a partial trace."""
    V = random_unitary(d_out * d_env, rng)[:, :d_in]
    V = V.reshape(d_out, d_env, d_in)
    return [V[:, e, :] for e in range(d_env)]


def apply_kraus(kraus, X):
    return sum(K @ X @ K.conj().T for K in kraus)

import numpy as np
import pytest

from qsetdiv.sampling import random_density, rng_from


@pytest.fixture
def rng():
    return rng_from(1234)


def pairs(n, dims=(2, 3), seed=0):
    """Seeded full-rank pairs alternating over the given dimensions."""
    rng = rng_from(seed)
    out = []
    for i in range(n):
        d = dims[i % len(dims)]
        out.append((random_density(d, rng), random_density(d, rng)))
    return out


def commuting_pair(d, rng):
    p = rng.dirichlet(np.ones(d))
    q = rng.dirichlet(np.ones(d))
    U = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0]
    return U @ np.diag(p) @ U.conj().T, U @ np.diag(q) @ U.conj().T, p, q


PLUS = np.full((2, 2), 0.5, dtype=complex)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])

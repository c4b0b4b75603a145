import json

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from qsetdiv import (
    HermitianOperator,
    PreconditionError,
    ResourceLimitError,
    SingularOperatorError,
    fidelity_and_distances,
    kron,
    matrix_fn,
    partial_trace,
    partial_transpose,
    pinch,
    spec_count,
    twirl,
)
from qsetdiv.linalg import density, frechet, loewner_exp, permute_factors
from qsetdiv.sampling import random_density, random_hermitian, rng_from


def test_json_round_trip_is_exact_with_hex(rng):
    H = HermitianOperator(random_hermitian(4, rng), (2, 2))
    back = HermitianOperator.from_json(json.loads(json.dumps(H.to_json(exact=True))))
    assert np.array_equal(back.matrix, H.matrix)
    assert back.dims == (2, 2)


def test_non_hermitian_rejected():
    with pytest.raises(PreconditionError):
        HermitianOperator(np.array([[0, 1], [0, 0]]))


def test_bad_factor_dims_rejected():
    with pytest.raises(PreconditionError):
        HermitianOperator(np.eye(4), (3, 2))


def test_density_clips_tiny_negative_and_rejects_large():
    M = np.diag([1.0 + 1e-12, -1e-12])
    assert np.linalg.eigvalsh(density(M).matrix).min() >= 0
    with pytest.raises(PreconditionError):
        density(np.diag([1.1, -0.1]))


def test_log_matches_scipy(rng):
    rho = random_density(3, rng)
    assert np.allclose(matrix_fn(rho, "log2"), sla.logm(rho) / np.log(2), atol=1e-10)


def test_power_matches_scipy(rng):
    rho = random_density(3, rng)
    assert np.allclose(matrix_fn(rho, ("power", 0.37)), sla.fractional_matrix_power(rho, 0.37),
                       atol=1e-10)


def test_log_of_singular_raises_unless_on_support():
    P = np.diag([1.0, 0.0])
    with pytest.raises(SingularOperatorError):
        matrix_fn(P, "ln")
    assert np.allclose(matrix_fn(P, "ln", on_support=True), 0)


def test_positive_part():
    H = np.diag([2.0, -1.0])
    assert np.allclose(matrix_fn(H, "positive_part"), np.diag([2.0, 0.0]))


def test_exp_frechet_matches_scipy(rng):
    S = random_hermitian(4, rng)
    H = random_hermitian(4, rng)
    w, U = np.linalg.eigh(S)
    ours = frechet(U, loewner_exp(w), H)
    ref = sla.expm_frechet(S, H, compute_expm=False)
    assert np.allclose(ours, ref, atol=1e-10)


def test_partial_trace_of_product():
    a, b = np.diag([0.3, 0.7]), np.diag([0.1, 0.2, 0.7])
    assert np.allclose(partial_trace(np.kron(a, b), [0], (2, 3)), a)
    assert np.allclose(partial_trace(np.kron(a, b), [1], (2, 3)), b)


def test_partial_transpose_of_bell_state_has_negative_eigenvalue():
    phi = np.zeros(4)
    phi[[0, 3]] = 1 / np.sqrt(2)
    w = np.linalg.eigvalsh(partial_transpose(np.outer(phi, phi), [1], (2, 2)))
    assert np.isclose(w.min(), -0.5)


def test_out_of_range_subsystem():
    with pytest.raises(PreconditionError):
        partial_trace(np.eye(4), [2], (2, 2))


def test_kron_tracks_dims():
    A = HermitianOperator(np.eye(2))
    B = HermitianOperator(np.eye(3))
    assert kron(A, B).dims == (2, 3)


def test_kron_dimension_cap():
    with pytest.raises(ResourceLimitError):
        kron(np.eye(64), np.eye(128))


def test_spec_count_and_pinch():
    sigma = np.diag([0.25, 0.25, 0.5])
    assert spec_count(sigma) == 2
    X = np.ones((3, 3))
    Y = pinch(X, sigma)
    assert np.allclose(Y, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])


def test_twirl_is_permutation_invariant(rng):
    X = random_hermitian(8, rng)
    T = twirl(X, 3, 2)
    assert np.allclose(permute_factors(T, (1, 2, 0), (2, 2, 2)), T)
    assert spec_count(twirl(random_density(8, rng), 3, 2)) <= 8


def test_twirl_cap():
    with pytest.raises(ResourceLimitError):
        twirl(np.eye(2 ** 7), 7, 2)


def test_fidelity_of_orthogonal_and_equal_states():
    d = fidelity_and_distances(np.diag([1.0, 0]), np.diag([0, 1.0]))
    assert np.isclose(d["F"], 0) and np.isclose(d["trace_dist"], 1)
    rho = np.diag([0.4, 0.6])
    d = fidelity_and_distances(rho, rho)
    assert np.isclose(d["F"], 1) and np.isclose(d["purified"], 0, atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 4))
def test_trace_distance_bounded_by_purified(seed, d):
    rng = rng_from(seed)
    r, s = random_density(d, rng), random_density(d, rng)
    m = fidelity_and_distances(r, s)
    assert m["trace_dist"] <= m["purified"] + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_partial_trace_preserves_trace_and_positivity(seed):
    rng = rng_from(seed)
    rho = random_density(6, rng)
    red = partial_trace(rho, [1], (2, 3))
    assert np.isclose(np.trace(red).real, 1)
    assert np.linalg.eigvalsh(red).min() > -1e-12

import math

import numpy as np
import pytest
from scipy.optimize import linprog

from qsetdiv import PreconditionError
from qsetdiv import divergences as dv
from qsetdiv import sets
from qsetdiv import solvers as sv
from qsetdiv.measured import dm, dm_alpha
from qsetdiv.sampling import random_density, random_pure, rng_from

from conftest import PLUS


def entropy(rho):
    w = np.clip(np.linalg.eigvalsh(rho), 1e-300, None)
    return float(-(w * np.log2(w)).sum())


def single(rho):
    return sets.Singleton(rho)


def test_relative_entropy_of_coherence(rng):
    for d in (2, 3):
        rho = random_density(d, rng)
        expected = entropy(np.diag(np.diag(rho))) - entropy(rho)
        res = sv.d_sets(single(rho), sets.Incoherent((d,)))
        assert res.value == pytest.approx(expected, abs=1e-6)


def test_conditional_entropy(rng):
    rho = random_density(4, rng)
    rho_b = np.trace(rho.reshape(2, 2, 2, 2), axis1=0, axis2=2)
    expected = entropy(rho_b) - entropy(rho)
    res = sv.d_sets(single(rho), sets.Conditional((2, 2), (0,)))
    assert res.value == pytest.approx(expected, abs=1e-6)
    assert sets.Conditional((2, 2), (0,)).contains(res.sigma_witness, 1e-6)


def test_plus_state_against_incoherent_is_one_bit():
    inc = sets.Incoherent((2,))
    assert sv.d_sets(single(PLUS), inc).value == pytest.approx(1, abs=1e-6)
    assert sv.dm_sets(single(PLUS), inc).value == pytest.approx(1, abs=1e-6)
    assert float(sv.dmax_sets(PLUS, inc)) == pytest.approx(1, abs=1e-6)


def test_dmax_to_incoherent_is_log_one_plus_l1_coherence(rng):
    for _ in range(3):
        rho = random_density(2, rng)
        expected = math.log2(1 + 2 * abs(rho[0, 1]))
        assert float(sv.dmax_sets(rho, sets.Incoherent((2,)))) == pytest.approx(expected, abs=1e-6)


def test_dmax_of_maximally_entangled_state_against_rains():
    phi = np.zeros(4)
    phi[[0, 3]] = 1 / np.sqrt(2)
    res = sv.dmax_sets(np.outer(phi, phi), sets.Rains((2, 2), (1,)))
    assert float(res) == pytest.approx(1.0, abs=1e-6)


def test_singleton_sets_reduce_to_pairwise(rng):
    r, s = random_density(3, rng), random_density(3, rng)
    A, B = single(r), single(s)
    assert sv.d_sets(A, B).value == pytest.approx(dv.umegaki(r, s).value, abs=1e-9)
    assert sv.dm_sets(A, B).value == pytest.approx(dm(r, s).value, abs=1e-7)
    for a in (0.3, 0.7, 2.0):
        assert sv.dm_alpha_sets(a, A, B).value == pytest.approx(dm_alpha(a, r, s).value, abs=1e-7)
    for a in (0.6, 1.5):
        assert sv.petz_sets(a, A, B).value == pytest.approx(dv.petz(a, r, s).value, abs=1e-9)
        assert sv.sandwiched_sets(a, A, B).value == pytest.approx(dv.sandwiched(a, r, s).value,
                                                                  abs=1e-9)
    assert sv.dhypo_sets(0.2, A, B).value == pytest.approx(
        dv.beta_and_dhypo(0.2, r, s).dh, abs=1e-6)


def test_measured_between_sets_is_certified_and_below_umegaki(rng):
    rho = random_density(4, rng)
    A, B = single(rho), sets.Conditional((2, 2), (0,))
    res = sv.dm_sets(A, B)
    assert res.value <= res.upper + 1e-9
    assert res.gap < 1e-4
    assert res.value <= sv.d_sets(A, B).value + 1e-7
    # the dual witness is feasible for the polar of B
    assert B.max_linear(res.dual_witness).value <= 1 + 1e-9


def test_ordering_between_petz_umegaki_and_sandwiched(rng):
    rho = random_density(4, rng)
    A, B = single(rho), sets.Conditional((2, 2), (0,))
    assert (sv.petz_sets(0.5, A, B).value <= sv.d_sets(A, B).value + 1e-7
            <= sv.sandwiched_sets(1.5, A, B).value + 2e-7)


def classical_composite_beta(P_list, Q_list, eps):
    """min_m,t t s.t. q.m <= t for every q, p.m >= 1 - eps for every p, 0 <= m <= 1."""
    n = len(P_list[0])
    c = np.r_[np.zeros(n), 1.0]
    A_ub = [np.r_[q, -1.0] for q in Q_list] + [np.r_[-p, 0.0] for p in P_list]
    b_ub = [0.0] * len(Q_list) + [-(1 - eps)] * len(P_list)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(0, 1)] * n + [(None, None)], method="highs")
    return res.fun


def test_commuting_hulls_match_linear_program():
    P = [np.array([0.6, 0.3, 0.1]), np.array([0.5, 0.1, 0.4])]
    Q = [np.array([0.1, 0.3, 0.6]), np.array([0.2, 0.6, 0.2])]
    A = sets.Hull([np.diag(p).astype(complex) for p in P])
    B = sets.Hull([np.diag(q).astype(complex) for q in Q])
    beta = classical_composite_beta(P, Q, 0.2)
    res = sv.dhypo_sets(0.2, A, B)
    assert res.value == pytest.approx(-math.log2(beta), abs=1e-5)
    assert res.gap < 1e-5


def test_noncommuting_real_hulls_match_basis_scan():
    # real qubit hulls: the best test is real, so scanning its eigenbasis and
    # solving the eigenvalues by LP converges to the composite value from below
    rng = rng_from(41)
    gens = []
    for _ in range(4):
        v = rng.normal(size=2)
        v /= np.linalg.norm(v)
        gens.append((0.8 * np.outer(v, v) + 0.1 * np.eye(2)).astype(complex))
    A, B = gens[:2], gens[2:]
    best = math.inf
    for t in np.linspace(0, np.pi, 3600, endpoint=False):
        u = np.array([math.cos(t), math.sin(t)])
        first = [float(np.real(u @ g @ u)) for g in A + B]
        probs = [np.array([x, 1 - x]) for x in first]
        best = min(best, classical_composite_beta(probs[:2], probs[2:], 0.3))
    gap = sv.dhypo_sets(0.3, sets.Hull(A), sets.Hull(B)).value + math.log2(best)
    assert -1e-7 <= gap <= 5e-4


def test_dhypo_against_incoherent_set():
    # frozen from a direct cvxpy SDP over tests against every diagonal state
    res = sv.dhypo_sets(0.1, single(PLUS), sets.Incoherent((2,)))
    assert res.value == pytest.approx(1.1520030934, abs=1e-6)


def test_dmax_smoothed_to_set():
    inc = sets.Incoherent((2,))
    res = sv.dmax_smoothed_to_set(0.1, PLUS, inc)
    assert float(res) < 1.0
    assert np.trace(res.rho_witness).real == pytest.approx(1)
    assert np.abs(res.rho_witness - PLUS).sum() > 0
    with pytest.raises(PreconditionError):
        sv.dmax_smoothed_to_set(1.0, PLUS, inc)


def test_dimension_mismatch_rejected():
    with pytest.raises(PreconditionError):
        sv.d_sets(single(PLUS), sets.Incoherent((3,)))


def test_superadditivity_on_conditional_family():
    A = sets.KindFamily(sets.Singleton(random_density(4, rng_from(3)), (2, 2)))
    rep = sv.superadditivity_check(A, sets.conditional_family(2, 2), 1, 1)
    assert rep.ok, rep


def test_subadditivity_of_umegaki_on_coherence_family():
    A = sets.singleton_family(random_density(2, rng_from(4)))
    rep = sv.subadditivity_check(A, sets.incoherent_family(2), "umegaki", 1, 1)
    assert rep.ok
    assert rep.d_mk == pytest.approx(rep.d_m + rep.d_k, abs=1e-5)


def test_bad_copy_numbers_rejected():
    with pytest.raises(PreconditionError):
        sv.subadditivity_check(sets.incoherent_family(2), sets.incoherent_family(2), "umegaki", 0, 1)

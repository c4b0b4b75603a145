import math

import numpy as np
import pytest

from qsetdiv import PreconditionError, UndefinedRateError
from qsetdiv import resource as rs
from qsetdiv import sets
from qsetdiv import divergences as dv
from qsetdiv.sampling import random_density, rng_from

from conftest import PLUS

DIAG = np.diag([0.7, 0.3]).astype(complex)
ZERO = np.diag([1.0, 0]).astype(complex)
U3 = np.full((3, 3), 1 / 3, dtype=complex)


def iid(rho):
    return sets.singleton_family(rho)


def likelihood_ratio_beta(p, q, eps):
    """Neyman-Pearson: accept outcomes in decreasing p/q order, the last one partially."""
    order = np.argsort(-(p / q), kind="stable")
    need, beta = 1 - eps, 0.0
    for i in order:
        take = min(1.0, need / p[i]) if p[i] > 0 else 0.0
        beta += take * q[i]
        need -= take * p[i]
        if need <= 1e-15:
            break
    return beta


def test_stein_table_of_equal_states():
    rho = random_density(2, rng_from(1))
    for row in rs.stein_table(iid(rho), iid(rho), 0.3, 3):
        assert row.dh_per_n == pytest.approx(-math.log2(0.7) / row.n, abs=1e-8)


def test_commuting_stein_table_matches_classical_tests():
    p, q = np.array([0.8, 0.2]), np.array([0.35, 0.65])
    rows = rs.stein_table(iid(np.diag(p).astype(complex)), iid(np.diag(q).astype(complex)), 0.3, 5)
    for row in rows:
        P, Q = p, q
        for _ in range(row.n - 1):
            P, Q = np.kron(P, p), np.kron(Q, q)
        beta = likelihood_ratio_beta(P, Q, 0.3)
        assert row.dh_per_n == pytest.approx(-math.log2(beta) / row.n, abs=1e-8)
        assert row.within


def test_stein_csv_header():
    rows = rs.stein_table(iid(DIAG), iid(np.eye(2) / 2), 0.3, 2)
    text = rs.stein_csv(rows)
    assert text.splitlines()[0] == "n,dh_per_n,floor,ceiling"
    assert len(text.splitlines()) == 3


def test_global_robustness():
    inc = sets.Incoherent((2,))
    assert rs.global_robustness(DIAG, inc) == pytest.approx(0, abs=1e-7)
    assert rs.global_robustness(PLUS, inc) == pytest.approx(1, abs=1e-6)


def test_robustness_vanishes_exactly_on_free_states():
    inc = sets.Incoherent((2,))
    for rho in (DIAG, PLUS, random_density(2, rng_from(2))):
        assert (rs.global_robustness(rho, inc) <= 1e-6) == inc.contains(rho)


def test_protocol_null_control():
    F = sets.incoherent_family(2)
    P = rs.build_rng_protocol(iid(DIAG), F, iid(DIAG), 1, 1, 0.2)
    rep = rs.protocol_audit(P, iid(DIAG).at(1), iid(DIAG).at(1), F.at(1))
    assert rep.trans_error <= 0.2 + 5e-3
    assert rep.rng_violation <= 5e-3


def test_protocol_on_coherent_input():
    F = sets.incoherent_family(2)
    P = rs.build_rng_protocol(iid(PLUS), F, iid(PLUS), 1, 1, 0.2)
    assert P.M.type1 <= 0.1 + 1e-6
    rho = random_density(2, rng_from(5))
    assert np.trace(P(rho)).real == pytest.approx(1, abs=1e-9)
    rep = rs.protocol_audit(P, iid(PLUS).at(1), iid(PLUS).at(1), F.at(1))
    assert rep.trans_error <= 0.2 + 5e-3
    assert math.isfinite(rep.rng_violation)


def test_protocol_when_input_is_free():
    F = sets.incoherent_family(2)
    P = rs.build_rng_protocol(F, F, F, 1, 1, 0.2)
    rep = rs.protocol_audit(P, F.at(1), F.at(1), F.at(1))
    assert rep.trans_error <= 1e-6 and rep.rng_violation <= 1e-6


def test_constant_map_onto_the_only_member():
    F = sets.Singleton(DIAG)
    P = rs.ProtocolMap(dv.TestOperator(np.eye(2), 0.0, 1.0), DIAG, DIAG)
    rep = rs.protocol_audit(P, F, F, F)
    assert rep.trans_error == pytest.approx(0, abs=1e-12)
    assert rep.rng_violation == pytest.approx(0, abs=1e-7)


def test_target_outside_the_goal_set_is_detected():
    P = rs.ProtocolMap(dv.TestOperator(np.eye(2), 0.0, 1.0), ZERO, ZERO)
    rep = rs.protocol_audit(P, sets.Singleton(PLUS), sets.Singleton(PLUS), sets.Incoherent((2,)))
    assert rep.trans_error == pytest.approx(1 / math.sqrt(2), abs=1e-9)


def test_protocol_rejects_epsilon_one():
    F = sets.incoherent_family(2)
    with pytest.raises(PreconditionError):
        rs.build_rng_protocol(iid(PLUS), F, iid(PLUS), 1, 1, 1.0)


def test_rate_of_a_family_to_itself():
    rb = rs.rate_bounds(iid(PLUS), iid(PLUS), sets.incoherent_family(2), 1)
    assert rb.contains(1.0)


def test_rate_from_qubit_to_qutrit_coherence():
    rb = rs.rate_bounds(iid(PLUS), iid(U3), sets.incoherent_family(2), 2, sets.incoherent_family(3))
    assert rb.contains(1 / math.log2(3))


def test_rate_undefined_for_free_target():
    with pytest.raises(UndefinedRateError):
        rs.rate_bounds(iid(PLUS), iid(DIAG), sets.incoherent_family(2), 1)

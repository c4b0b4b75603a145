import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsetdiv import PreconditionError, ResourceLimitError
from qsetdiv import aep, sets
from qsetdiv.divergences import petz, umegaki
from qsetdiv.sampling import random_density, rng_from

from conftest import PLUS

R = random_density(2, rng_from(11))
S = random_density(2, rng_from(12))


def iid(rho):
    return sets.singleton_family(rho)


def test_single_copy_row():
    row = aep.aep_sandwich(iid(R), iid(S), 1)
    assert row.upper == pytest.approx(float(umegaki(R, S).value), abs=1e-6)
    assert row.lower <= row.upper
    assert row.gap_guarantee == pytest.approx(12 * math.log2(3))
    assert row.upper - row.lower <= row.gap_guarantee


def test_two_copy_row_keeps_upper_and_raises_lower():
    one = aep.aep_sandwich(iid(R), iid(S), 1)
    two = aep.aep_sandwich(iid(R), iid(S), 2)
    assert two.upper == pytest.approx(one.upper, abs=1e-6)
    assert two.lower >= one.lower - 1e-4


def test_equal_families_give_zero():
    est = aep.regularized_estimate(iid(R), iid(R), 2)
    assert est.best_lower == pytest.approx(0, abs=1e-6)
    assert est.best_upper == pytest.approx(0, abs=1e-6)


def test_coherence_interval_contains_one_bit():
    est = aep.regularized_estimate(iid(PLUS), sets.incoherent_family(2), 2)
    assert est.contains(1.0)
    assert est.lower_monotone


def test_dimension_cap_is_enforced():
    with pytest.raises(ResourceLimitError):
        aep.regularized_estimate(iid(R), iid(S), 13)


def test_envelope_function():
    assert aep.envelope_f(8, 0.5) == pytest.approx(12)
    assert aep.envelope_f(8, 1 - 1e-12) < 1e-2
    assert aep.envelope_f(9, 0.3) > aep.envelope_f(8, 0.3)
    assert aep.envelope_f(8, 0.1) > aep.envelope_f(8, 0.3)
    assert aep.envelope_f(10 ** 6, 0.1) / 10 ** 6 < aep.envelope_f(10 ** 3, 0.1) / 10 ** 3
    with pytest.raises(PreconditionError):
        aep.envelope_f(1, 0.5)


def test_envelope_bounds_bracket_the_interval():
    params = aep.EnvelopeParams(C=1.0, Cprime=0.1, d=2, epsilon=0.3)
    lo, hi = aep.envelope_bounds(10, (0.5, 0.6), params)
    assert lo < 5 < 6 < hi
    with pytest.raises(PreconditionError):
        aep.EnvelopeParams(C=-1, Cprime=0.1, d=2, epsilon=0.3)


def instance_constant(m=2):
    rr, ss = np.kron(R, R), np.kron(S, S)
    return 4 * max(float(petz(1.5, rr, ss).value), 0) / m + 1


def test_star_check_passes_with_instance_constant():
    assert aep.assumption_star_check(iid(R), iid(S), 2, instance_constant()).ok


def test_star_check_fails_on_support_violation():
    rep = aep.assumption_star_check(iid(R), iid(np.diag([1.0, 0]).astype(complex)), 1, 10.0)
    assert not rep.ok and rep.worst_value == math.inf


def test_star_check_trivial_for_equal_families():
    assert aep.assumption_star_check(iid(R), iid(R), 1, 0.01).ok


@pytest.mark.parametrize("side", [-1, 1])
def test_window_bounds_hold_at_midpoint(side):
    C = instance_constant()
    alpha = 1 + side * 0.5 / ((2 + C) * 2)
    rep = aep.renyi_window_bounds(iid(R), iid(S), 2, alpha, C)
    assert rep.holds


def test_window_rhs_collapses_near_one():
    C = instance_constant()
    rep = aep.renyi_window_bounds(iid(R), iid(S), 2, 1 - 1e-12, C)
    assert rep.rhs == pytest.approx(aep.gap_guarantee(2, 2), abs=1e-9)


def test_window_bounds_reject_bad_inputs():
    C = instance_constant()
    with pytest.raises(PreconditionError, match="window"):
        aep.renyi_window_bounds(iid(R), iid(S), 2, 0.5, C)
    with pytest.raises(PreconditionError, match="violates"):
        aep.renyi_window_bounds(iid(R), iid(S), 2, 1 - 0.5 / ((2 + 1e-3) * 2), 1e-3)
    with pytest.raises(PreconditionError):
        aep.renyi_window_bounds(iid(R), iid(S), 1, 0.99, C)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_rows_respect_their_invariants(seed):
    rng = rng_from(seed)
    A, B = iid(random_density(2, rng)), iid(random_density(2, rng))
    for m in (1, 2):
        row = aep.aep_sandwich(A, B, m)
        assert row.lower <= row.upper + 1e-4
        assert row.upper - row.lower <= row.gap_guarantee + 1e-4

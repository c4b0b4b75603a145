import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsetdiv import CompositionError, PreconditionError, ResourceLimitError
from qsetdiv import sets
from qsetdiv.io import load_json, operator_to_json, parse_family, parse_set
from qsetdiv.sampling import random_density, random_hermitian, random_psd, rng_from

from conftest import PLUS


def bell(d):
    v = np.zeros(d * d)
    v[[i * d + i for i in range(d)]] = 1 / np.sqrt(d)
    return np.outer(v, v).astype(complex)


@pytest.mark.parametrize("d", [2, 3])
def test_rains_support_on_maximally_entangled_state(d):
    v = sets.Rains((d, d), (1,)).max_linear(bell(d))
    assert v.value == pytest.approx(1 / d, abs=1e-6)


def test_rains_support_matches_sdp():
    # reference: cvxpy/Clarabel on max tr[XY], Y >= 0, ||Y^T_B||_1 <= 1
    X = random_hermitian(4, rng_from(5))
    v = sets.Rains((2, 2), (1,)).max_linear(X)
    assert v.value == pytest.approx(0.6549880038916304, abs=1e-6)
    assert sets.Rains((2, 2), (1,)).contains(v.witness, 1e-6)


def test_mana_support_matches_sdp():
    # reference: cvxpy/Clarabel with Wigner functions built from X^a Z^b and the parity operator
    X = random_hermitian(3, rng_from(6))
    assert sets.Mana(3, 1).max_linear(X).value == pytest.approx(2.557287573721156, abs=1e-6)


def test_phase_point_operators_are_a_frame():
    A = sets.phase_point_operators(3)
    assert len(A) == 9
    assert np.allclose(sum(A) / 3, np.eye(3))
    with pytest.raises(PreconditionError):
        sets.phase_point_operators(2)


def test_stabilizer_state_is_free_for_mana():
    M = sets.Mana(3, 1)
    assert M.contains(np.diag([1.0, 0, 0]).astype(complex))
    strange = np.array([0, 1, -1]) / np.sqrt(2)
    assert not M.contains(np.outer(strange, strange).astype(complex))


def test_incoherent_support():
    v = sets.Incoherent((2,)).max_linear(np.diag([0.2, 0.8]))
    assert v.value == pytest.approx(0.8)
    assert sets.Incoherent((2,)).contains(v.witness)
    assert not sets.Incoherent((2,)).contains(PLUS)


def test_hull_support_and_membership():
    H = sets.Hull([np.diag([1.0, 0]), np.diag([0, 1.0]), PLUS])
    assert H.max_linear(np.diag([3.0, 1.0])).value == pytest.approx(3)
    assert H.min_linear(np.diag([3.0, 1.0])).value == pytest.approx(1)
    assert H.contains(0.5 * PLUS + 0.5 * np.diag([1.0, 0]))
    assert not H.contains(np.array([[0.5, -0.5], [-0.5, 0.5]]))


def test_conditional_support_is_top_eigenvalue_of_marginal(rng):
    C = sets.Conditional((2, 2), (0,))
    X = random_hermitian(4, rng)
    marg = np.trace(X.reshape(2, 2, 2, 2), axis1=0, axis2=2)
    assert C.max_linear(X).value == pytest.approx(np.linalg.eigvalsh(marg)[-1])
    assert C.contains(C.canonical_member())


def test_channel_image_support(rng):
    from qsetdiv.sampling import random_isometry_channel
    kraus = random_isometry_channel(2, 2, 2, rng)
    S = sets.ChannelImage(kraus)
    X = random_hermitian(2, rng)
    adj = sum(K.conj().T @ X @ K for K in kraus)
    assert S.max_linear(X).value == pytest.approx(np.linalg.eigvalsh(adj)[-1])
    assert S.contains(S.apply(random_density(2, rng)))


@pytest.mark.parametrize("S", [
    sets.Incoherent((2, 2)),
    sets.Conditional((2, 2), (0,)),
    sets.Rains((2, 2), (1,)),
    sets.Hull([np.eye(4) / 4, np.diag([1.0, 0, 0, 0])]),
])
def test_support_le_agrees_with_oracle(S, rng):
    import cvxpy as cp
    X = random_hermitian(S.dim, rng)
    t = cp.Variable()
    cons, _ = S.support_le(cp, X, t)
    cp.Problem(cp.Minimize(t), cons).solve(solver="CLARABEL")
    assert float(t.value) == pytest.approx(S.max_linear(X).value, abs=1e-5)


def test_tensor_products():
    T = sets.tensor(sets.Incoherent((2,)), sets.Incoherent((3,)))
    assert T.kind == "incoherent" and T.dims == (2, 3)
    R = sets.tensor_power(sets.Rains((2, 2), (1,)), 2)
    assert R.t_idx == (1, 3)
    with pytest.raises(CompositionError):
        sets.tensor(sets.Hull([np.eye(2) / 2]), sets.Hull([np.eye(2) / 2]))


def test_family_dimension_cap():
    fam = sets.incoherent_family(2)
    with pytest.raises(ResourceLimitError):
        fam.at(13)


@pytest.mark.parametrize("fam", [sets.incoherent_family(2), sets.conditional_family(2, 2),
                                 sets.rains_family(2, 2)], ids=["incoherent", "conditional", "rains"])
def test_validator_passes_on_shipped_families(fam):
    assert sets.validate_assumptions(fam, 1, 1, samples=5).passed


def test_validator_flags_a_family_without_tensor_stability():
    # level 2 misses the products of level-1 members
    fam = sets.HullFamily({1: [np.diag([1.0, 0]).astype(complex), PLUS],
                           2: [np.kron(np.diag([1.0, 0]), np.diag([1.0, 0]))]}, 2)
    rep = sets.validate_assumptions(fam, 1, 1, samples=5)
    assert not rep.passed and rep.violations["tensor_closure"] > 0


def test_json_round_trip_of_sets(tmp_path):
    for S in [sets.Incoherent((2,)), sets.Conditional((2, 3), (0,)), sets.Rains((2, 2), (1,)),
              sets.Mana(3, 1), sets.Singleton(PLUS), sets.Hull([PLUS, np.eye(2) / 2])]:
        back = parse_set(json.loads(json.dumps(S.to_json())))
        assert back.kind == S.kind and back.dim == S.dim


def test_family_descriptors():
    fam = parse_family({"family": "power", "base": {"kind": "incoherent", "dim": 2}})
    assert fam.at(2).dim == 4
    fam = parse_family({"family": "hull", "local_dim": 2,
                        "levels": {"1": [operator_to_json(PLUS)]}})
    assert fam.at(1).kind == "hull"


def test_malformed_descriptor_names_the_field(tmp_path):
    with pytest.raises(PreconditionError, match=r"\$\.generators\[0\]\.dim"):
        parse_set({"kind": "hull", "generators": [{"re": [[1]]}]})
    with pytest.raises(PreconditionError, match="kind"):
        parse_set({"kind": "spheres"})
    with pytest.raises(PreconditionError, match="declared"):
        parse_set({"kind": "incoherent", "factors": [2], "dim": 3})
    p = tmp_path / "bad.json"
    p.write_text('{"kind":\n "incoherent",, }')
    with pytest.raises(PreconditionError, match="line 2"):
        load_json(str(p))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_support_is_sublinear_and_witness_is_member(seed):
    rng = rng_from(seed)
    S = sets.Conditional((2, 2), (0,))
    X, Y = random_hermitian(4, rng), random_hermitian(4, rng)
    hX, hY, hXY = S.max_linear(X), S.max_linear(Y), S.max_linear(X + Y)
    assert hXY.value <= hX.value + hY.value + 1e-9
    assert S.contains(hX.witness, 1e-7)
    assert S.max_linear(2.5 * X).value == pytest.approx(2.5 * hX.value)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_rains_support_bounds_are_consistent(seed):
    rng = rng_from(seed)
    R = sets.Rains((2, 2), (1,))
    X = random_psd(4, rng)
    v = R.max_linear(X)
    assert v.gap >= -1e-12
    assert np.trace(X @ v.witness).real == pytest.approx(v.value, abs=1e-9)
    assert R.contains(v.witness, 1e-6)

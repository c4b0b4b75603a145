"""Convex sets of positive semidefinite operators described by oracles.

A set is queried through its support function ``max_linear`` (h(X) = sup tr[X Y]
over members Y), the reverse support function ``min_linear``, a membership
test, and a cvxpy description of its cone (used only by programs that need
one, such as the max-relative entropy to a set).

Families indexed by the number of copies n are built with the ``*Family``
classes; ``family.at(n)`` returns the set acting on n copies.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import nnls

from . import tolerances as tol
from .errors import CompositionError, PreconditionError
from .linalg import (
    as_array,
    eigh,
    from_eig,
    hermitize,
    kron_power,
    partial_trace,
    partial_transpose,
    permute_factors,
    trace_norm,
)


@dataclass
class SupportValue:
    value: float
    witness: np.ndarray = field(repr=False)
    exact: bool = True
    gap: float = 0.0


def _trace_inner(X, Y):
    return float(np.real(np.einsum("ij,ji->", X, Y)))


def _top_eig(X, largest=True):
    w, U = np.linalg.eigh(hermitize(X))
    i = -1 if largest else 0
    v = U[:, i]
    return float(w[i]), np.outer(v, v.conj())


def _embed(op, keep, dims):
    """I on the factors outside ``keep`` tensored with ``op`` on ``keep``."""
    rest = [i for i in range(len(dims)) if i not in keep]
    order = rest + list(keep)
    d_rest = math.prod(dims[i] for i in rest)
    X = np.kron(np.eye(d_rest), op)
    perm = [order.index(j) for j in range(len(dims))]
    return permute_factors(X, perm, tuple(dims[i] for i in order))


def _permutation_matrix(order, dims):
    """Real matrix P with P (X in ``order`` layout) P^T = X in natural layout."""
    n = math.prod(dims)
    cur_dims = tuple(dims[i] for i in order)
    idx = np.arange(n).reshape(cur_dims)
    perm = [order.index(j) for j in range(len(dims))]
    src = idx.transpose(perm).ravel()
    P = np.zeros((n, n))
    P[np.arange(n), src] = 1.0
    return P


class StateSet:
    kind = "abstract"
    normalized = True
    exact = True

    def __init__(self, dims):
        self.dims = tuple(int(d) for d in dims)
        self.dim = math.prod(self.dims)

    def _check(self, X):
        X = hermitize(as_array(X))
        if X.shape[0] != self.dim:
            raise PreconditionError(f"operator of dimension {X.shape[0]} given to a set on {self.dim}")
        return X

    def max_linear(self, X):
        raise NotImplementedError

    def min_linear(self, X):
        v = self.max_linear(-self._check(X))
        return SupportValue(-v.value, v.witness, v.exact, v.gap)

    def polar_contains(self, W, tol_=1e-9):
        return self.max_linear(W).value <= 1 + tol_

    def contains(self, X, tol_=None):
        raise NotImplementedError

    def cone_constraints(self, cp, Sigma, t):
        """cvxpy constraints stating Sigma lies in t times the set."""
        raise NotImplementedError

    def support_le(self, cp, X, t):
        """cvxpy constraints stating h(X) <= t, plus a function that, after the
        solve, rebuilds from the dual values the member at which the bound is
        active (the barycenter of the optimal multiplier)."""
        raise NotImplementedError

    def sample(self, rng):
        """A member of the set: the witness of a random linear functional."""
        from .sampling import random_hermitian
        return self.max_linear(random_hermitian(self.dim, rng)).witness

    def canonical_member(self):
        """A fixed member used as a starting point for iterative solvers."""
        return self.max_linear(np.eye(self.dim)).witness

    def to_json(self):
        raise NotImplementedError


def _psd_ok(X, tol_):
    w = np.linalg.eigvalsh(hermitize(X))
    return w[0] >= -tol_ * max(1.0, abs(w).max())


class Singleton(StateSet):
    kind = "singleton"

    def __init__(self, state, dims=None):
        state = hermitize(as_array(state))
        super().__init__(dims or getattr(state, "dims", None) or (state.shape[0],))
        self.state = state
        self.normalized = abs(np.trace(state).real - 1) < 1e-9

    @property
    def generators(self):
        return [self.state]

    def max_linear(self, X):
        X = self._check(X)
        return SupportValue(_trace_inner(X, self.state), self.state)

    def min_linear(self, X):
        return self.max_linear(X)

    def contains(self, X, tol_=None):
        tol_ = tol.get("membership") if tol_ is None else tol_
        return np.abs(as_array(X) - self.state).max() <= tol_

    def cone_constraints(self, cp, Sigma, t):
        return [Sigma == t * self.state]

    def support_le(self, cp, X, t):
        return [cp.real(cp.trace(self.state @ X)) <= t], lambda cons: self.state

    def canonical_member(self):
        return self.state

    def to_json(self):
        from .io import operator_to_json
        return {"kind": self.kind, "dim": self.dim, "state": operator_to_json(self.state, self.dims)}


class Hull(StateSet):
    kind = "hull"

    def __init__(self, generators, dims=None):
        gens = [hermitize(as_array(g)) for g in generators]
        if not gens:
            raise PreconditionError("a hull needs at least one generator")
        super().__init__(dims or (gens[0].shape[0],))
        if any(g.shape != gens[0].shape for g in gens):
            raise PreconditionError("hull generators differ in dimension")
        self.generators = gens
        self.normalized = all(abs(np.trace(g).real - 1) < 1e-9 for g in gens)

    def max_linear(self, X):
        X = self._check(X)
        vals = [_trace_inner(X, g) for g in self.generators]
        i = int(np.argmax(vals))
        return SupportValue(vals[i], self.generators[i])

    def min_linear(self, X):
        X = self._check(X)
        vals = [_trace_inner(X, g) for g in self.generators]
        i = int(np.argmin(vals))
        return SupportValue(vals[i], self.generators[i])

    def weights_for(self, X):
        """Nonnegative weights summing to one that best reproduce X."""
        A = np.array([np.concatenate([g.real.ravel(), g.imag.ravel()]) for g in self.generators]).T
        b = np.concatenate([as_array(X).real.ravel(), as_array(X).imag.ravel()])
        big = 1e3
        A = np.vstack([A, big * np.ones(A.shape[1])])
        b = np.concatenate([b, [big]])
        w, res = nnls(A, b)
        return w, res

    def contains(self, X, tol_=None):
        tol_ = tol.get("membership") if tol_ is None else tol_
        _, res = self.weights_for(X)
        return res <= tol_

    def cone_constraints(self, cp, Sigma, t):
        w = cp.Variable(len(self.generators), nonneg=True)
        return [Sigma == sum(w[i] * g for i, g in enumerate(self.generators)), cp.sum(w) == t]

    def support_le(self, cp, X, t):
        cons = [cp.real(cp.trace(g @ X)) <= t for g in self.generators]

        def recover(cs):
            y = np.array([max(float(c.dual_value), 0.0) for c in cs])
            if y.sum() <= 0:
                return self.generators[0]
            return sum(w * g for w, g in zip(y / y.sum(), self.generators))
        return cons, recover

    def to_json(self):
        from .io import operator_to_json
        return {"kind": self.kind, "dim": self.dim,
                "generators": [operator_to_json(g, self.dims) for g in self.generators]}


class Conditional(StateSet):
    """Operators I_A (x) rho_B with rho_B a density operator on the B factors.

    ``identity_factors`` lists the positions of the A factors among ``dims``.
    """

    kind = "conditional"
    normalized = False

    def __init__(self, dims, identity_factors):
        super().__init__(dims)
        self.a_idx = tuple(sorted(int(i) for i in identity_factors))
        self.b_idx = tuple(i for i in range(len(self.dims)) if i not in self.a_idx)
        if not self.b_idx:
            raise PreconditionError("conditional set needs at least one B factor")
        self.d_a = math.prod(self.dims[i] for i in self.a_idx)

    def _reduce(self, X):
        return partial_trace(X, self.b_idx, self.dims)

    def _lift(self, Y):
        return _embed(Y, self.b_idx, self.dims)

    def max_linear(self, X):
        val, P = _top_eig(self._reduce(self._check(X)))
        return SupportValue(val, self._lift(P))

    def min_linear(self, X):
        val, P = _top_eig(self._reduce(self._check(X)), largest=False)
        return SupportValue(val, self._lift(P))

    def contains(self, X, tol_=None):
        tol_ = tol.get("membership") if tol_ is None else tol_
        X = as_array(X)
        Y = self._reduce(X) / self.d_a
        return (np.abs(self._lift(Y) - X).max() <= tol_ and _psd_ok(Y, tol_)
                and abs(np.trace(Y).real - 1) <= tol_)

    def cone_constraints(self, cp, Sigma, t):
        db = self.dim // self.d_a
        Y = cp.Variable((db, db), hermitian=True)
        P = _permutation_matrix(list(self.a_idx) + list(self.b_idx), self.dims)
        lifted = P @ cp.kron(np.eye(self.d_a), Y) @ P.T
        return [Y >> 0, cp.real(cp.trace(Y)) == t, Sigma == lifted]

    def support_le(self, cp, X, t):
        red, dims = X, list(self.dims)
        for i in sorted(self.a_idx, reverse=True):
            red = cp.partial_trace(red, dims, axis=i)
            dims.pop(i)
        db = self.dim // self.d_a
        cons = [red << t * np.eye(db)]

        def recover(cs):
            Z = hermitize(cs[0].dual_value)
            return self._lift(Z / np.trace(Z).real)
        return cons, recover

    def canonical_member(self):
        db = self.dim // self.d_a
        return self._lift(np.eye(db) / db)

    def to_json(self):
        return {"kind": self.kind, "dim": self.dim, "factors": list(self.dims),
                "identity_factors": list(self.a_idx)}


class ChannelImage(StateSet):
    """Images N(rho) of all input density operators under a channel given by Kraus operators."""

    kind = "channel_image"

    def __init__(self, kraus, dims=None, input_dims=None):
        kraus = [np.asarray(K, dtype=complex) for K in kraus]
        d_out, d_in = kraus[0].shape
        super().__init__(dims or (d_out,))
        self.kraus = kraus
        self.input_dims = tuple(input_dims or (d_in,))
        self.d_in = d_in
        tp = sum(K.conj().T @ K for K in kraus)
        if np.abs(tp - np.eye(d_in)).max() > 1e-8:
            raise PreconditionError("Kraus operators are not trace preserving")

    def apply(self, rho):
        return sum(K @ rho @ K.conj().T for K in self.kraus)

    def adjoint(self, X):
        return sum(K.conj().T @ X @ K for K in self.kraus)

    def max_linear(self, X):
        val, P = _top_eig(self.adjoint(self._check(X)))
        return SupportValue(val, self.apply(P))

    def min_linear(self, X):
        val, P = _top_eig(self.adjoint(self._check(X)), largest=False)
        return SupportValue(val, self.apply(P))

    def preimage(self, X, iters=2000):
        """A density operator rho with N(rho) closest to X (alternating projections)."""
        import cvxpy as cp
        R = cp.Variable((self.d_in, self.d_in), hermitian=True)
        out = sum(K @ R @ K.conj().T for K in self.kraus)
        prob = cp.Problem(cp.Minimize(cp.norm(out - as_array(X), "fro")),
                          [R >> 0, cp.real(cp.trace(R)) == 1])
        prob.solve(solver=cp.CLARABEL)
        return hermitize(R.value), float(prob.value)

    def contains(self, X, tol_=None):
        tol_ = tol.get("membership") if tol_ is None else tol_
        _, res = self.preimage(X)
        return res <= max(tol_, 1e-6)

    def cone_constraints(self, cp, Sigma, t):
        Y = cp.Variable((self.d_in, self.d_in), hermitian=True)
        return [Y >> 0, cp.real(cp.trace(Y)) == t,
                Sigma == sum(K @ Y @ K.conj().T for K in self.kraus)]

    def support_le(self, cp, X, t):
        cons = [sum(K.conj().T @ X @ K for K in self.kraus) << t * np.eye(self.d_in)]

        def recover(cs):
            Z = hermitize(cs[0].dual_value)
            return self.apply(Z / np.trace(Z).real)
        return cons, recover

    def canonical_member(self):
        return self.apply(np.eye(self.d_in) / self.d_in)

    def to_json(self):
        from .io import matrix_to_json
        return {"kind": self.kind, "dim": self.dim, "factors": list(self.dims),
                "input_factors": list(self.input_dims),
                "kraus": [matrix_to_json(K) for K in self.kraus]}


class Incoherent(StateSet):
    """Density operators diagonal in the computational (product) basis."""

    kind = "incoherent"

    def max_linear(self, X):
        diag = self._check(X).diagonal().real
        i = int(np.argmax(diag))
        W = np.zeros((self.dim, self.dim), complex)
        W[i, i] = 1
        return SupportValue(float(diag[i]), W)

    def min_linear(self, X):
        diag = self._check(X).diagonal().real
        i = int(np.argmin(diag))
        W = np.zeros((self.dim, self.dim), complex)
        W[i, i] = 1
        return SupportValue(float(diag[i]), W)

    def contains(self, X, tol_=None):
        tol_ = tol.get("membership") if tol_ is None else tol_
        X = as_array(X)
        off = X - np.diag(X.diagonal())
        return (np.abs(off).max(initial=0) <= tol_ and X.diagonal().real.min() >= -tol_
                and abs(np.trace(X).real - 1) <= tol_)

    def cone_constraints(self, cp, Sigma, t):
        mask = 1 - np.eye(self.dim)
        return [cp.multiply(mask, Sigma) == 0, cp.real(cp.diag(Sigma)) >= 0,
                cp.real(cp.trace(Sigma)) == t]

    def support_le(self, cp, X, t):
        cons = [cp.real(cp.diag(X)) <= t]

        def recover(cs):
            y = np.clip(np.asarray(cs[0].dual_value, float), 0, None)
            return np.diag(y / y.sum()).astype(complex)
        return cons, recover

    def canonical_member(self):
        return np.eye(self.dim, dtype=complex) / self.dim

    def to_json(self):
        return {"kind": self.kind, "dim": self.dim, "factors": list(self.dims)}


def _project_l1_ball(v, radius=1.0):
    """Euclidean projection of a real vector onto the l1 ball."""
    if np.abs(v).sum() <= radius:
        return v
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u * np.arange(1, len(u) + 1) > (css - radius))[0][-1]
    theta = (css[k] - radius) / (k + 1)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0)


def _project_psd(X):
    w, U = np.linalg.eigh(hermitize(X))
    return from_eig(np.clip(w, 0, None), U)


class _NormBallSet(StateSet):
    """PSD operators Y with ||T(Y)|| <= 1 for a linear isometry-like map T.

    The support function is computed by ADMM on the splitting Y = Z with Y
    PSD and Z in the norm ball. Every iterate yields a feasible point (lower
    bound) and a dual certificate (upper bound); the loop stops once the two
    agree to ``fw_gap``.
    """

    normalized = False
    exact = False

    def ball_norm(self, Y):
        raise NotImplementedError

    def project_ball(self, Y):
        raise NotImplementedError

    def dual_norm(self, Y):
        raise NotImplementedError

    def _feasible(self, Y):
        Y = _project_psd(Y)
        n = self.ball_norm(Y)
        return Y / n if n > 1 else Y

    def _normalized_dual(self, Y):
        # the multiplier of Lam >= X sits on the unit sphere of the norm when the bound is active
        Y = _project_psd(Y)
        n = self.ball_norm(Y)
        return Y / n if n > 0 else Y

    def max_linear(self, X):
        X = self._check(X)
        d = self.dim
        if np.linalg.eigvalsh(X)[-1] <= 0:
            return SupportValue(0.0, np.zeros((d, d), complex), True, 0.0)
        scale = max(np.abs(X).max(), 1e-300)
        Xs = X / scale
        mu = 1.0
        Z = np.eye(d, dtype=complex) / d
        U = np.zeros_like(Z)
        best_lo, best_W = -np.inf, None
        best_hi = np.inf
        gap_tol = tol.get("fw_gap")
        it = 0
        for it in range(1, tol.get("fw_max_iter") + 1):
            Y = _project_psd(Z - U + Xs / mu)
            Z_old = Z
            Z = self.project_ball(Y + U)
            U = U + Y - Z
            if it % 10 == 0 or it < 10:
                cand = self._feasible(Z)
                lo = _trace_inner(Xs, cand)
                if lo > best_lo:
                    best_lo, best_W = lo, cand
                Lam = mu * U
                Lam = Lam + _project_psd(Xs - Lam)
                best_hi = min(best_hi, self.dual_norm(Lam))
                if best_hi - best_lo <= gap_tol / scale * max(1.0, abs(best_hi) * scale):
                    break
                r = np.linalg.norm(Y - Z)
                s = mu * np.linalg.norm(Z - Z_old)
                if r > 10 * s:
                    mu *= 2
                    U /= 2
                elif s > 10 * r:
                    mu /= 2
                    U *= 2
        gap = (best_hi - best_lo) * scale
        return SupportValue(best_lo * scale, best_W, gap <= gap_tol * max(1.0, abs(best_hi) * scale), gap)

    def contains(self, X, tol_=None):
        tol_ = tol.get("membership") if tol_ is None else tol_
        X = as_array(X)
        return _psd_ok(X, tol_) and self.ball_norm(X) <= 1 + tol_

    def canonical_member(self):
        # I/dim has trace norm one after partial transposition and a flat Wigner function
        return np.eye(self.dim, dtype=complex) / self.dim


class Rains(_NormBallSet):
    """PSD operators whose partial transpose on the B factors has trace norm <= 1."""

    kind = "rains"

    def __init__(self, dims, transposed_factors):
        super().__init__(dims)
        self.t_idx = tuple(sorted(int(i) for i in transposed_factors))

    def _pt(self, Y):
        return partial_transpose(Y, self.t_idx, self.dims)

    def ball_norm(self, Y):
        return trace_norm(self._pt(Y))

    def project_ball(self, Y):
        w, U = np.linalg.eigh(hermitize(self._pt(Y)))
        return self._pt(from_eig(_project_l1_ball(w), U))

    def dual_norm(self, Y):
        return float(np.abs(np.linalg.eigvalsh(hermitize(self._pt(Y)))).max())

    def cone_constraints(self, cp, Sigma, t):
        T = Sigma
        for i in self.t_idx:
            T = cp.partial_transpose(T, dims=list(self.dims), axis=i)
        P = cp.Variable((self.dim, self.dim), hermitian=True)
        N = cp.Variable((self.dim, self.dim), hermitian=True)
        return [Sigma >> 0, P >> 0, N >> 0, T == P - N, cp.real(cp.trace(P + N)) <= t]

    def support_le(self, cp, X, t):
        # h(X) = min ||Lam^T||_inf over Lam >= X
        Lam = cp.Variable((self.dim, self.dim), hermitian=True)
        T = Lam
        for i in self.t_idx:
            T = cp.partial_transpose(T, dims=list(self.dims), axis=i)
        eye = np.eye(self.dim)
        cons = [Lam >> X, T << t * eye, T >> -t * eye]

        def recover(cs):
            return self._normalized_dual(cs[0].dual_value)
        return cons, recover

    def to_json(self):
        return {"kind": self.kind, "dim": self.dim, "factors": list(self.dims),
                "transposed_factors": list(self.t_idx)}


def phase_point_operators(d):
    """Standard phase-point operators A_(a,b) of an odd-dimensional qudit."""
    if d % 2 == 0 or d < 3:
        raise PreconditionError("phase-point operators need an odd dimension >= 3")
    omega = np.exp(2j * np.pi / d)
    Xs = np.roll(np.eye(d), 1, axis=0)
    Zs = np.diag(omega ** np.arange(d))
    parity = np.zeros((d, d))
    for k in range(d):
        parity[(-k) % d, k] = 1
    ops = []
    for a in range(d):
        for b in range(d):
            D = np.linalg.matrix_power(Zs, a) @ np.linalg.matrix_power(Xs, b)
            ops.append(D @ parity @ D.conj().T)
    return ops


class Mana(_NormBallSet):
    """PSD operators on n qudits whose discrete Wigner function has l1 norm <= 1."""

    kind = "mana"

    def __init__(self, d, n=1):
        super().__init__((d,) * n)
        self.d, self.n = d, n
        single = phase_point_operators(d)
        ops = single
        for _ in range(n - 1):
            ops = [np.kron(A, B) for A in ops for B in single]
        self.ops = ops
        self.basis = np.array([A.T.ravel() for A in ops])  # rows give tr[A_u Y]

    def wigner(self, Y):
        return np.real(self.basis @ as_array(Y).ravel()) / self.dim

    def from_wigner(self, W):
        return np.tensordot(W, np.array(self.ops), axes=1)

    def ball_norm(self, Y):
        return float(np.abs(self.wigner(Y)).sum())

    def project_ball(self, Y):
        return self.from_wigner(_project_l1_ball(self.wigner(Y)))

    def dual_norm(self, Y):
        return float(np.abs(self.wigner(Y)).max() * self.dim)

    def cone_constraints(self, cp, Sigma, t):
        vals = cp.hstack([cp.real(cp.trace(A @ Sigma)) for A in self.ops]) / self.dim
        return [Sigma >> 0, cp.norm1(vals) <= t]

    def support_le(self, cp, X, t):
        Lam = cp.Variable((self.dim, self.dim), hermitian=True)
        vals = cp.hstack([cp.real(cp.trace(A @ Lam)) for A in self.ops])
        cons = [Lam >> X, vals <= t, vals >= -t]

        def recover(cs):
            return self._normalized_dual(cs[0].dual_value)
        return cons, recover

    def to_json(self):
        return {"kind": self.kind, "dim": self.dim, "qudit_dim": self.d, "copies": self.n}


# --- composition ---------------------------------------------------------

def tensor(S1, S2):
    """The set of the same kind on the combined system.

    For singletons this is the product state; for the structured kinds it is
    the kind's definition on the joint factors (for example the Rains set with
    all B factors partially transposed). Hulls are refused.
    """
    if S1.kind != S2.kind:
        raise CompositionError(f"cannot tensor {S1.kind} with {S2.kind}")
    k = S1.kind
    dims = S1.dims + S2.dims
    off = len(S1.dims)
    if k == "singleton":
        return Singleton(np.kron(S1.state, S2.state), dims)
    if k == "incoherent":
        return Incoherent(dims)
    if k == "conditional":
        return Conditional(dims, S1.a_idx + tuple(i + off for i in S2.a_idx))
    if k == "rains":
        return Rains(dims, S1.t_idx + tuple(i + off for i in S2.t_idx))
    if k == "mana":
        if S1.d != S2.d:
            raise CompositionError("mana sets on different qudit dimensions")
        return Mana(S1.d, S1.n + S2.n)
    if k == "channel_image":
        kraus = [np.kron(A, B) for A in S1.kraus for B in S2.kraus]
        return ChannelImage(kraus, dims, S1.input_dims + S2.input_dims)
    raise CompositionError(f"sets of kind {k} have no exact tensor product")


def tensor_power(S, n):
    if n < 1:
        raise PreconditionError("tensor power needs n >= 1")
    out = S
    for _ in range(n - 1):
        out = tensor(out, S)
    return out


# --- families ------------------------------------------------------------

class SetFamily:
    """A sequence of sets indexed by the number of copies."""

    kind = "abstract"

    def __init__(self, copy_dims):
        self.copy_dims = tuple(copy_dims)
        self.local_dim = math.prod(self.copy_dims)

    def at(self, n):
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError


class KindFamily(SetFamily):
    """Family generated as tensor powers of a single-copy set of an exact kind."""

    def __init__(self, base):
        super().__init__(base.dims)
        self.base = base
        self.kind = base.kind
        self._cache = {}

    def at(self, n):
        if n < 1:
            raise PreconditionError("families are indexed from n = 1")
        if self.local_dim ** n > tol.get("dim_cap"):
            from .errors import ResourceLimitError
            raise ResourceLimitError(f"{self.local_dim}^{n} exceeds the dimension cap")
        if n not in self._cache:
            if self.kind == "singleton":
                self._cache[n] = Singleton(kron_power(self.base.state, n), self.base.dims * n)
            else:
                self._cache[n] = tensor_power(self.base, n)
        return self._cache[n]

    def to_json(self):
        return {"family": "power", "base": self.base.to_json()}


def singleton_family(rho, dims=None):
    return KindFamily(Singleton(rho, dims))


def incoherent_family(d):
    return KindFamily(Incoherent((d,)))


def conditional_family(d_a, d_b):
    return KindFamily(Conditional((d_a, d_b), (0,)))


def rains_family(d_a, d_b):
    return KindFamily(Rains((d_a, d_b), (1,)))


def mana_family(d):
    return KindFamily(Mana(d, 1))


def channel_image_family(kraus):
    return KindFamily(ChannelImage(kraus))


class HullFamily(SetFamily):
    """Hull sets given explicitly per number of copies: ``levels[n]`` is a list
    of generators on n copies, or ``levels`` is a callable n -> generators."""

    kind = "hull"

    def __init__(self, levels, local_dim):
        super().__init__((local_dim,))
        self.levels = levels

    def at(self, n):
        gens = self.levels(n) if callable(self.levels) else self.levels[n]
        return Hull(gens, (self.local_dim,) * n)

    def to_json(self):
        from .io import operator_to_json
        if callable(self.levels):
            raise PreconditionError("hull family given by a callable cannot be serialized")
        return {"family": "hull", "local_dim": self.local_dim,
                "levels": {str(n): [operator_to_json(g) for g in gens]
                           for n, gens in self.levels.items()}}


def iid_hull_family(generators):
    """Hull of the n-fold tensor powers of the given single-copy generators."""
    gens = [hermitize(as_array(g)) for g in generators]
    return HullFamily(lambda n: [kron_power(g, n) for g in gens], gens[0].shape[0])


# --- assumption validation ----------------------------------------------

def permute_copies(X, perm, copy_dims, n):
    k = len(copy_dims)
    factor_perm = [perm[c] * k + j for c in range(n) for j in range(k)]
    return permute_factors(X, factor_perm, tuple(copy_dims) * n)


@dataclass
class AssumptionReport:
    m: int
    k: int
    samples: int
    violations: dict
    max_ratio: float
    passed: bool
    details: list = field(default_factory=list)


def validate_assumptions(family, m, k, samples=20, seed=0):
    """Sampled checks of permutation invariance, tensor stability and
    sub-multiplicativity of the support function for a family.

    Passing is evidence, not proof.
    """
    from .sampling import random_hermitian, random_psd, rng_from

    rng = rng_from(seed)
    n = m + k
    Am, Ak, An = family.at(m), family.at(k), family.at(n)
    viol = {"permutation": 0, "tensor_closure": 0, "submultiplicative": 0}
    details = []
    rel = tol.get("submultiplicativity")
    max_ratio = 0.0
    perms = list(itertools.permutations(range(n)))
    for s in range(samples):
        X = random_hermitian(An.dim, rng)
        h = An.max_linear(X)
        perm = perms[rng.integers(len(perms))]
        hp = An.max_linear(permute_copies(X, perm, family.copy_dims, n))
        slack = 1e-7 * max(1.0, abs(h.value)) + h.gap + hp.gap
        if abs(h.value - hp.value) > slack:
            viol["permutation"] += 1
            details.append(("permutation", s, h.value, hp.value))

        y1 = Am.sample(rng)
        y2 = Ak.sample(rng)
        if not An.contains(np.kron(y1, y2), 1e-6):
            viol["tensor_closure"] += 1
            details.append(("tensor_closure", s))

        X1 = random_psd(Am.dim, rng)
        X2 = random_psd(Ak.dim, rng)
        h1, h2 = Am.max_linear(X1), Ak.max_linear(X2)
        h12 = An.max_linear(np.kron(X1, X2))
        bound = h1.value * h2.value
        ratio = h12.value / bound if bound > 0 else (math.inf if h12.value > 0 else 0.0)
        max_ratio = max(max_ratio, ratio)
        slack = bound * rel + h12.gap + abs(h1.gap * h2.value) + abs(h2.gap * h1.value)
        if h12.value > bound + slack:
            viol["submultiplicative"] += 1
            details.append(("submultiplicative", s, h12.value, bound))
    return AssumptionReport(m, k, samples, viol, max_ratio, not any(viol.values()), details)
